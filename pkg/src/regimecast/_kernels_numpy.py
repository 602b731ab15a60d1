"""Pure numpy implementations of the numerical hot kernels.

Mirrors the compiled extension in regimecast._kernels one to one; the
dispatcher in regimecast.kernels picks whichever is importable. All arrays
are float64 and C-contiguous. Activation codes: 0 = tanh, 1 = relu.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"


def assign_labels(points, centers):
    """Nearest-center assignment. Returns (labels, squared distances).

    Ties go to the lowest center index.
    """
    diff = points[:, None, :] - centers[None, :, :]
    d2 = np.einsum("nkd,nkd->nk", diff, diff)
    labels = np.argmin(d2, axis=1)
    return labels.astype(np.int64), d2[np.arange(len(points)), labels]


def linear_predict(x, w, b):
    return x @ w + b


def linear_grad(x, y, w, b, l2):
    """Full-batch loss and gradient for the affine model.

    loss = mean((x.w + b - y)^2) + l2 * (|w|^2 + b^2)
    """
    n = x.shape[0]
    r = x @ w + b - y
    loss = float(r @ r) / n + l2 * (float(w @ w) + b * b)
    gw = (2.0 / n) * (x.T @ r) + 2.0 * l2 * w
    gb = (2.0 / n) * float(r.sum()) + 2.0 * l2 * b
    return loss, gw, gb


def linear_sgd_epoch(x, y, order, batch_size, lr, l2, w, b):
    """One pass of mini-batch gradient descent, updating w and b in place.

    b is a length-1 array so the update is visible to the caller. Returns
    the mean of the pre-update batch losses.
    """
    n = x.shape[0]
    total = 0.0
    nb = 0
    for s in range(0, n, batch_size):
        idx = order[s : s + batch_size]
        xb = x[idx]
        yb = y[idx]
        m = len(idx)
        r = xb @ w + b[0] - yb
        total += float(r @ r) / m + l2 * (float(w @ w) + b[0] * b[0])
        gw = (2.0 / m) * (xb.T @ r) + 2.0 * l2 * w
        gb = (2.0 / m) * float(r.sum()) + 2.0 * l2 * b[0]
        w -= lr * gw
        b[0] -= lr * gb
        nb += 1
    return total / nb


def _act(z, activation):
    if activation == 0:
        return np.tanh(z)
    return np.maximum(z, 0.0)


def mlp_predict(x, w1, b1, w2, b2, activation):
    h = _act(x @ w1 + b1, activation)
    return h @ w2 + b2


def mlp_grad(x, y, w1, b1, w2, b2, activation, l2):
    """Full-batch loss and backprop gradients for the one-hidden-layer net."""
    n = x.shape[0]
    z = x @ w1 + b1
    h = _act(z, activation)
    r = h @ w2 + b2 - y
    sq = float(w1.ravel() @ w1.ravel()) + float(b1 @ b1) + float(w2 @ w2) + b2 * b2
    loss = float(r @ r) / n + l2 * sq

    dy = (2.0 / n) * r
    gw2 = h.T @ dy + 2.0 * l2 * w2
    gb2 = float(dy.sum()) + 2.0 * l2 * b2
    dh = np.outer(dy, w2)
    if activation == 0:
        dz = dh * (1.0 - h * h)
    else:
        dz = dh * (z > 0.0)
    gw1 = x.T @ dz + 2.0 * l2 * w1
    gb1 = dz.sum(axis=0) + 2.0 * l2 * b1
    return loss, gw1, gb1, gw2, gb2


def mlp_sgd_epoch(x, y, order, batch_size, lr, l2, w1, b1, w2, b2, activation):
    """One mini-batch pass updating all parameters in place.

    b2 is a length-1 array. Returns the mean pre-update batch loss.
    """
    n = x.shape[0]
    total = 0.0
    nb = 0
    for s in range(0, n, batch_size):
        idx = order[s : s + batch_size]
        xb = x[idx]
        yb = y[idx]
        m = len(idx)
        z = xb @ w1 + b1
        h = _act(z, activation)
        r = h @ w2 + b2[0] - yb
        sq = float(w1.ravel() @ w1.ravel()) + float(b1 @ b1) + float(w2 @ w2) + b2[0] * b2[0]
        total += float(r @ r) / m + l2 * sq

        dy = (2.0 / m) * r
        gw2 = h.T @ dy + 2.0 * l2 * w2
        gb2 = float(dy.sum()) + 2.0 * l2 * b2[0]
        dh = np.outer(dy, w2)
        if activation == 0:
            dz = dh * (1.0 - h * h)
        else:
            dz = dh * (z > 0.0)
        gw1 = xb.T @ dz + 2.0 * l2 * w1
        gb1 = dz.sum(axis=0) + 2.0 * l2 * b1

        w1 -= lr * gw1
        b1 -= lr * gb1
        w2 -= lr * gw2
        b2[0] -= lr * gb2
        nb += 1
    return total / nb
