# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical hot kernels.

Signature-compatible with regimecast._kernels_numpy; see that module for the
contracts. Activation codes: 0 = tanh, 1 = relu.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport tanh as ctanh

cnp.import_array()

BACKEND = "native"


def assign_labels(const double[:, ::1] points, const double[:, ::1] centers):
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t d = points.shape[1]
    cdef Py_ssize_t k = centers.shape[0]
    labels_arr = np.empty(n, dtype=np.int64)
    dist_arr = np.empty(n, dtype=np.float64)
    cdef cnp.int64_t[::1] labels = labels_arr
    cdef double[::1] dist = dist_arr
    cdef Py_ssize_t i, j, c
    cdef double best, acc, diff
    cdef Py_ssize_t best_c
    for i in range(n):
        best = -1.0
        best_c = 0
        for c in range(k):
            acc = 0.0
            for j in range(d):
                diff = points[i, j] - centers[c, j]
                acc += diff * diff
            if best < 0.0 or acc < best:
                best = acc
                best_c = c
        labels[i] = best_c
        dist[i] = best
    return labels_arr, dist_arr


def linear_predict(const double[:, ::1] x, const double[::1] w, double b):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(n):
        acc = b
        for j in range(d):
            acc += x[i, j] * w[j]
        out[i] = acc
    return out_arr


def linear_grad(const double[:, ::1] x, const double[::1] y, const double[::1] w,
                double b, double l2):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    gw_arr = np.zeros(d, dtype=np.float64)
    cdef double[::1] gw = gw_arr
    cdef Py_ssize_t i, j
    cdef double acc, r, sse = 0.0, rsum = 0.0, wsq = 0.0
    for i in range(n):
        acc = b
        for j in range(d):
            acc += x[i, j] * w[j]
        r = acc - y[i]
        sse += r * r
        rsum += r
        for j in range(d):
            gw[j] += x[i, j] * r
    for j in range(d):
        wsq += w[j] * w[j]
        gw[j] = (2.0 / n) * gw[j] + 2.0 * l2 * w[j]
    cdef double loss = sse / n + l2 * (wsq + b * b)
    cdef double gb = (2.0 / n) * rsum + 2.0 * l2 * b
    return loss, gw_arr, gb


def linear_sgd_epoch(const double[:, ::1] x, const double[::1] y, const cnp.int64_t[::1] order,
                     Py_ssize_t batch_size, double lr, double l2,
                     double[::1] w, double[::1] b):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t s, i, j, m, row
    cdef double acc, r, sse, rsum, wsq, total = 0.0
    cdef Py_ssize_t nb = 0
    gw_arr = np.zeros(d, dtype=np.float64)
    rbuf_arr = np.zeros(batch_size, dtype=np.float64)
    cdef double[::1] gw = gw_arr
    cdef double[::1] rbuf = rbuf_arr
    for s in range(0, n, batch_size):
        m = batch_size if s + batch_size <= n else n - s
        sse = 0.0
        rsum = 0.0
        for j in range(d):
            gw[j] = 0.0
        for i in range(m):
            row = order[s + i]
            acc = b[0]
            for j in range(d):
                acc += x[row, j] * w[j]
            r = acc - y[row]
            rbuf[i] = r
            sse += r * r
            rsum += r
        for i in range(m):
            row = order[s + i]
            r = rbuf[i]
            for j in range(d):
                gw[j] += x[row, j] * r
        wsq = 0.0
        for j in range(d):
            wsq += w[j] * w[j]
        total += sse / m + l2 * (wsq + b[0] * b[0])
        for j in range(d):
            w[j] -= lr * ((2.0 / m) * gw[j] + 2.0 * l2 * w[j])
        b[0] -= lr * ((2.0 / m) * rsum + 2.0 * l2 * b[0])
        nb += 1
    return total / nb


cdef inline double _act_one(double z, int activation) noexcept nogil:
    if activation == 0:
        return ctanh(z)
    return z if z > 0.0 else 0.0


def mlp_predict(const double[:, ::1] x, const double[:, ::1] w1, const double[::1] b1,
                const double[::1] w2, double b2, int activation):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t h = w1.shape[1]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j, a
    cdef double z, acc
    for i in range(n):
        acc = b2
        for j in range(h):
            z = b1[j]
            for a in range(d):
                z += x[i, a] * w1[a, j]
            acc += _act_one(z, activation) * w2[j]
        out[i] = acc
    return out_arr


def mlp_grad(const double[:, ::1] x, const double[::1] y, const double[:, ::1] w1,
             const double[::1] b1, const double[::1] w2, double b2, int activation, double l2):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t h = w1.shape[1]
    gw1_arr = np.zeros((d, h), dtype=np.float64)
    gb1_arr = np.zeros(h, dtype=np.float64)
    gw2_arr = np.zeros(h, dtype=np.float64)
    zrow_arr = np.zeros(h, dtype=np.float64)
    hrow_arr = np.zeros(h, dtype=np.float64)
    cdef double[:, ::1] gw1 = gw1_arr
    cdef double[::1] gb1 = gb1_arr
    cdef double[::1] gw2 = gw2_arr
    cdef double[::1] zrow = zrow_arr
    cdef double[::1] hrow = hrow_arr
    cdef Py_ssize_t i, j, a
    cdef double z, yhat, r, dy, dz, sse = 0.0, gb2 = 0.0, sq = 0.0
    for i in range(n):
        yhat = b2
        for j in range(h):
            z = b1[j]
            for a in range(d):
                z += x[i, a] * w1[a, j]
            zrow[j] = z
            hrow[j] = _act_one(z, activation)
            yhat += hrow[j] * w2[j]
        r = yhat - y[i]
        sse += r * r
        dy = 2.0 * r / n
        gb2 += dy
        for j in range(h):
            gw2[j] += hrow[j] * dy
            if activation == 0:
                dz = dy * w2[j] * (1.0 - hrow[j] * hrow[j])
            else:
                dz = dy * w2[j] if zrow[j] > 0.0 else 0.0
            gb1[j] += dz
            for a in range(d):
                gw1[a, j] += x[i, a] * dz
    for j in range(h):
        sq += b1[j] * b1[j] + w2[j] * w2[j]
        gb1[j] += 2.0 * l2 * b1[j]
        gw2[j] += 2.0 * l2 * w2[j]
        for a in range(d):
            sq += w1[a, j] * w1[a, j]
            gw1[a, j] += 2.0 * l2 * w1[a, j]
    sq += b2 * b2
    gb2 += 2.0 * l2 * b2
    cdef double loss = sse / n + l2 * sq
    return loss, gw1_arr, gb1_arr, gw2_arr, gb2


def mlp_sgd_epoch(const double[:, ::1] x, const double[::1] y, const cnp.int64_t[::1] order,
                  Py_ssize_t batch_size, double lr, double l2,
                  double[:, ::1] w1, double[::1] b1, double[::1] w2, double[::1] b2,
                  int activation):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t h = w1.shape[1]
    gw1_arr = np.zeros((d, h), dtype=np.float64)
    gb1_arr = np.zeros(h, dtype=np.float64)
    gw2_arr = np.zeros(h, dtype=np.float64)
    zbuf_arr = np.zeros((batch_size, h), dtype=np.float64)
    hbuf_arr = np.zeros((batch_size, h), dtype=np.float64)
    cdef double[:, ::1] gw1 = gw1_arr
    cdef double[::1] gb1 = gb1_arr
    cdef double[::1] gw2 = gw2_arr
    cdef double[:, ::1] zbuf = zbuf_arr
    cdef double[:, ::1] hbuf = hbuf_arr
    cdef Py_ssize_t s, i, j, a, m, row
    cdef double z, yhat, r, dy, dz, sse, gb2, sq, total = 0.0
    cdef Py_ssize_t nb = 0
    for s in range(0, n, batch_size):
        m = batch_size if s + batch_size <= n else n - s
        sse = 0.0
        gb2 = 0.0
        for j in range(h):
            gb1[j] = 0.0
            gw2[j] = 0.0
            for a in range(d):
                gw1[a, j] = 0.0
        for i in range(m):
            row = order[s + i]
            yhat = b2[0]
            for j in range(h):
                z = b1[j]
                for a in range(d):
                    z += x[row, a] * w1[a, j]
                zbuf[i, j] = z
                hbuf[i, j] = _act_one(z, activation)
                yhat += hbuf[i, j] * w2[j]
            r = yhat - y[row]
            sse += r * r
            dy = 2.0 * r / m
            gb2 += dy
            for j in range(h):
                gw2[j] += hbuf[i, j] * dy
                if activation == 0:
                    dz = dy * w2[j] * (1.0 - hbuf[i, j] * hbuf[i, j])
                else:
                    dz = dy * w2[j] if zbuf[i, j] > 0.0 else 0.0
                gb1[j] += dz
                for a in range(d):
                    gw1[a, j] += x[row, a] * dz
        sq = 0.0
        for j in range(h):
            sq += b1[j] * b1[j] + w2[j] * w2[j]
            for a in range(d):
                sq += w1[a, j] * w1[a, j]
        sq += b2[0] * b2[0]
        total += sse / m + l2 * sq
        for j in range(h):
            for a in range(d):
                w1[a, j] -= lr * (gw1[a, j] + 2.0 * l2 * w1[a, j])
            b1[j] -= lr * (gb1[j] + 2.0 * l2 * b1[j])
            w2[j] -= lr * (gw2[j] + 2.0 * l2 * w2[j])
        b2[0] -= lr * (gb2 + 2.0 * l2 * b2[0])
        nb += 1
    return total / nb
