import os
import subprocess
import sys

import numpy as np
import pytest

from regimecast import kernels
from regimecast import _kernels_numpy as knp

knative = pytest.importorskip("regimecast._kernels")

TANH, RELU = 0, 1


def frozen(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


def make_linear_fixture(seed, n=23, d=6):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, d))
    y = rng.normal(size=n)
    w = rng.normal(size=d)
    b = float(rng.normal())
    return x, y, w, b


def make_mlp_fixture(seed, n=19, d=5, h=4):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, d))
    y = rng.normal(size=n)
    w1 = rng.normal(size=(d, h))
    b1 = rng.normal(size=h)
    w2 = rng.normal(size=h)
    b2 = float(rng.normal())
    return x, y, w1, b1, w2, b2


def test_backend_reported():
    assert knative.BACKEND == "native"
    assert knp.BACKEND == "numpy"
    assert kernels.BACKEND in ("native", "numpy")


@pytest.mark.parametrize("seed", range(5))
def test_assign_labels_parity(seed):
    rng = np.random.default_rng(seed)
    points = rng.normal(size=(40, 7))
    centers = rng.normal(size=(5, 7))
    ln, dn = knative.assign_labels(frozen(points), frozen(centers))
    lp, dp = knp.assign_labels(points, centers)
    assert np.array_equal(np.asarray(ln), lp)
    np.testing.assert_allclose(np.asarray(dn), dp, rtol=1e-12, atol=1e-12)


def test_assign_labels_tie_goes_to_lowest_index():
    centers = np.array([[-1.0], [1.0]])
    points = np.array([[0.0]])
    for impl in (knative, knp):
        labels, d2 = impl.assign_labels(frozen(points), frozen(centers))
        assert labels[0] == 0
        assert d2[0] == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(5))
def test_linear_predict_and_grad_parity(seed):
    x, y, w, b = make_linear_fixture(seed)
    pn = np.asarray(knative.linear_predict(frozen(x), frozen(w), b))
    np.testing.assert_allclose(pn, knp.linear_predict(x, w, b), rtol=1e-12)
    ln, gwn, gbn = knative.linear_grad(frozen(x), frozen(y), frozen(w), b, 1e-3)
    lp, gwp, gbp = knp.linear_grad(x, y, w, b, 1e-3)
    assert ln == pytest.approx(lp, rel=1e-12)
    np.testing.assert_allclose(np.asarray(gwn), gwp, rtol=1e-10, atol=1e-12)
    assert gbn == pytest.approx(gbp, rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_linear_sgd_epoch_parity(seed):
    x, y, w0, b0 = make_linear_fixture(seed, n=23, d=6)
    order = np.random.default_rng(seed + 100).permutation(23).astype(np.int64)
    wn, bn = w0.copy(), np.array([b0])
    wp, bp = w0.copy(), np.array([b0])
    lossn = knative.linear_sgd_epoch(frozen(x), frozen(y), order, 4, 0.05, 1e-4, wn, bn)
    lossp = knp.linear_sgd_epoch(x, y, order, 4, 0.05, 1e-4, wp, bp)
    assert lossn == pytest.approx(lossp, rel=1e-12)
    np.testing.assert_allclose(np.asarray(wn), wp, rtol=1e-12, atol=1e-14)
    assert bn[0] == pytest.approx(bp[0], rel=1e-12)
    assert not np.allclose(wn, w0)  # the epoch actually moved the weights


@pytest.mark.parametrize("activation", [TANH, RELU])
@pytest.mark.parametrize("seed", range(3))
def test_mlp_parity(seed, activation):
    x, y, w1, b1, w2, b2 = make_mlp_fixture(seed)
    pn = np.asarray(knative.mlp_predict(frozen(x), frozen(w1), frozen(b1), frozen(w2), b2, activation))
    np.testing.assert_allclose(pn, knp.mlp_predict(x, w1, b1, w2, b2, activation), rtol=1e-12)

    gn = knative.mlp_grad(frozen(x), frozen(y), frozen(w1), frozen(b1), frozen(w2), b2, activation, 1e-4)
    gp = knp.mlp_grad(x, y, w1, b1, w2, b2, activation, 1e-4)
    assert gn[0] == pytest.approx(gp[0], rel=1e-12)
    for a, b in zip(gn[1:], gp[1:]):
        np.testing.assert_allclose(np.asarray(a), np.asarray(b), rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("activation", [TANH, RELU])
def test_mlp_sgd_epoch_parity(activation):
    x, y, w1, b1, w2, b2 = make_mlp_fixture(7)
    order = np.random.default_rng(8).permutation(len(x)).astype(np.int64)
    pn = [w1.copy(), b1.copy(), w2.copy(), np.array([b2])]
    pp = [w1.copy(), b1.copy(), w2.copy(), np.array([b2])]
    lossn = knative.mlp_sgd_epoch(frozen(x), frozen(y), order, 4, 0.05, 1e-4, *pn, activation)
    lossp = knp.mlp_sgd_epoch(x, y, order, 4, 0.05, 1e-4, *pp, activation)
    assert lossn == pytest.approx(lossp, rel=1e-12)
    for a, b in zip(pn, pp):
        np.testing.assert_allclose(np.asarray(a), b, rtol=1e-11, atol=1e-13)


def test_sgd_epoch_remainder_batch_loss_is_mean_over_batches():
    # n = 7 with batch_size = 3 gives batches of sizes 3, 3, 1
    x, y, w0, b0 = make_linear_fixture(11, n=7, d=3)
    order = np.arange(7, dtype=np.int64)
    expected_losses = []
    w, b = w0.copy(), b0
    for s in (0, 3, 6):
        idx = order[s : s + 3]
        loss, gw, gb = knp.linear_grad(x[idx], y[idx], w, b, 1e-4)
        expected_losses.append(loss)
        w = w - 0.05 * gw
        b = b - 0.05 * gb
    for impl in (knative, knp):
        wi, bi = w0.copy(), np.array([b0])
        loss = impl.linear_sgd_epoch(frozen(x), frozen(y), order, 3, 0.05, 1e-4, wi, bi)
        assert loss == pytest.approx(np.mean(expected_losses), rel=1e-12)
        np.testing.assert_allclose(np.asarray(wi), w, rtol=1e-12)
        assert bi[0] == pytest.approx(b, rel=1e-12)


def test_native_accepts_read_only_inputs():
    # frozen arrays must be usable everywhere a kernel only reads
    x, y, w, b = make_linear_fixture(3)
    knative.linear_grad(frozen(x), frozen(y), frozen(w), b, 0.0)
    order = frozen(np.arange(len(x)))  # float64 would be wrong dtype; rebuild as int64
    order = np.arange(len(x), dtype=np.int64)
    order.setflags(write=False)
    wm, bm = w.copy(), np.array([b])
    knative.linear_sgd_epoch(frozen(x), frozen(y), order, 4, 0.01, 0.0, wm, bm)


def _backend_in_subprocess(value):
    env = dict(os.environ)
    if value is None:
        env.pop("REGIMECAST_KERNELS", None)
    else:
        env["REGIMECAST_KERNELS"] = value
    return subprocess.run(
        [sys.executable, "-c", "from regimecast import kernels; print(kernels.BACKEND)"],
        capture_output=True, text=True, env=env)


def test_env_selects_backend():
    forced = _backend_in_subprocess("numpy")
    assert forced.returncode == 0
    assert forced.stdout.strip() == "numpy"
    native = _backend_in_subprocess("native")
    assert native.returncode == 0
    assert native.stdout.strip() == "native"
    bad = _backend_in_subprocess("cuda")
    assert bad.returncode != 0
    assert "REGIMECAST_KERNELS" in bad.stderr


def test_forced_numpy_matches_native_end_to_end():
    # same-backend reruns are byte-identical; across backends the weights
    # agree to rounding (numpy's blocked reductions round differently than
    # the sequential C loops)
    code = (
        "import numpy as np\n"
        "from regimecast.forecaster import ModelSpec, TrainConfig, sliding_samples, train\n"
        "from regimecast.series import TimeSeries\n"
        "rng = np.random.default_rng(0)\n"
        "series = TimeSeries(rng.normal(size=120), name='t')\n"
        "samples = sliding_samples(series, range(0, 120), 8)\n"
        "w = train(ModelSpec('mlp', 8, hidden=4), TrainConfig(epochs=5, seed=1), samples)\n"
        "print(repr(float(w.values.sum())))\n"
    )
    outs = {}
    for backend in ("native", "native", "numpy"):
        env = dict(os.environ, REGIMECAST_KERNELS=backend)
        proc = subprocess.run([sys.executable, "-c", code],
                              capture_output=True, text=True, env=env)
        assert proc.returncode == 0, proc.stderr
        outs.setdefault(backend, []).append(proc.stdout.strip())
    assert outs["native"][0] == outs["native"][1]
    assert float(outs["native"][0]) == pytest.approx(float(outs["numpy"][0]), rel=1e-9)
