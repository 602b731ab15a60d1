import numpy as np
import pytest

from regimecast.clustering import XMeansConfig
from regimecast.errors import ConfigError, DataError, PoolLimitError
from regimecast.forecaster import ModelSpec, TrainConfig, WeightVector, predict, train
from regimecast.pool import (
    PoolConfig,
    Specialist,
    SpecialistPool,
    build_offline,
    cluster_windows,
    load_pool,
    pool_from_dict,
    pool_to_dict,
    save_pool,
)
from regimecast.series import Subsequence, TimeSeries, segment_nonoverlapping


P = 5  # window length used throughout


def two_level_series(n_per=80, lo=0.0, hi=1.0, seed=0, noise=0.01):
    """Alternating flat regimes: windows cluster into two obvious groups."""
    rng = np.random.default_rng(seed)
    vals = np.concatenate([
        np.full(n_per, lo), np.full(n_per, hi),
        np.full(n_per, lo), np.full(n_per, hi),
    ]) + noise * rng.standard_normal(4 * n_per)
    return TimeSeries(vals)


def make_pool_inputs(seed=0):
    series = two_level_series(seed=seed)
    val_range = range(100, 260)
    windows = segment_nonoverlapping(series, val_range, P)
    spec = ModelSpec("linear_ar", P)
    train_cfg = TrainConfig(epochs=0, fine_tune_epochs=30, learning_rate=0.05,
                            fine_tune_lr_factor=1.0, seed=3)
    base = train(spec, train_cfg, [
        s for s in _sliding(series, range(0, 100))
    ])
    return series, val_range, windows, spec, train_cfg, base


def _sliding(series, rng_):
    from regimecast.forecaster import sliding_samples

    return sliding_samples(series, rng_, P)


def test_pool_config_validation():
    with pytest.raises(ConfigError):
        PoolConfig(novelty_fraction=0.0)
    with pytest.raises(ConfigError):
        PoolConfig(min_size_fraction=0.0)
    with pytest.raises(ConfigError):
        PoolConfig(recent_factor=1)
    with pytest.raises(ConfigError):
        PoolConfig(max_specialists=0)
    with pytest.raises(ConfigError):
        PoolConfig(inter_stat="median")


def test_build_offline_two_regimes_two_specialists():
    series, val_range, windows, spec, train_cfg, base = make_pool_inputs()
    pool, clustering = build_offline(spec, base, windows, series, val_range,
                                     train_cfg, XMeansConfig(k_min=2, k_max=8, seed=1))
    assert clustering.k == 2
    assert [s.id for s in pool.specialists] == [0, 1]
    assert all(s.created_at == "offline" for s in pool.specialists)
    assert all(s.train_count > 0 for s in pool.specialists)
    assert pool.novelty_threshold > 0


def test_select_routes_to_nearest_centroid():
    series, val_range, windows, spec, train_cfg, base = make_pool_inputs()
    pool, clustering = build_offline(spec, base, windows, series, val_range,
                                     train_cfg, XMeansConfig(k_min=2, k_max=8, seed=1))
    lo_cent = min(pool.specialists, key=lambda s: s.centroid.mean())
    hi_cent = max(pool.specialists, key=lambda s: s.centroid.mean())
    sid_lo, d_lo = pool.select(np.zeros(P))
    sid_hi, d_hi = pool.select(np.ones(P))
    assert sid_lo == lo_cent.id
    assert sid_hi == hi_cent.id
    assert d_lo == pytest.approx(np.linalg.norm(lo_cent.centroid), abs=1e-9)
    assert d_hi == pytest.approx(np.linalg.norm(hi_cent.centroid - 1.0), abs=1e-9)


def test_select_tie_prefers_lowest_id():
    spec = ModelSpec("linear_ar", 2)
    w = WeightVector(np.zeros(3), spec.layout())
    pool = SpecialistPool(model_spec=spec, base_weights=w)
    pool.specialists.append(Specialist(0, np.array([0.0, 0.0]), w, 1, "offline"))
    pool.specialists.append(Specialist(1, np.array([2.0, 0.0]), w, 1, "offline"))
    sid, dist = pool.select(np.array([1.0, 0.0]))
    assert sid == 0
    assert dist == pytest.approx(1.0)


def test_select_on_empty_pool_is_an_error():
    spec = ModelSpec("linear_ar", 2)
    pool = SpecialistPool(model_spec=spec,
                          base_weights=WeightVector(np.zeros(3), spec.layout()))
    with pytest.raises(ConfigError):
        pool.select(np.zeros(2))


def test_forecast_uses_selected_specialist_weights():
    series, val_range, windows, spec, train_cfg, base = make_pool_inputs()
    pool, _ = build_offline(spec, base, windows, series, val_range,
                            train_cfg, XMeansConfig(k_min=2, k_max=8, seed=1))
    window = np.ones(P)
    value, sid, dist = pool.forecast(window)
    chosen = next(s for s in pool.specialists if s.id == sid)
    assert value == pytest.approx(predict(spec, chosen.weights, window))
    # specialists diverged from the base model on this regime
    assert value != pytest.approx(predict(spec, base, window), abs=1e-12)


def test_recent_buffer_capacity_and_limit():
    spec = ModelSpec("linear_ar", P)
    pool = SpecialistPool(model_spec=spec,
                          base_weights=WeightVector(np.zeros(P + 1), spec.layout()),
                          config=PoolConfig(recent_factor=4))
    for v in range(100):
        pool.observe(float(v))
    vals = pool.recent_values()
    assert len(vals) == 4 * P  # ring keeps recent_factor * window_len
    assert vals[-1] == 99.0 and vals[0] == 80.0
    assert np.array_equal(pool.recent_values(limit=3), [97.0, 98.0, 99.0])
    assert len(pool.recent_values(limit=500)) == 20


def test_adapt_skips_without_enough_data():
    series, val_range, windows, spec, train_cfg, base = make_pool_inputs()
    pool, _ = build_offline(spec, base, windows, series, val_range,
                            train_cfg, XMeansConfig(k_min=2, k_max=8, seed=1))
    report = pool.adapt(np.zeros(2 * P - 1), "drift", train_cfg, XMeansConfig(seed=0))
    assert report.skipped
    assert report.new_specialists == ()
    # enough raw points but fewer whole windows than k_min
    report = pool.adapt(np.zeros(2 * P), "drift", train_cfg,
                        XMeansConfig(k_min=3, k_max=4, seed=0))
    assert report.skipped


def test_adapt_spawns_on_novel_regime_with_sequential_ids():
    series, val_range, windows, spec, train_cfg, base = make_pool_inputs()
    pool, _ = build_offline(spec, base, windows, series, val_range,
                            train_cfg, XMeansConfig(k_min=2, k_max=8, seed=1))
    before = [s.id for s in pool.specialists]
    threshold_before = pool.novelty_threshold
    rng = np.random.default_rng(7)
    novel = 8.0 + 0.01 * rng.standard_normal(6 * P)  # far from both centroids
    report = pool.adapt(novel, "drift", train_cfg, XMeansConfig(k_min=1, k_max=4, seed=2),
                        step=42)
    assert not report.skipped
    assert report.trigger == "drift"
    assert len(report.new_specialists) >= 1
    new = [s for s in pool.specialists if s.id not in before]
    assert [s.id for s in new] == list(report.new_specialists)
    assert all(s.created_at == 42 for s in new)
    assert max(before) < min(report.new_specialists)  # ids keep growing
    assert pool.novelty_threshold != threshold_before  # recomputed after spawn
    sid, _ = pool.select(np.full(P, 8.0))
    assert sid in report.new_specialists


def test_adapt_fuses_recent_data_matching_existing_regimes():
    series, val_range, windows, spec, train_cfg, base = make_pool_inputs()
    pool, _ = build_offline(spec, base, windows, series, val_range,
                            train_cfg, XMeansConfig(k_min=2, k_max=8, seed=1))
    n_before = len(pool.specialists)
    recent = series.values[180:260]  # same two regimes the pool was built on
    report = pool.adapt(recent, "periodic", train_cfg, XMeansConfig(k_min=2, k_max=4, seed=3))
    assert not report.skipped
    assert report.new_specialists == ()
    assert report.fused == report.recluster_k
    assert len(pool.specialists) == n_before


def test_adapt_pool_limit():
    series, val_range, windows, spec, train_cfg, base = make_pool_inputs()
    pool, _ = build_offline(spec, base, windows, series, val_range, train_cfg,
                            XMeansConfig(k_min=2, k_max=8, seed=1),
                            PoolConfig(max_specialists=2))
    novel = np.full(6 * P, 50.0) + 0.01 * np.random.default_rng(1).standard_normal(6 * P)
    with pytest.raises(PoolLimitError):
        pool.adapt(novel, "drift", train_cfg, XMeansConfig(k_min=1, k_max=2, seed=0))


def test_cluster_windows_enforces_min_size():
    series, val_range, windows, spec, train_cfg, base = make_pool_inputs()
    clustering = cluster_windows(windows, XMeansConfig(k_min=2, k_max=8, seed=1),
                                 PoolConfig(min_size_fraction=0.4))
    n_min = int(np.ceil(0.4 * len(windows)))
    assert all(c.size >= n_min for c in clustering.clusters)
    with pytest.raises(DataError):
        cluster_windows([], XMeansConfig(seed=0))


def test_pool_json_round_trip(tmp_path):
    series, val_range, windows, spec, train_cfg, base = make_pool_inputs()
    pool, _ = build_offline(spec, base, windows, series, val_range,
                            train_cfg, XMeansConfig(k_min=2, k_max=8, seed=1))
    path = tmp_path / "pool.json"
    save_pool(pool, path)
    loaded = load_pool(path)
    assert loaded.model_spec == pool.model_spec
    assert loaded.novelty_threshold == pool.novelty_threshold
    assert len(loaded.specialists) == len(pool.specialists)
    for a, b in zip(loaded.specialists, pool.specialists):
        assert a.id == b.id and a.created_at == b.created_at
        assert np.array_equal(a.centroid, b.centroid)
        assert np.array_equal(a.weights.values, b.weights.values)
    probe = np.linspace(0.0, 1.0, P)
    assert loaded.forecast(probe) == pool.forecast(probe)


def test_pool_from_dict_rejects_bad_payloads(tmp_path):
    series, val_range, windows, spec, train_cfg, base = make_pool_inputs()
    pool, _ = build_offline(spec, base, windows, series, val_range,
                            train_cfg, XMeansConfig(k_min=2, k_max=8, seed=1))
    payload = pool_to_dict(pool)
    bad = dict(payload, format="something-else")
    with pytest.raises(DataError):
        pool_from_dict(bad)
    payload["specialists"][0]["values"] = [1.0, 2.0]
    with pytest.raises(DataError):
        pool_from_dict(payload)
    with pytest.raises(DataError):
        load_pool(tmp_path / "missing.json")


def test_offline_threshold_single_cluster_fallback():
    rng = np.random.default_rng(5)
    vals = 0.5 + 0.02 * rng.standard_normal(300)
    series = TimeSeries(vals)
    windows = segment_nonoverlapping(series, range(100, 250), P)
    spec = ModelSpec("linear_ar", P)
    cfg = TrainConfig(epochs=0, fine_tune_epochs=5)
    base = train(spec, cfg, _sliding(series, range(0, 100)))
    pool, clustering = build_offline(spec, base, windows, series, range(100, 250),
                                     cfg, XMeansConfig(k_min=1, k_max=6, seed=0))
    assert clustering.k == 1
    assert pool.novelty_threshold > 0  # within-cluster fallback keeps it usable
