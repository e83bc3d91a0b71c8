import numpy as np
import pytest

from acfguard import _kernels as K
from acfguard.acf import acf_scratch, extract_aggregates, statistic
from acfguard.cameo import (
    CompressorConfig,
    Engine,
    compress,
    decompress,
    get_all_impact,
    resolve_hops,
    scratch_deviation,
    target_alive_count,
)
from acfguard.core import CompressedSeries, ConfigError, DegenerateACFError, FormatError, measure
from acfguard.synthetic import SyntheticSpec, generate

from conftest import family_series, interpolate


def test_line_impacts_are_zero():
    x = np.arange(10.0)
    reg = get_all_impact(extract_aggregates(x, 3), x, acf_scratch(x, 3))
    assert np.all(np.abs(reg.impact[1:-1]) < 1e-14)
    assert reg.impact[0] == np.inf and reg.impact[-1] == np.inf
    assert reg.heap_slot[0] == -1 and reg.heap_slot[-1] == -1


def test_impacts_match_per_point_oracle():
    x = generate(SyntheticSpec("sinusoid", 60, 2, {"period": 12, "noise": 0.05})).values
    ref = acf_scratch(x, 12)
    reg = get_all_impact(extract_aggregates(x, 12), x, ref)
    for i in range(1, 59):
        y = x.copy()
        y[i] = (x[i - 1] + x[i + 1]) / 2
        assert reg.impact[i] == pytest.approx(measure("mae", ref, acf_scratch(y, 12)), abs=1e-10)


def test_heap_is_valid_after_build():
    eng = Engine(family_series(1, 300), 10)
    eng.init_impacts()
    assert eng.heap_ok()
    eng.run(20, K.MODE_BOUND, 0.05)
    assert eng.heap_ok()


def test_epsilon_zero_keeps_everything(sinusoid):
    cs, rep = compress(sinusoid, CompressorConfig(lags=8, epsilon=0.0))
    assert cs.n_kept == len(sinusoid)
    assert rep.passed and rep.cr == 1.0


def test_line_collapses_to_endpoints():
    x = 0.5 * np.arange(200.0) - 3
    cs, rep = compress(x, CompressorConfig(lags=5, epsilon=0.01))
    assert cs.indices.tolist() == [0, 199]
    assert rep.cr == 100.0


def test_noisy_sinusoid_guarantee(sinusoid):
    cs, rep = compress(sinusoid, CompressorConfig(lags=32, epsilon=0.01))
    dev = scratch_deviation(sinusoid, decompress(cs), 32)
    assert dev < 0.01 and rep.passed
    assert dev == pytest.approx(rep.verification["scratch_acf_dev"], abs=1e-15)
    # regression pin recorded on the first run
    assert cs.n_kept == 116


def test_kept_values_are_exact(walk):
    cs, _ = compress(walk, CompressorConfig(lags=10, epsilon=0.02))
    y = decompress(cs).values
    assert np.array_equal(y[cs.indices], walk.values[cs.indices])
    assert np.array_equal(cs.values, walk.values[cs.indices])


def test_pacf_mode(walk):
    cs, rep = compress(walk, CompressorConfig(lags=10, epsilon=0.02, stat="pacf"))
    assert rep.passed and cs.n_kept < len(walk)
    d = measure("mae", statistic(walk, 10, "pacf"), statistic(decompress(cs), 10, "pacf"))
    assert d < 0.02


@pytest.mark.parametrize("metric", ["mae", "rmse", "nrmse", "cheb", "msmape", "mape"])
def test_every_metric_holds_bound(metric):
    x = family_series(4, 500)
    cs, rep = compress(x, CompressorConfig(lags=12, epsilon=0.01, metric=metric))
    assert rep.passed
    assert rep.acf_deviation[metric] < 0.01


def test_deterministic(walk):
    cfg = CompressorConfig(lags=10, epsilon=0.01)
    a, _ = compress(walk, cfg)
    b, _ = compress(walk, cfg)
    assert np.array_equal(a.indices, b.indices)


def test_target_cr_mode():
    x = family_series(5, 600)
    cs, rep = compress(x, CompressorConfig(lags=10, mode="target_cr", target_cr=4.0))
    assert cs.compression_ratio >= 4.0
    assert cs.n_kept == target_alive_count(600, 4.0) == 150
    assert rep.passed and rep.verification["epsilon"] is None


def test_target_unreachable():
    x = np.sin(np.arange(10.0))
    cs, rep = compress(x, CompressorConfig(lags=2, mode="target_cr", target_cr=6.0))
    assert rep.status == "target_unreachable" and not rep.passed
    assert rep.message == "cannot reach target"


def test_config_errors():
    with pytest.raises(ConfigError):
        CompressorConfig(lags=3, mode="target_cr")
    with pytest.raises(ConfigError):
        CompressorConfig(lags=3, target_cr=2.0)
    with pytest.raises(ConfigError):
        CompressorConfig(lags=3, epsilon=-1)
    with pytest.raises(ConfigError):
        compress(np.arange(5.0), CompressorConfig(lags=5))
    with pytest.raises(ConfigError):
        compress(np.arange(40.0), CompressorConfig(lags=10, window=4, agg="mean"))


def test_degenerate_original():
    with pytest.raises(DegenerateACFError, match="lag 1"):
        compress(np.ones(20), CompressorConfig(lags=3))


def test_resolve_hops():
    assert resolve_hops(None, 1024) == 100
    assert resolve_hops(None, 1024, window=4) == 400
    assert resolve_hops("logn", 1000) == 10
    assert resolve_hops("3xlogn", 1000, 2) == 60
    assert resolve_hops("full", 77) == 77
    assert resolve_hops(5, 10**6) == 5
    with pytest.raises(ConfigError):
        resolve_hops("lots", 100)


def test_bound_stop_leaves_state_before_failed_removal():
    x = family_series(6, 400)
    eng = Engine(x, 10)
    eng.init_impacts()
    status, _ = eng.run(50, K.MODE_BOUND, 0.005)
    assert status == K.ST_BOUND
    S = eng.st.S.copy()
    y = eng.st.y.copy()
    assert eng.deviation() < 0.005
    # the rejected candidate went back on the heap unchanged
    assert eng.heap_ok() and eng.st.key[eng.st.heap[0]] < np.inf
    assert np.array_equal(eng.st.S, S) and np.array_equal(eng.st.y, y)


def test_h_zero_changes_nothing():
    eng = Engine(family_series(2, 200), 8)
    eng.init_impacts()
    keys = eng.st.key.copy()
    status, j = eng.step(K.MODE_BOUND, 1.0)
    eng.reheap(j, 0)
    keys[j] = eng.st.key[j]
    assert np.array_equal(eng.st.key, keys)


def test_full_reheap_matches_rescan():
    eng = Engine(family_series(3, 200), 8)
    eng.init_impacts()
    for _ in range(30):
        _, j = eng.step(K.MODE_BOUND, 1.0)
        eng.reheap(j, eng.n)
    idx = eng.candidates()
    np.testing.assert_array_equal(eng.st.key[idx], eng.impacts(idx))


def test_reheap_locality():
    eng = Engine(family_series(0, 20), 3)
    eng.init_impacts()
    before = eng.st.key.copy()
    _, j = eng.step(K.MODE_BOUND, 1.0)
    a, b = eng.st.left[j], eng.st.right[j]
    near = {a, eng.st.left[a], b, eng.st.right[b]}
    eng.reheap(j, 2)
    changed = set(np.flatnonzero(eng.st.key != before).tolist()) - {j}
    assert changed <= near


def test_removal_spans_reinterpolate_dead_points():
    x = family_series(7, 300)
    eng = Engine(x, 12)
    rng = np.random.default_rng(0)
    for j in rng.permutation(np.arange(1, 299))[:150]:
        eng.remove(int(j))
    np.testing.assert_allclose(eng.reconstruction(), interpolate(x.values, eng.kept_indices()), atol=1e-12)
    np.testing.assert_allclose(eng.current_stat(), acf_scratch(eng.reconstruction(), 12), atol=1e-9)


def test_restore_round_trip():
    x = family_series(8, 200)
    eng = Engine(x, 6)
    S0 = eng.st.S.copy()
    for j in (50, 51, 52, 100):
        eng.remove(j)
    for j in (51, 100, 50, 52):
        eng.restore(j)
    np.testing.assert_allclose(eng.st.S, S0, rtol=1e-12, atol=1e-9)
    assert eng.n_alive == 200


def test_decompress_examples():
    assert decompress(CompressedSeries([0, 4], [0.0, 8.0], n=5)).values.tolist() == [0, 2, 4, 6, 8]
    x = np.random.default_rng(1).normal(size=6)
    assert np.array_equal(decompress(CompressedSeries(np.arange(6), x, n=6)).values, x)
    with pytest.raises(FormatError):
        CompressedSeries([0, 2], [0.0, 1.0], n=5)


def test_verify_every_shadow_check(walk):
    cs, rep = compress(walk, CompressorConfig(lags=10, epsilon=0.02, verify_every=40))
    ref, _ = compress(walk, CompressorConfig(lags=10, epsilon=0.02))
    assert np.array_equal(cs.indices, ref.indices)


def test_window_one_mean_matches_plain_path(walk):
    a, _ = compress(walk, CompressorConfig(lags=10, epsilon=0.01))
    b, _ = compress(walk, CompressorConfig(lags=10, epsilon=0.01, window=1, agg="mean"))
    assert np.array_equal(a.indices, b.indices)


@pytest.mark.parametrize("agg", ["mean", "sum", "min", "max"])
def test_aggregate_mode_guarantee(agg):
    x = generate(SyntheticSpec("sinusoid", 1200, 3, {"period": 96, "noise": 0.1}))
    cfg = CompressorConfig(lags=12, epsilon=0.01, window=4, agg=agg)
    cs, rep = compress(x, cfg)
    assert rep.passed and cs.n_kept < 1200
    assert scratch_deviation(x, decompress(cs), 12, window=4, agg=agg) < 0.01
    assert cs.indices[0] == 0 and cs.indices[-1] == 1199


def test_aggregate_mode_tracks_windows():
    x = generate(SyntheticSpec("random_walk", 403, 5))
    eng = Engine(x, 6, window=4, agg="max")
    eng.init_impacts()
    eng.run(20, K.MODE_BOUND, 0.05)
    assert eng.drift() < 1e-9
