import numpy as np
import pytest

from acfguard.acf import extract_aggregates
from acfguard.cameo import CompressorConfig, compress, decompress, scratch_deviation
from acfguard.core import ConfigError
from acfguard.parallel import compress_coarse, compress_fine, default_threads, plan_partitions
from acfguard.synthetic import SyntheticSpec, generate

from conftest import family_series


def test_single_partition_plan():
    x = family_series(0, 200)
    plan = plan_partitions(x, 1, 10, p=0.9, epsilon=0.02)
    assert plan.overlap.shape == (0, 10)
    assert plan.local_budget == pytest.approx(0.9 * 0.02)
    np.testing.assert_allclose(plan.merged(), extract_aggregates(x, 10).matrix(), rtol=1e-12)


def test_three_way_split_recombines():
    x = generate(SyntheticSpec("random_walk", 300, 1))
    plan = plan_partitions(x, 3, 10)
    np.testing.assert_allclose(plan.merged(), extract_aggregates(x, 10).matrix(), rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("T", [2, 3, 5])
def test_chunks_cover_series(T):
    plan = plan_partitions(family_series(1, 517), T, 8)
    spans = [plan.chunk(i) for i in range(T)]
    assert spans[0][0] == 0 and spans[-1][1] == 516
    for (a0, a1), (b0, _) in zip(spans[:-1], spans[1:]):
        assert b0 == a1 + 1


def test_plan_rejects_short_series():
    with pytest.raises(ConfigError, match="too short"):
        plan_partitions(family_series(0, 50), 4, 10)
    with pytest.raises(ConfigError):
        plan_partitions(family_series(0, 500), 2, 10, p=0.0)


@pytest.mark.parametrize("T", [1, 2, 4, 8])
def test_fine_threads_match_serial(T, walk):
    cfg = CompressorConfig(lags=10, epsilon=0.02)
    ref, _ = compress(walk, cfg)
    cs, rep = compress_fine(walk, cfg, threads=T)
    assert np.array_equal(cs.indices, ref.indices)
    assert rep.extra["threads_fine"] == T


def test_fine_needs_enough_hops(walk):
    with pytest.raises(ConfigError):
        compress_fine(walk, CompressorConfig(lags=10, epsilon=0.02, hops=2), threads=4)


def test_coarse_single_worker_matches_serial(walk):
    cfg = CompressorConfig(lags=10, epsilon=0.02)
    ref, _ = compress(walk, cfg)
    cs, _ = compress_coarse(walk, cfg, threads=1)
    assert np.array_equal(cs.indices, ref.indices)


@pytest.mark.parametrize("T", [2, 4])
def test_coarse_guarantee(T):
    x = generate(SyntheticSpec("sinusoid", 4000, 2, {"period": 48, "noise": 0.05}))
    cfg = CompressorConfig(lags=24, epsilon=1e-3)
    cs, rep = compress_coarse(x, cfg, threads=T)
    assert rep.passed
    assert scratch_deviation(x, decompress(cs), 24) < 1e-3
    assert rep.extra["merge_gap"] < 1e-9
    assert rep.extra["local_removals"] > 0


def test_coarse_workers_leave_chunk_edges(monkeypatch):
    import acfguard.parallel as P

    seen = {}
    real = P._merge

    def spy(base, plan, workers, ledger):
        seen["plan"], seen["workers"] = plan, workers
        return real(base, plan, workers, ledger)

    monkeypatch.setattr(P, "_merge", spy)
    x = generate(SyntheticSpec("random_walk", 1200, 3))
    compress_coarse(x, CompressorConfig(lags=12, epsilon=0.05), threads=3)
    plan = seen["plan"]
    for i, w in enumerate(seen["workers"]):
        r0, r1 = plan.chunk(i)
        assert w.st.alive[r0] and w.st.alive[r1]
        log = w.removal_log
        assert np.all((log > r0) & (log < r1))


def test_coarse_aggregate_mode():
    x = generate(SyntheticSpec("sinusoid", 2400, 5, {"period": 96, "noise": 0.1}))
    cfg = CompressorConfig(lags=12, epsilon=0.01, window=4, agg="mean")
    cs, rep = compress_coarse(x, cfg, threads=2)
    assert rep.passed
    assert scratch_deviation(x, decompress(cs), 12, window=4, agg="mean") < 0.01


def test_coarse_rejects_target_mode(walk):
    with pytest.raises(ConfigError):
        compress_coarse(walk, CompressorConfig(lags=10, mode="target_cr", target_cr=3.0), threads=2)


def test_default_threads(monkeypatch):
    monkeypatch.delenv("ACFGUARD_THREADS", raising=False)
    assert default_threads() == 1
    monkeypatch.setenv("ACFGUARD_THREADS", "3")
    assert default_threads() == 3
    monkeypatch.setenv("ACFGUARD_THREADS", "zero")
    with pytest.raises(ConfigError):
        default_threads()
