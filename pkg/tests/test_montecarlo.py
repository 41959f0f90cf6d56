import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fgflab._runtime import THREADS_ENV, blocks, default_threads, ordered_map, replicate_rng
from fgflab.montecarlo import Z99, MonteCarloReport, mc_run, mc_samples, summarize


def normal_block(seed, start, count):
    return np.array([replicate_rng(seed, start + i, 3).standard_normal(2) for i in range(count)])


def test_report_ci_and_within():
    r = MonteCarloReport("x", 1.0, 0.1, 1000, 7, reference=1.2)
    lo, hi = r.ci99
    assert lo == pytest.approx(1.0 - Z99 * 0.1) and hi == pytest.approx(1.0 + Z99 * 0.1)
    assert r.within(1.29) and not r.within(1.31)
    with pytest.raises(ValueError):
        MonteCarloReport("x", 0.0, 0.0, 0, 0)


def test_report_json_round_trip():
    r = MonteCarloReport("vol", 1.25, 0.01, 500, 3, reference=1.3, wall_time=0.5, extra={"ell": 9})
    assert MonteCarloReport.from_json(r.to_json()) == r
    assert "wall_time" not in r.to_dict(timing=False)


def test_summarize_matches_numpy():
    x = np.random.default_rng(1).normal(size=400)
    r = summarize("x", x, 1)
    assert r.estimate == pytest.approx(x.mean())
    assert r.se == pytest.approx(x.std(ddof=1) / 20)


@given(st.integers(1, 500), st.integers(1, 64))
def test_blocks_cover_range(total, size):
    b = blocks(total, size)
    assert sum(c for _, c in b) == total
    assert all(a == i * size for i, (a, _) in enumerate(b))


@given(st.integers(1, 300), st.integers(1, 50), st.integers(1, 4))
def test_samples_independent_of_block_and_threads(n, block, threads):
    ref = mc_samples(normal_block, n, 5, block=n, threads=1)
    assert np.array_equal(mc_samples(normal_block, n, 5, block=block, threads=threads), ref)


def test_ordered_map_keeps_order():
    assert ordered_map(lambda x: x * x, range(20), threads=4) == [x * x for x in range(20)]


def test_default_threads_env(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert default_threads() == 3
    monkeypatch.setenv(THREADS_ENV, "junk")
    assert default_threads() == 1


def test_streams_are_distinct():
    a = replicate_rng(1, 0, 0).standard_normal(4)
    assert not np.array_equal(a, replicate_rng(1, 0, 1).standard_normal(4))
    assert not np.array_equal(a, replicate_rng(1, 1, 0).standard_normal(4))
    assert np.array_equal(a, replicate_rng(1, 0, 0).standard_normal(4))


def test_mc_run_reports_and_errors():
    reps = mc_run(normal_block, 2000, 11, names=["a", "b"], references=[0.0, None])
    assert [r.estimator for r in reps] == ["a", "b"]
    assert reps[0].within(0.0, k=4)
    assert reps[0].se == pytest.approx(1 / math.sqrt(2000), rel=0.1)
    with pytest.raises(ValueError):
        mc_run(normal_block, 99, 11)
    with pytest.raises(ValueError):
        mc_run(normal_block, 200, 11, names=["only"])

    def broken(seed, start, count):
        raise ZeroDivisionError("boom")
    with pytest.raises(RuntimeError, match="replicates 0..255"):
        mc_run(broken, 300, 1)
