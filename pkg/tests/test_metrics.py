"""Efficiency metrics: exact oracles, branch cases, shared invariants."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_series
from fluxmap.errors import DataError, MetricUndefinedError
from fluxmap.metrics import (
    KGE_MEAN_BENCHMARK,
    MetricId,
    evaluate,
    kge_components,
    kgess,
    nse,
    wia,
)

SQRT2 = math.sqrt(2.0)


def _standardized(values):
    arr = np.asarray(values, dtype=float)
    return (arr - arr.mean()) / arr.std()


def _orthogonal_unit(arr, seed=3):
    """Independent Gram-Schmidt construction for correlation oracles."""
    z = _standardized(arr)
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(arr.size)
    w = w - w.mean()
    w = w - (w @ z) / (z @ z) * z
    w = w - w.mean()
    return w / w.std()


series_strategy = st.lists(
    st.floats(min_value=0.001, max_value=1000.0, allow_nan=False),
    min_size=3, max_size=30,
).filter(lambda v: np.asarray(v).std() > 1e-9 and np.mean(v) > 1e-9)


class TestNse:
    def test_perfect_match(self):
        o = make_series([1.0, 2.0, 3.0])
        assert nse(o, o) == 1.0

    def test_mean_benchmark_is_zero(self):
        o = make_series([1.0, 4.0, 2.0, 5.0])
        m = make_series(np.full(4, float(np.mean(o.values))))
        assert nse(o, m) == 0.0

    def test_doubled_deviations(self):
        arr = np.array([0.5, 2.5, 1.0, 4.0, 0.2])
        mean = arr.mean()
        sim = mean + 2.0 * (arr - mean)
        assert abs(nse(make_series(arr), make_series(sim))) < 1e-9

    def test_zero_correlation(self):
        arr = np.array([0.5, 2.5, 1.0, 4.0, 0.2, 3.3, 1.7])
        sim = arr.mean() + arr.std() * _orthogonal_unit(arr)
        assert math.isclose(nse(make_series(arr), make_series(sim)), -1.0,
                            abs_tol=1e-9)

    def test_constant_obs_error(self):
        o = make_series([2.0, 2.0, 2.0])
        with pytest.raises(MetricUndefinedError):
            nse(o, make_series([1.0, 2.0, 3.0]))

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            nse(make_series([1.0, 2.0]), make_series([1.0, 2.0, 3.0]))

    def test_unbounded_below(self):
        o = make_series([1.0, 2.0, 3.0])
        m = make_series([100.0, 200.0, 300.0])
        assert nse(o, m) < -10.0


class TestKge:
    def test_perfect_match_exact(self):
        o = make_series([1.0, 2.0, 3.0])
        kc = kge_components(o, o)
        assert kc.bias_term == 0.0
        assert kc.variability_term == 0.0
        assert kc.correlation_term == 0.0
        assert kc.kge == 1.0
        assert kc.kge_ss == 1.0

    def test_mean_benchmark_constant(self):
        assert KGE_MEAN_BENCHMARK == 1.0 - SQRT2
        # the skill-score map sends the benchmark to exactly zero
        assert 1.0 - (1.0 - KGE_MEAN_BENCHMARK) / SQRT2 == 0.0

    def test_doubled_mean(self):
        # shifting by the mean doubles the mean but keeps std and CC
        arr = np.array([0.5, 2.5, 1.0, 4.0, 0.2])
        kc = kge_components(make_series(arr), make_series(arr + arr.mean()))
        assert math.isclose(kc.bias_term, 1.0, abs_tol=1e-12)
        # cv halves when the mean doubles at fixed absolute spread
        assert math.isclose(kc.variability_term, 0.25, abs_tol=1e-12)
        assert math.isclose(kc.correlation_term, 0.0, abs_tol=1e-12)
        assert math.isclose(kc.kge_ss, 1.0 - math.sqrt(1.25) / SQRT2,
                            abs_tol=1e-9)

    def test_zero_correlation(self):
        arr = np.array([0.5, 2.5, 1.0, 4.0, 0.2, 3.3, 1.7])
        sim = arr.mean() + arr.std() * _orthogonal_unit(arr)
        kc = kge_components(make_series(arr), make_series(sim))
        assert math.isclose(kc.bias_term, 0.0, abs_tol=1e-12)
        assert math.isclose(kc.variability_term, 0.0, abs_tol=1e-12)
        assert math.isclose(kc.correlation_term, 1.0, abs_tol=1e-9)
        assert math.isclose(kc.kge_ss, 1.0 - 1.0 / SQRT2, abs_tol=1e-9)

    def test_zero_obs_mean_error(self):
        o = make_series([-1.0, 1.0])
        with pytest.raises(MetricUndefinedError):
            kge_components(o, make_series([1.0, 2.0]))

    def test_constant_sim_error(self):
        o = make_series([1.0, 2.0, 3.0])
        with pytest.raises(MetricUndefinedError):
            kge_components(o, make_series([2.0, 2.0, 2.0]))

    @given(series_strategy, series_strategy)
    @settings(max_examples=60)
    def test_skill_score_mapping(self, ov, mv):
        n = min(len(ov), len(mv))
        ov, mv = ov[:n], mv[:n]
        if n < 2 or np.std(ov[:n]) == 0 or np.std(mv[:n]) == 0:
            return
        kc = kge_components(make_series(ov), make_series(mv))
        assert kc.kge == 1.0 - math.sqrt(
            kc.bias_term + kc.variability_term + kc.correlation_term
        )
        assert kc.kge_ss == 1.0 - (1.0 - kc.kge) / SQRT2
        assert kgess(make_series(ov), make_series(mv)) == kc.kge_ss
        assert kc.bias_term >= 0 and kc.variability_term >= 0
        assert kc.correlation_term >= 0


class TestWia:
    def test_perfect_match(self):
        o = make_series([1.0, 2.0, 3.0])
        assert wia(o, o) == 1.0

    def test_doubled_deviations(self):
        arr = np.array([0.5, 2.5, 1.0, 4.0, 0.2])
        mean = arr.mean()
        sim = mean + 2.0 * (arr - mean)
        assert math.isclose(wia(make_series(arr), make_series(sim)), 0.5,
                            abs_tol=1e-9)

    def test_branch_boundary_exact_zero(self):
        # obs [0,2]: sum |O - mean| = 2, so D = 4; shift of 2 gives A = 4
        o = make_series([0.0, 2.0])
        assert wia(o, make_series([2.0, 4.0])) == 0.0

    def test_second_branch(self):
        # shift of 4 gives A = 8 = 2D, so D/A - 1 = -0.5 exactly
        o = make_series([0.0, 2.0])
        assert wia(o, make_series([4.0, 6.0])) == -0.5

    def test_constant_obs_error(self):
        o = make_series([2.0, 2.0, 2.0])
        with pytest.raises(MetricUndefinedError):
            wia(o, make_series([1.0, 2.0, 3.0]))

    @given(series_strategy, series_strategy)
    @settings(max_examples=60)
    def test_bounded(self, ov, mv):
        n = min(len(ov), len(mv))
        if n < 2 or np.std(ov[:n]) == 0:
            return
        value = wia(make_series(ov[:n]), make_series(mv[:n]))
        assert -1.0 <= value <= 1.0


class TestEvaluate:
    @pytest.mark.parametrize("metric", list(MetricId))
    def test_perfect_dispatch(self, metric):
        o = make_series([1.0, 2.0, 3.0, 4.0])
        assert evaluate(metric, o, o) == 1.0

    def test_ids_serialize_lowercase(self):
        assert [str(m) for m in MetricId] == ["nse", "kgess", "wia"]
        assert MetricId.parse("kgess") is MetricId.KGESS

    def test_parse_unknown(self):
        with pytest.raises(DataError):
            MetricId.parse("rmse")


class TestSharedInvariants:
    @given(series_strategy, st.randoms(use_true_random=False))
    @settings(max_examples=40)
    def test_reorder_invariance(self, values, rnd):
        arr = np.asarray(values)
        sim = arr * 1.1 + 0.3
        perm = np.arange(arr.size)
        rnd.shuffle(perm)
        o1, m1 = make_series(arr), make_series(sim)
        o2, m2 = make_series(arr[perm]), make_series(sim[perm])
        for metric in MetricId:
            a = evaluate(metric, o1, m1)
            b = evaluate(metric, o2, m2)
            assert math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-9)

    @given(series_strategy)
    @settings(max_examples=40)
    def test_exactly_one_on_identical(self, values):
        o = make_series(values)
        for metric in MetricId:
            assert evaluate(metric, o, o) == 1.0

    def test_below_one_when_different(self):
        o = make_series([1.0, 2.0, 3.0, 4.0])
        m = make_series([1.0, 2.0, 3.0, 4.001])
        for metric in MetricId:
            assert evaluate(metric, o, m) < 1.0
