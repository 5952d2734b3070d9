import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from perspecta.catalog import get_function
from perspecta.errors import DomainError, MatrixFormatError
from perspecta.matrix_core import apply_function
from perspecta.perspective import (
    PerspectiveOrder,
    geometric_mean,
    perspective,
    perspective_commuting_oracle,
    quadratic_congruence,
    relative_entropy,
    trace_perspective_neg_log,
)
from perspecta.random_ensembles import EnsembleConfig, RngStream, random_commuting_pd_pair, random_pd

WF, WS = PerspectiveOrder.WEIGHT_FIRST, PerspectiveOrder.WEIGHT_SECOND


def scale(*ms):
    return max([1.0] + [np.linalg.norm(np.asarray(m), 2) for m in ms])


def close(x, y, tol):
    x, y = np.asarray(x), np.asarray(y)
    return np.max(np.abs(x - y)) <= tol * scale(x, y)


class TestPerspective:
    def test_identity_weight_second_gives_a(self, pd_pair):
        a, b = pd_pair(4)
        assert close(perspective("identity", a, b, WS).value, a, 1e-12)

    def test_const_one_weight_second_gives_b(self, pd_pair):
        a, b = pd_pair(4)
        assert close(perspective("const_one", a, b, WS).value, b, 1e-12)

    def test_scalar_example(self):
        out = perspective("neg_log", [[2.0]], [[1.0]], WF).value.data
        assert out[0, 0].real == pytest.approx(2 * math.log(2), rel=1e-15)

    def test_default_order_is_weight_first(self):
        assert perspective("neg_log", [[2.0]], [[1.0]]).order is WF

    def test_equal_arguments_vanish_for_neg_log(self, pd_pair):
        a, _ = pd_pair(5)
        assert np.max(np.abs(perspective("neg_log", a, a).value.data)) <= 1e-12

    def test_inner_spectrum_reported(self):
        res = perspective("neg_log", np.diag([1.0, 2.0]), np.diag([3.0, 4.0]), WF)
        np.testing.assert_allclose(res.inner_spectrum, [2.0, 3.0])

    def test_orders_agree_through_transpose(self, pd_pair):
        # weight_second of f equals weight_first of the transpose t f(1/t)
        a, b = pd_pair(3)
        lhs = perspective("square", a, b, WS).value
        rhs = perspective("inv", a, b, WF).value
        assert close(lhs, rhs, 1e-10)

    def test_rejects_singular_and_mismatch(self):
        with pytest.raises(DomainError):
            perspective("neg_log", np.diag([1.0, 0.0]), np.eye(2))
        with pytest.raises(MatrixFormatError):
            perspective("neg_log", np.eye(2), np.eye(3))

    def test_json(self):
        out = perspective("neg_log", [[2.0]], [[1.0]]).to_json()
        assert out["order"] == "weight_first"
        assert out["value"]["dim"] == 1 and out["value"]["complex"] is False
        assert out["value"]["data"][0] == pytest.approx(2 * math.log(2), rel=1e-15)


class TestCommutingOracle:
    def test_diagonal_example(self):
        out = perspective_commuting_oracle("neg_log", np.diag([2.0, 4.0]), np.eye(2), WF)
        np.testing.assert_allclose(out.data, np.diag([2 * math.log(2), 4 * math.log(4)]))

    def test_equal_arguments(self, pd_pair):
        a, _ = pd_pair(3)
        f = get_function("pow(1.5)")
        assert close(perspective_commuting_oracle(f, a, a, WF), float(f(1.0)) * a.data, 1e-12)

    def test_scalar_multiples(self):
        t, s = 3.0, 0.5
        out = perspective_commuting_oracle("t_log_t", t * np.eye(3), s * np.eye(3), WS)
        np.testing.assert_allclose(out.data, s * (t / s) * math.log(t / s) * np.eye(3))

    def test_rejects_non_commuting(self, pd_pair):
        a, b = pd_pair(3)
        with pytest.raises(MatrixFormatError, match="commute"):
            perspective_commuting_oracle("inv", a, b)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 10**6),
           st.sampled_from(["neg_log", "t_log_t", "inv", "square", "sqrt", "pow(-0.5)"]),
           st.sampled_from([WF, WS]))
    def test_agrees_with_perspective_on_commuting_pairs(self, n, seed, fid, order):
        a, b = random_commuting_pd_pair(EnsembleConfig(n), RngStream(seed))
        assert close(perspective(fid, a, b, order).value, perspective_commuting_oracle(fid, a, b, order), 1e-9)


class TestGeometricMean:
    def test_scalar(self):
        assert geometric_mean([[4.0]], [[9.0]]).data[0, 0].real == pytest.approx(6.0, rel=1e-15)

    def test_equal_arguments(self, pd_pair):
        a, _ = pd_pair(4)
        assert close(geometric_mean(a, a), a, 1e-12)

    def test_riccati(self, pd_pair):
        a, b = pd_pair(3)
        x = geometric_mean(a, b).data
        assert close(x @ np.linalg.solve(a.data, x), b, 1e-7)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 10**6))
    def test_symmetric(self, n, seed):
        s = RngStream(seed)
        a, b = random_pd(EnsembleConfig(n), s.child(0)), random_pd(EnsembleConfig(n), s.child(1))
        assert close(geometric_mean(a, b), geometric_mean(b, a), 1e-8)


class TestRelativeEntropy:
    def test_equal_is_zero(self, pd_pair):
        a, _ = pd_pair(3)
        assert abs(relative_entropy(a, a)) <= 1e-12
        assert abs(trace_perspective_neg_log(a, a)) <= 1e-12

    def test_scalar(self):
        assert relative_entropy([[2.0]], [[1.0]]) == pytest.approx(2 * math.log(2), rel=1e-15)

    def test_commuting_diagonal(self):
        a, b = np.diag([1.0, 2.0]), np.diag([2.0, 1.0])
        assert relative_entropy(a, b) == pytest.approx(math.log(2), rel=1e-14)
        assert trace_perspective_neg_log(a, b) == pytest.approx(math.log(2), rel=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 10**6))
    def test_commuting_equality(self, n, seed):
        a, b = random_commuting_pd_pair(EnsembleConfig(n), RngStream(seed))
        s = relative_entropy(a, b)
        assert abs(s - trace_perspective_neg_log(a, b)) <= 1e-9 * (1 + abs(s))

    def test_non_commuting_pair_separates(self):
        gaps = []
        for i in range(20):
            s = RngStream(42).child("sep", i)
            a, b = random_pd(EnsembleConfig(2), s.child(0)), random_pd(EnsembleConfig(2), s.child(1))
            gaps.append(abs(relative_entropy(a, b) - trace_perspective_neg_log(a, b)))
        assert max(gaps) > 1e-6


class TestQuadraticCongruence:
    def test_scalar(self):
        assert quadratic_congruence([[2.0]], [[4.0]]).data[0, 0] == pytest.approx(1.0)

    def test_equal_arguments(self, pd_pair):
        a, _ = pd_pair(3)
        assert close(quadratic_congruence(a, a), a, 1e-12)

    def test_matches_inv_perspective(self, pd_pair):
        a, b = pd_pair(4)
        assert close(quadratic_congruence(a, b), perspective("inv", a, b, WF).value, 1e-8)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(0, 10**6), st.sampled_from(["neg_log", "sqrt", "square", "inv"]))
def test_finite_rank_formula_property(n, seed, fid):
    a = random_pd(EnsembleConfig(n), RngStream(seed))
    f = get_function(fid)
    assert close(perspective(f, np.eye(n), a, WF).value, apply_function(f, a), 1e-9)
