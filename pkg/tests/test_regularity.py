import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from perspecta.catalog import get_function
from perspecta.errors import DomainError, NonScalarError, UsageError
from perspecta.matrix_core import loewner_leq
from perspecta.perspective import PerspectiveOrder, geometric_mean, perspective, perspective_commuting_oracle
from perspecta.random_ensembles import EnsembleConfig, RngStream, random_contraction, random_pd
from perspecta.regularity import (
    CHECKS,
    BlockUnitaryPair,
    CheckConfig,
    block_diagonal_sides,
    jensen_contractions,
    jensen_sides,
    joint_convexity_comparison,
    rebuild_perspective,
    reconstruct_scalar,
    replay_witness,
    run_check,
    run_suite,
    run_trial,
    transformer_sides,
    _defective_blackbox,
)

WF, WS = PerspectiveOrder.WEIGHT_FIRST, PerspectiveOrder.WEIGHT_SECOND
SMALL = CheckConfig(dims=(1, 2, 3), trials=10)


def pds(n, k, seed=0):
    s = RngStream(seed).child("reg", n)
    return [random_pd(EnsembleConfig(n), s.child(i)) for i in range(k)]


def maxdev(x, y):
    return float(np.max(np.abs(np.asarray(x) - np.asarray(y))))


class TestJointConvexity:
    def test_identity_is_equality(self):
        a1, b1, a2, b2 = pds(3, 4)
        cmp = joint_convexity_comparison("identity", a1, b1, a2, b2, 0.3)
        assert abs(cmp.margin) <= 1e-12 * cmp.scale

    def test_lambda_zero_endpoint(self):
        a1, b1, a2, b2 = pds(3, 4)
        cmp = joint_convexity_comparison("neg_log", a1, b1, a2, b2, 0.0)
        assert abs(cmp.margin) <= 1e-12 * cmp.scale

    def test_dim1_matches_scalar_convexity(self):
        f = lambda t, s: -t * math.log(s / t)  # weight-first neg_log: t f(s/t)
        for seed in range(20):
            a1, b1, a2, b2 = (float(m.data[0, 0].real) for m in pds(1, 4, seed))
            lam = 0.3
            gap = lam * f(a1, b1) + (1 - lam) * f(a2, b2) - f(lam * a1 + (1 - lam) * a2, lam * b1 + (1 - lam) * b2)
            cmp = joint_convexity_comparison("neg_log", [[a1]], [[b1]], [[a2]], [[b2]], lam)
            assert cmp.margin == pytest.approx(gap, rel=1e-6, abs=1e-12)

    def test_neg_log_check(self):
        report = run_check("joint_convexity", CheckConfig(dims=(2, 3, 4, 5, 6), trials=20, functions=("neg_log",)))
        assert report.passed and report.worst_margin >= -1e-8


class TestJensen:
    def test_symmetric_case(self):
        (b,) = pds(3, 1)
        x, y = jensen_contractions(b, b, 0.5)
        np.testing.assert_allclose(x, np.eye(3) / math.sqrt(2), atol=1e-12)
        np.testing.assert_allclose(y, np.eye(3) / math.sqrt(2), atol=1e-12)

    def test_identity_is_equality(self):
        b1, b2, h, k = pds(3, 4)
        x, y = jensen_contractions(b1, b2, 0.3)
        lhs, rhs = jensen_sides(get_function("identity"), x, y, h, k)
        assert maxdev(lhs, rhs) <= 1e-12 * max(1, lhs.norm())

    def test_inv_check(self):
        assert run_check("jensen_decomposition", CheckConfig(dims=(2, 4), trials=20, functions=("inv",))).passed


class TestHomogeneityAndInvariance:
    def test_homogeneity_t_one(self):
        a, b = pds(3, 2)
        base = perspective("square", a, b).value
        assert maxdev(base, perspective("square", 1.0 * a.data, 1.0 * b.data).value) <= 1e-13 * base.norm()

    def test_homogeneity_dim1(self):
        out = run_check("homogeneity", CheckConfig(dims=(1,), trials=20))
        assert out.passed and out.worst_margin >= -1e-14

    def test_unitary_identity_exact(self):
        a, b = pds(3, 2)
        inner, outer = transformer_sides("neg_log", np.eye(3), a, b)
        assert maxdev(inner, outer) <= 1e-13

    def test_permutation_of_diagonal(self):
        a, b = np.diag([1.0, 2.0, 3.0]), np.diag([2.0, 5.0, 0.5])
        perm = np.eye(3)[[2, 0, 1]]
        inner, _ = transformer_sides("neg_log", perm, a, b)
        oracle = perspective_commuting_oracle("neg_log", perm.T @ a @ perm, perm.T @ b @ perm)
        assert maxdev(inner, oracle) <= 1e-13

    def test_random_unitary_check(self):
        assert run_check("unitary_invariance", CheckConfig(dims=(2, 5), trials=20, functions=("neg_log",))).passed


class TestBlockDiagonal:
    def test_trivial_split(self):
        x, y = pds(3, 2)
        lhs, rhs = block_diagonal_sides("neg_log", x, y, np.eye(3), np.zeros((3, 3)))
        assert maxdev(lhs, rhs) <= 1e-12
        assert maxdev(lhs, perspective("neg_log", x, y).value) <= 1e-12

    def test_diagonal_projections(self):
        x, y = np.diag([1.0, 4.0, 2.0]), np.diag([3.0, 1.0, 2.0])
        p = np.diag([1.0, 0.0, 1.0])
        lhs, rhs = block_diagonal_sides("t_log_t", x, y, p, np.eye(3) - p)
        expected = np.diag([a * (b / a) * math.log(b / a) for a, b in zip([1, 4, 2], [3, 1, 2])])
        assert maxdev(lhs, expected) <= 1e-13 and maxdev(rhs, expected) <= 1e-13

    def test_random_split_dim5(self):
        assert run_check("block_diagonal", CheckConfig(dims=(5,), trials=20)).passed


class TestBlockUnitary:
    def test_zero_contraction(self):
        (a,) = pds(2, 1)
        pair = BlockUnitaryPair.from_contraction(np.zeros((2, 2)))
        np.testing.assert_allclose(pair.d, np.eye(2))
        np.testing.assert_allclose(pair.e, np.eye(2))
        lhs, rhs = pair.averaged(a)
        expected = np.zeros((4, 4), complex)
        expected[2:, 2:] = a.data
        assert maxdev(lhs, expected) <= 1e-14 and maxdev(rhs, expected) <= 1e-14

    def test_scalar_contraction_blocks(self):
        c = 0.6
        pair = BlockUnitaryPair.from_contraction([[c]])
        lhs, _ = pair.averaged([[5.0]])
        np.testing.assert_allclose(lhs.data, np.diag([c * c * 5, (1 - c * c) * 5]), atol=1e-14)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 10**6))
    def test_unitary_and_averaging(self, n, seed):
        s = RngStream(seed)
        c = random_contraction(EnsembleConfig(n), s.child("c"))
        a = random_pd(EnsembleConfig(n), s.child("a"))
        pair = BlockUnitaryPair.from_contraction(c)
        assert pair.unitarity_defect() <= 1e-9
        lhs, rhs = pair.averaged(a)
        assert maxdev(lhs, rhs) <= 1e-8 * max(1, rhs.norm())


class TestTransformer:
    def test_unitary_equality(self):
        a, b = pds(3, 2)
        q, _ = np.linalg.qr(np.arange(9.0).reshape(3, 3) + np.eye(3))
        inner, outer = transformer_sides("neg_log", q, a, b)
        assert abs(loewner_leq(inner, outer).margin) <= 1e-12 * max(1, outer.norm())

    def test_scalar_contraction_equality(self):
        a, b = pds(3, 2)
        inner, outer = transformer_sides("neg_log", 0.7 * np.eye(3), a, b)
        assert maxdev(inner, outer) <= 1e-12

    def test_contraction_check(self):
        assert run_check("transformer_inequality", CheckConfig(dims=(2, 4), trials=20, functions=("neg_log",))).passed

    def test_diagonal_invertible_equality(self):
        c = np.diag([0.5, 3.0])
        a, b = np.diag([1.0, 2.0]), np.diag([4.0, 0.5])
        inner, outer = transformer_sides("inv", c, a, b)
        expected = np.diag([c[i, i] ** 2 * a[i, i] ** 2 / b[i, i] for i in range(2)])
        assert maxdev(inner, expected) <= 1e-13 and maxdev(outer, expected) <= 1e-13

    def test_invertible_check(self):
        assert run_check("transformer_equality", CheckConfig(dims=(4,), trials=20)).passed


class TestFiniteRank:
    def test_identity_argument_neg_log(self):
        out = perspective("neg_log", np.eye(3), np.eye(3)).value
        assert np.max(np.abs(out.data)) == 0

    def test_diagonal(self):
        lam = [0.5, 2.0, 7.0]
        out = perspective("t_log_t", np.eye(3), np.diag(lam)).value
        np.testing.assert_allclose(out.data, np.diag([t * math.log(t) for t in lam]), atol=1e-14)

    def test_random_check(self):
        assert run_check("finite_rank_formula", CheckConfig(dims=(3, 5), trials=20)).passed


class TestReconstruction:
    grid = np.logspace(-1, 1, 20)

    def test_neg_log(self):
        pts = reconstruct_scalar(lambda a, b: perspective("neg_log", a, b).value, self.grid, 3)
        assert max(abs(v + math.log(t)) for t, v in pts) <= 1e-10

    def test_geometric_mean(self):
        pts = reconstruct_scalar(geometric_mean, self.grid, 3)
        assert max(abs(v - math.sqrt(t)) for t, v in pts) <= 1e-10

    def test_defect_rejected(self):
        with pytest.raises(NonScalarError):
            reconstruct_scalar(_defective_blackbox("neg_log"), self.grid, 3)

    def test_rebuilt_agrees_on_scalars(self):
        pts = reconstruct_scalar(geometric_mean, self.grid, 2)
        rebuilt = rebuild_perspective(pts)
        for t, v in pts:
            np.testing.assert_allclose(rebuilt(np.eye(2), t * np.eye(2)).data, v * np.eye(2), atol=1e-12)

    def test_non_positive_grid(self):
        with pytest.raises(UsageError):
            reconstruct_scalar(geometric_mean, [0.0], 2)


class TestGeometricMeanCheck:
    def test_equal_pairs_equality(self):
        a, b = pds(3, 2)
        g = geometric_mean(a, b)
        lhs = (g + g) / 2
        rhs = geometric_mean((a + a) / 2, (b + b) / 2)
        assert maxdev(lhs, rhs) <= 1e-12 * max(1, g.norm())

    def test_dim1_am_gm(self):
        report = run_check("geometric_mean_concavity", CheckConfig(dims=(1,), trials=50))
        assert report.passed


class TestRelativeEntropyCheck:
    def test_finds_witness_at_dim2(self):
        report = run_check("relative_entropy_commuting", CheckConfig(dims=(2,), trials=200))
        assert report.passed
        (w,) = report.witnesses
        assert w["gap"] > 1e-6 and w["dim"] == 2
        again = replay_witness("relative_entropy_commuting", w)
        assert again.witness["gap"] == w["gap"]


class TestControl:
    def test_dim1_never_violated(self):
        report = run_check("detect_violation_control", CheckConfig(dims=(1,), trials=200))
        assert not report.witnesses and not report.passed

    def test_quart_witness_replays(self):
        report = run_check("detect_violation_control", CheckConfig(dims=(2, 3, 4), trials=200))
        assert report.passed
        w = report.witnesses[0]
        out = replay_witness("detect_violation_control", w)
        assert out.witness is not None and out.witness["margin"] == w["margin"]
        assert w["margin"] < -1e-8 * w["scale"]


class TestRunner:
    def test_all_checks_on_small_config(self):
        reports = run_suite(None, SMALL)
        assert [r.check_id for r in reports] == list(CHECKS)
        for r in reports:
            if r.check_id == "detect_violation_control":
                continue
            assert r.passed, (r.check_id, r.failures)

    def test_deterministic(self):
        cfg = CheckConfig(dims=(2, 3), trials=5)
        assert run_check("joint_convexity", cfg).to_json() == run_check("joint_convexity", cfg).to_json()

    def test_seed_changes_draws(self):
        a = run_check("limiting_case", CheckConfig(dims=(3,), trials=3, seed=1))
        b = run_check("limiting_case", CheckConfig(dims=(3,), trials=3, seed=2))
        assert a.worst_margin != b.worst_margin

    def test_run_trial_matches_cell(self):
        cfg = CheckConfig(dims=(3,), trials=4, functions=("inv",))
        report = run_check("homogeneity", cfg)
        worst = min(min(p.margin for p in run_trial("homogeneity", "inv", 3, i, cfg).probes) for i in range(4))
        assert worst == report.worst_margin

    def test_config_validation(self):
        with pytest.raises(UsageError):
            CheckConfig(trials=0)
        with pytest.raises(UsageError):
            CheckConfig(dims=())
        with pytest.raises(UsageError):
            CheckConfig(tol=-1.0)
        with pytest.raises(UsageError):
            CheckConfig(lambda_samples=(1.5,))
        with pytest.raises(ValueError):
            CheckConfig(order="sideways")

    def test_control_function_rejected_by_convexity_check(self):
        with pytest.raises(UsageError, match="quart"):
            run_check("joint_convexity", CheckConfig(functions=("quart",)))

    def test_unknown_check(self):
        with pytest.raises(UsageError):
            run_check("nope")

    def test_errors_are_recorded_not_raised(self, monkeypatch):
        def boom(t):
            raise DomainError("eigenvalue -1", eigenvalue=-1.0)
        monkeypatch.setitem(CHECKS, "limiting_case", dataclasses.replace(CHECKS["limiting_case"], trial=boom))
        report = run_check("limiting_case", CheckConfig(dims=(2,), trials=2))
        assert not report.passed
        assert all(f.margin is None and f.error for f in report.failures)

    def test_both_orders(self):
        report = run_check("finite_rank_formula", CheckConfig(dims=(2,), trials=3, order="both", functions=("sqrt",)))
        assert {c.order for c in report.cells} == {"weight_first", "weight_second"}
        assert report.passed
