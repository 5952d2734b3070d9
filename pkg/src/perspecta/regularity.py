"""Randomized property checks for perspectives.

Each check draws random inputs per trial from an ``RngStream`` whose path is
``(check_id, function, order, dim, trial)`` under the configured root seed,
evaluates one or more *probes*, and aggregates them into a ``TrialReport``.

A probe carries a relative margin and a limit; it passes when
``margin >= -limit``. Loewner probes use the smallest eigenvalue of
``R - L`` divided by ``max(1, ||L||, ||R||)``. Equality probes use minus the
max-entry deviation divided by the same scale (times any extra factor the
check calls for, e.g. ``cond(C)**2``).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from .catalog import AFFINE, CONTROL, OPERATOR_CONCAVE, OPERATOR_CONVEX, ScalarFunction, get_function
from .errors import NonScalarError, PerspectaError, UsageError
from .matrix_core import (
    HermitianMatrix,
    LoewnerComparison,
    apply_function,
    as_pd,
    congruence,
    hermitize,
    inv_sqrt_pd,
    loewner_leq,
    max_deviation,
    spectral_norm,
    sqrt_pd,
)
from .matrix_io import matrix_to_json
from .perspective import (
    PerspectiveOrder,
    geometric_mean,
    perspective,
    quadratic_congruence,
    relative_entropy,
    trace_perspective_neg_log,
)
from .random_ensembles import (
    EnsembleConfig,
    RngStream,
    random_commuting_pd_pair,
    random_contraction,
    random_invertible,
    random_pd,
    random_projection_pair,
    random_unitary,
    range_basis,
)

WF = PerspectiveOrder.WEIGHT_FIRST
WS = PerspectiveOrder.WEIGHT_SECOND

DEFAULT_FUNCTIONS = ("neg_log", "t_log_t", "inv", "square", "pow(1.5)", "pow(-0.5)")
CONTROL_FUNCTIONS = ("quart",)
LAMBDA_SAMPLES = (0.5, 0.25, 0.1, "random")

ISOMETRY_TOL = 1e-9
UNITARY_TOL = 1e-9
SCALAR_GRID = (0.1, 0.5, 1.0, 2.0, 10.0)
SCALAR_GRID_TOL = 1e-10
RECOVERY_GRID = tuple(np.logspace(-1, 1, 20))
RECOVERY_TOL = 1e-9
HULL_COND = 90.0  # inner spectra in [0.105, 9.49], inside the recovery grid
SEPARATION_GAP = 1e-6
INVERTIBLE_COND = 100.0
VANISHING_EPS = (1e-2, 1e-4)
HOMOGENEITY_FACTORS = (0.5, 2.0, 10.0)


@dataclass(frozen=True)
class CheckConfig:
    dims: tuple = (2, 3, 4, 5, 6)
    trials: int = 200
    tol: float | None = None  # None: each check's own default
    lambda_samples: tuple = LAMBDA_SAMPLES
    seed: int = 42
    functions: tuple | None = None  # None: each check's own default
    order: PerspectiveOrder | str | None = None  # None: each check's default; or "both"
    cond_target: float = 100.0

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "lambda_samples", tuple(self.lambda_samples))
        if self.functions is not None:
            object.__setattr__(self, "functions", tuple(self.functions))
        if self.order not in (None, "both"):
            object.__setattr__(self, "order", PerspectiveOrder(self.order))
        if self.trials < 1:
            raise UsageError(f"trials must be >= 1, got {self.trials}")
        if not self.dims or any(d < 1 or d > 16 for d in self.dims):
            raise UsageError(f"dims must be non-empty and within [1, 16], got {self.dims}")
        if self.tol is not None and not self.tol > 0:
            raise UsageError(f"tol must be positive, got {self.tol}")
        if not self.lambda_samples:
            raise UsageError("lambda_samples must not be empty")
        for lam in self.lambda_samples:
            if lam != "random" and not (isinstance(lam, (int, float)) and 0 <= lam <= 1):
                raise UsageError(f"lambda sample {lam!r} is not in [0, 1] or 'random'")

    def orders(self, default: tuple) -> tuple:
        if self.order is None:
            return default
        return (WF, WS) if self.order == "both" else (self.order,)

    def to_json(self) -> dict:
        return {
            "dims": list(self.dims),
            "trials": self.trials,
            "tol": self.tol,
            "lambda_samples": list(self.lambda_samples),
            "seed": self.seed,
            "functions": None if self.functions is None else list(self.functions),
            "order": None if self.order is None else str(self.order),
            "cond_target": self.cond_target,
        }


@dataclass(frozen=True)
class Probe:
    name: str
    margin: float
    limit: float

    @property
    def ok(self) -> bool:
        return self.margin >= -self.limit


@dataclass
class Outcome:
    probes: list
    witness: dict | None = None


@dataclass
class Trial:
    """Everything a trial function needs; draws come from one generator per trial."""

    f: ScalarFunction | None
    dim: int
    order: PerspectiveOrder | None
    index: int
    stream: RngStream
    cfg: CheckConfig
    tol: float
    _rng: np.random.Generator | None = field(default=None, repr=False)

    @property
    def rng(self) -> np.random.Generator:
        if self._rng is None:
            self._rng = self.stream.generator()
        return self._rng

    @property
    def ens(self) -> EnsembleConfig:
        return EnsembleConfig(self.dim, self.cfg.cond_target, True, self.cfg.seed)

    def pd(self, cond_target: float | None = None):
        ens = self.ens if cond_target is None else EnsembleConfig(self.dim, cond_target)
        return random_pd(ens, self.rng)

    def lam(self) -> float:
        s = self.cfg.lambda_samples[self.index % len(self.cfg.lambda_samples)]
        return float(self.rng.uniform()) if s == "random" else float(s)


@dataclass
class Failure:
    trial: int
    seed_path: str
    margin: float | None
    probe: str
    error: str | None = None

    def to_json(self) -> dict:
        out = {"trial": self.trial, "seed_path": self.seed_path, "margin": self.margin,
               "probe": self.probe}
        if self.error is not None:
            out["error"] = self.error
        return out


@dataclass
class Cell:
    dim: int
    f: str
    order: str | None
    trials: int = 0
    worst_margin: float = math.inf
    failures: list = field(default_factory=list)
    witnesses: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "f": self.f,
            "order": self.order,
            "trials": self.trials,
            "worst_margin": None if math.isinf(self.worst_margin) else self.worst_margin,
            "failures": [x.to_json() for x in self.failures],
            "witnesses": self.witnesses,
        }


@dataclass
class TrialReport:
    check_id: str
    config: dict
    cells: list
    passed: bool

    @property
    def worst_margin(self) -> float:
        return min((c.worst_margin for c in self.cells), default=math.inf)

    @property
    def witnesses(self) -> list:
        return [w for c in self.cells for w in c.witnesses]

    @property
    def failures(self) -> list:
        return [x for c in self.cells for x in c.failures]

    def to_json(self) -> dict:
        return {
            "check_id": self.check_id,
            "config": self.config,
            "cells": [c.to_json() for c in self.cells],
            "passed": self.passed,
        }


# ---------------------------------------------------------------------------
# Building blocks shared by the trial functions and the unit tests.


def _loewner(lhs, rhs, sense: int, tol: float) -> LoewnerComparison:
    return loewner_leq(lhs, rhs, tol) if sense > 0 else loewner_leq(rhs, lhs, tol)


def _equality(name: str, lhs, rhs, limit: float, factor: float = 1.0) -> Probe:
    dev, scale = max_deviation(lhs, rhs)
    return Probe(name, -dev / (scale * factor), limit)


def joint_convexity_comparison(f, a1, b1, a2, b2, lam: float,
                               order=WF, tol: float = 1e-8) -> LoewnerComparison:
    """Compare ``P(lam A1 + (1-lam) A2, ...)`` with ``lam P(A1,B1) + (1-lam) P(A2,B2)``.

    Concave ``f`` is compared in the reversed direction.
    """
    f = get_function(f)
    a = hermitize(lam * np.asarray(a1) + (1 - lam) * np.asarray(a2))
    b = hermitize(lam * np.asarray(b1) + (1 - lam) * np.asarray(b2))
    lhs = perspective(f, a, b, order).value
    rhs = lam * perspective(f, a1, b1, order).value + (1 - lam) * perspective(f, a2, b2, order).value
    return _loewner(lhs, rhs, f.sense, tol)


def jensen_contractions(b1, b2, lam: float):
    """``X = (lam B1)^1/2 B^-1/2`` and ``Y = ((1-lam) B2)^1/2 B^-1/2`` for the mixture ``B``."""
    b = as_pd(hermitize(lam * np.asarray(b1) + (1 - lam) * np.asarray(b2)))
    ib = inv_sqrt_pd(b).data
    x = math.sqrt(lam) * sqrt_pd(b1).data @ ib
    y = math.sqrt(1 - lam) * sqrt_pd(b2).data @ ib
    return x, y


def jensen_sides(f, x, y, h, k):
    """``(f(X*HX + Y*KY), X* f(H) X + Y* f(K) Y)``."""
    inner = congruence(x, h) + congruence(y, k)
    lhs = apply_function(f, inner)
    rhs = congruence(x, apply_function(f, h)) + congruence(y, apply_function(f, k))
    return lhs, rhs


def block_diagonal_sides(f, x, y, p, q, order=WF):
    """Both sides of the block rule for ``(pxp + qxq, pyp + qyq)``.

    The right side is assembled from perspectives of the compressions to the
    ranges of ``p`` and ``q``; an empty range contributes nothing.
    """
    x, y, p, q = (np.asarray(m) for m in (x, y, p, q))
    a = hermitize(p @ x @ p + q @ x @ q)
    b = hermitize(p @ y @ p + q @ y @ q)
    lhs = perspective(f, a, b, order).value
    rhs = np.zeros_like(a.data)
    for proj in (p, q):
        basis = range_basis(proj)
        if basis.shape[1] == 0:
            continue
        block = perspective(f, congruence(basis, x), congruence(basis, y), order).value
        rhs = rhs + basis @ block.data @ basis.conj().T
    return lhs, hermitize(rhs)


@dataclass(frozen=True)
class BlockUnitaryPair:
    """``U = [[C, D], [E, -C*]]`` and ``V = [[C, -D], [E, C*]]`` for a strict contraction ``C``."""

    c: np.ndarray
    d: np.ndarray
    e: np.ndarray
    u: np.ndarray
    v: np.ndarray

    @classmethod
    def from_contraction(cls, c) -> "BlockUnitaryPair":
        c = np.asarray(c, dtype=np.complex128)
        eye = np.eye(c.shape[0])
        d = sqrt_pd(hermitize(eye - c @ c.conj().T)).data
        e = sqrt_pd(hermitize(eye - c.conj().T @ c)).data
        ch = c.conj().T
        u = np.block([[c, d], [e, -ch]])
        v = np.block([[c, -d], [e, ch]])
        return cls(c, d, e, u, v)

    def unitarity_defect(self) -> float:
        eye = np.eye(self.u.shape[0])
        return max(
            float(np.max(np.abs(m.conj().T @ m - eye))) for m in (self.u, self.v)
        )

    def averaged(self, a):
        """``(U* (A+0) U + V* (A+0) V) / 2`` and the expected ``C*AC + DAD``."""
        a = np.asarray(a)
        n = a.shape[0]
        padded = np.zeros((2 * n, 2 * n), dtype=np.complex128)
        padded[:n, :n] = a
        lhs = 0.5 * congruence(self.u, padded).data + 0.5 * congruence(self.v, padded).data
        rhs = np.zeros_like(padded)
        rhs[:n, :n] = congruence(self.c, a).data
        rhs[n:, n:] = congruence(self.d, a).data
        return hermitize(lhs), hermitize(rhs)


def transformer_sides(f, c, a, b, order=WF):
    """``(P(C*AC, C*BC), C* P(A,B) C)``."""
    inner = perspective(f, congruence(c, a), congruence(c, b), order).value
    outer = congruence(c, perspective(f, a, b, order).value)
    return inner, outer


def reconstruct_scalar(blackbox: Callable, t_grid, dim: int, tol: float = 1e-10):
    """Recover ``f(t)`` from ``F(I, t I) = f(t) I``.

    Raises ``NonScalarError`` when ``F(I, t I)`` is not a multiple of the
    identity to within ``tol * max(1, |f(t)|)``; a unitarily invariant map
    cannot produce such a value.
    """
    eye = np.eye(dim)
    out = []
    for t in t_grid:
        if not t > 0:
            raise UsageError(f"grid points must be positive, got {t}")
        val = blackbox(eye, t * eye)
        val = np.asarray(getattr(val, "value", val))
        diag = np.real(np.diagonal(val))
        centre = float(np.mean(diag))
        off = float(np.max(np.abs(val - np.diag(np.diagonal(val))))) if dim > 1 else 0.0
        spread = float(diag.max() - diag.min())
        bound = tol * max(1.0, abs(centre))
        if off > bound or spread > bound:
            raise NonScalarError(
                f"F(I, {t:g} I) is not scalar: off-diagonal {off:.3e}, diagonal spread {spread:.3e}"
            )
        out.append((float(t), centre))
    return out


def rebuild_perspective(points) -> Callable:
    """Weight-first perspective of the monotone cubic interpolant through ``points``.

    Interpolation runs in ``log t``.
    """
    ts, vals = zip(*points)
    interp = PchipInterpolator(np.log(ts), vals, extrapolate=True)
    g = ScalarFunction("rebuilt", lambda t: interp(np.log(t)), AFFINE, False, "interpolated", 0.0)

    def rebuilt(a, b):
        return perspective(g, a, b, WF).value

    return rebuilt


def _blackbox(f_id: str) -> Callable:
    return lambda a, b: perspective(f_id, a, b, WF).value


def _defective_blackbox(f_id: str, eps: float = 1e-6) -> Callable:
    def box(a, b):
        val = np.array(perspective(f_id, a, b, WF).value, copy=True)
        val[0, 1] += eps
        val[1, 0] += eps
        return hermitize(val)

    return box


@functools.lru_cache(maxsize=None)
def _recovered(f_id: str, dim: int):
    return tuple(reconstruct_scalar(_blackbox(f_id), RECOVERY_GRID, dim))


# ---------------------------------------------------------------------------
# Trial functions.


def _mats(**mats) -> dict:
    return {k: matrix_to_json(v) for k, v in mats.items()}


def _trial_joint_convexity(t: Trial) -> Outcome:
    a1, b1, a2, b2 = (t.pd() for _ in range(4))
    cmp = joint_convexity_comparison(t.f, a1, b1, a2, b2, t.lam(), t.order, t.tol)
    return Outcome([Probe("loewner", cmp.relative_margin, t.tol)])


def _trial_control(t: Trial) -> Outcome:
    a1, b1, a2, b2 = (t.pd() for _ in range(4))
    lam = t.lam()
    cmp = joint_convexity_comparison(t.f, a1, b1, a2, b2, lam, t.order, t.tol)
    witness = None
    if not cmp.holds:
        witness = {"lambda": lam, "margin": cmp.margin, "scale": cmp.scale,
                   "matrices": _mats(A1=a1, B1=b1, A2=a2, B2=b2)}
    return Outcome([Probe("loewner", cmp.relative_margin, t.tol)], witness)


def _trial_jensen(t: Trial) -> Outcome:
    a1, b1, a2, b2 = (t.pd() for _ in range(4))
    lam = t.lam()
    x, y = jensen_contractions(b1, b2, lam)
    defect = float(np.max(np.abs(x.conj().T @ x + y.conj().T @ y - np.eye(t.dim))))
    h = congruence(inv_sqrt_pd(b1).data, a1)
    k = congruence(inv_sqrt_pd(b2).data, a2)
    lhs, rhs = jensen_sides(t.f, x, y, h, k)
    cmp = _loewner(lhs, rhs, t.f.sense, t.tol)
    return Outcome([Probe("isometry", -defect, ISOMETRY_TOL),
                    Probe("jensen", cmp.relative_margin, t.tol)])


def _trial_homogeneity(t: Trial) -> Outcome:
    a, b = t.pd(), t.pd()
    base = perspective(t.f, a, b, t.order).value
    scale = max(1.0, spectral_norm(base.data))
    probes = []
    for s in HOMOGENEITY_FACTORS:
        scaled = perspective(t.f, s * a, s * b, t.order).value
        dev = float(np.max(np.abs(scaled.data - s * base.data)))
        probes.append(Probe(f"t={s:g}", -dev / (s * scale), t.tol))
    return Outcome(probes)


def _trial_unitary_invariance(t: Trial) -> Outcome:
    a, b = t.pd(), t.pd()
    u = random_unitary(t.ens, t.rng)
    lhs, rhs = transformer_sides(t.f, u, a, b, t.order)
    return Outcome([_equality("unitary", lhs, rhs, t.tol)])


def _trial_block_diagonal(t: Trial) -> Outcome:
    p, q = random_projection_pair(t.ens, t.rng)
    x, y = t.pd(), t.pd()
    lhs, rhs = block_diagonal_sides(t.f, x, y, p, q, t.order)
    return Outcome([_equality("block", lhs, rhs, t.tol)])


def _trial_block_unitary(t: Trial) -> Outcome:
    c = random_contraction(t.ens, t.rng)
    a = t.pd()
    pair = BlockUnitaryPair.from_contraction(c)
    lhs, rhs = pair.averaged(a)
    return Outcome([Probe("unitary", -pair.unitarity_defect(), UNITARY_TOL),
                    _equality("averaging", lhs, rhs, t.tol)])


def _trial_transformer_inequality(t: Trial) -> Outcome:
    a, b = t.pd(), t.pd()
    c = random_contraction(t.ens, t.rng)
    u = random_unitary(t.ens, t.rng)
    inner, outer = transformer_sides(t.f, c, a, b, t.order)
    cmp = _loewner(inner, outer, t.f.sense, t.tol)
    inner_u, outer_u = transformer_sides(t.f, u, a, b, t.order)
    cmp_u = loewner_leq(inner_u, outer_u, t.tol)
    return Outcome([Probe("contraction", cmp.relative_margin, t.tol),
                    Probe("unitary", -abs(cmp_u.relative_margin), 10 * t.tol)])


def _trial_transformer_equality(t: Trial) -> Outcome:
    a, b = t.pd(), t.pd()
    c = random_invertible(t.ens, t.rng, INVERTIBLE_COND)
    s = np.linalg.svd(c, compute_uv=False)
    cond_c = float(s[0] / s[-1])
    inner, outer = transformer_sides(t.f, c, a, b, t.order)
    ia = inv_sqrt_pd(a).data
    lhs = congruence(ia, perspective(t.f, a, b, WF).value)
    rhs = perspective(t.f, np.eye(t.dim), congruence(ia, b), WF).value
    return Outcome([_equality("invertible", outer, inner, t.tol, cond_c ** 2),
                    _equality("normalized", lhs, rhs, t.tol, as_pd(a).cond)])


def _trial_finite_rank(t: Trial) -> Outcome:
    a = t.pd()
    eye = np.eye(t.dim)
    if t.order is WF:
        lhs = perspective(t.f, eye, a, WF).value
    else:
        lhs = perspective(t.f, a, eye, WS).value
    probes = [_equality("f(A)", lhs, apply_function(t.f, a), t.tol)]
    if t.index == 0:
        err = 0.0
        for s in SCALAR_GRID:
            args = (eye, s * eye) if t.order is WF else (s * eye, eye)
            val = perspective(t.f, *args, t.order).value.data
            err = max(err, float(np.max(np.abs(val - float(t.f(s)) * eye))))
        probes.append(Probe("scalar_grid", -err, SCALAR_GRID_TOL))
    return Outcome(probes)


def _trial_reconstruction(t: Trial) -> Outcome:
    points = _recovered(t.f.id, t.dim)
    probes = []
    if t.index == 0:
        ts = np.array([p[0] for p in points])
        err = float(np.max(np.abs(np.array([p[1] for p in points]) - t.f(ts))))
        probes.append(Probe("recovery", -err, RECOVERY_TOL))
        if t.dim > 1:
            try:
                reconstruct_scalar(_defective_blackbox(t.f.id), RECOVERY_GRID, t.dim)
                rejected = False
            except NonScalarError:
                rejected = True
            probes.append(Probe("defect_rejected", 0.0 if rejected else -1.0, 0.0))
    a = t.pd()
    m = t.pd(HULL_COND)
    b = congruence(sqrt_pd(a).data, m)
    original = _blackbox(t.f.id)(a, b)
    rebuilt = rebuild_perspective(points)(a, b)
    probes.append(_equality("rebuilt", rebuilt, original, t.tol))
    return Outcome(probes)


def _trial_geometric_mean(t: Trial) -> Outcome:
    a1, b1, a2, b2 = (t.pd() for _ in range(4))
    g1, g2 = geometric_mean(a1, b1), geometric_mean(a2, b2)
    lhs = (g1 + g2) / 2
    rhs = geometric_mean((a1 + a2) / 2, (b1 + b2) / 2)
    cmp = loewner_leq(lhs, rhs, t.tol)
    probes = [Probe("concavity", cmp.relative_margin, t.tol),
              _equality("symmetry", g1, geometric_mean(b1, a1), t.tol)]
    if t.dim == 1:
        exact = math.sqrt(float(np.real(a1.data[0, 0])) * float(np.real(b1.data[0, 0])))
        rel = abs(float(np.real(g1.data[0, 0])) - exact) / exact
        probes.append(Probe("scalar", -rel, 1e-12))
    return Outcome(probes)


def _trial_relative_entropy(t: Trial) -> Outcome:
    a, b = random_commuting_pd_pair(t.ens, t.rng)
    s = relative_entropy(a, b)
    gap = abs(s - trace_perspective_neg_log(a, b))
    probes = [Probe("commuting", -gap / (1 + abs(s)), t.tol)]
    c, d = t.pd(), t.pd()
    s_cd = relative_entropy(c, d)
    tr_cd = trace_perspective_neg_log(c, d)
    witness = None
    if abs(s_cd - tr_cd) > SEPARATION_GAP:
        witness = {"relative_entropy": s_cd, "trace_perspective": tr_cd,
                   "gap": abs(s_cd - tr_cd), "matrices": _mats(A=c, B=d)}
    return Outcome(probes, witness)


def _trial_limiting_case(t: Trial) -> Outcome:
    a, b = t.pd(), t.pd()
    lhs = perspective("inv", a, b, WF).value
    return Outcome([_equality("AB^-1A", lhs, quadratic_congruence(a, b), t.tol)])


def _trial_vanishing(t: Trial) -> Outcome:
    a, b = t.pd(), t.pd()
    eye = np.eye(t.dim)
    base = spectral_norm(perspective(t.f, a, b, t.order).value.data)
    f1 = float(t.f(1.0))
    probes = []
    for eps in VANISHING_EPS:
        val = perspective(t.f, eps * eye, eps * eye, t.order).value.data
        err = float(np.max(np.abs(val - eps * f1 * eye)))
        probes.append(Probe(f"eps={eps:g}:identity", -err / (eps * max(1.0, abs(f1))), t.tol))
        small = spectral_norm(perspective(t.f, eps * a, eps * b, t.order).value.data)
        probes.append(Probe(f"eps={eps:g}:norm", -abs(small - eps * base) / (eps * max(1.0, base)), t.tol))
    return Outcome(probes)


# ---------------------------------------------------------------------------
# Registry and runner.

_CONVEX_LIKE = (OPERATOR_CONVEX, AFFINE, OPERATOR_CONCAVE)
_ANY = (OPERATOR_CONVEX, AFFINE, OPERATOR_CONCAVE, CONTROL)


@dataclass(frozen=True)
class Check:
    id: str
    trial: Callable[[Trial], Outcome]
    default_tol: float
    admissible: tuple = _CONVEX_LIKE
    default_functions: tuple = DEFAULT_FUNCTIONS
    fixed_function: str | None = None  # checks about one specific map
    order_sensitive: bool = True
    default_orders: tuple = (WF,)
    min_dim: int = 1
    mode: str = "property"  # "property", "search" or "property+witness"
    description: str = ""


CHECKS = {c.id: c for c in (
    Check("joint_convexity", _trial_joint_convexity, 1e-8, default_orders=(WF, WS),
          description="P_f is jointly convex (concave for concave f)"),
    Check("jensen_decomposition", _trial_jensen, 1e-8, order_sensitive=False,
          description="X*X + Y*Y = I and the operator Jensen step"),
    Check("homogeneity", _trial_homogeneity, 1e-9, admissible=_ANY,
          description="P_f(tA, tB) = t P_f(A, B)"),
    Check("unitary_invariance", _trial_unitary_invariance, 1e-8, admissible=_ANY,
          description="P_f(U*AU, U*BU) = U* P_f(A, B) U"),
    Check("block_diagonal", _trial_block_diagonal, 1e-8, admissible=_ANY, min_dim=2,
          description="P_f splits over complementary block-diagonal compressions"),
    Check("block_unitary_identity", _trial_block_unitary, 1e-8, fixed_function="-",
          order_sensitive=False,
          description="U, V unitary and (U*(A+0)U + V*(A+0)V)/2 = C*AC + DAD"),
    Check("transformer_inequality", _trial_transformer_inequality, 1e-8,
          description="P_f(C*AC, C*BC) <= C* P_f(A, B) C for contractions C"),
    Check("transformer_equality", _trial_transformer_equality, 1e-7, admissible=_ANY,
          description="equality for invertible C, and the A^-1/2 normalization"),
    Check("finite_rank_formula", _trial_finite_rank, 1e-9, admissible=_ANY,
          description="P_f(I, A) = f(A) and P_f(I, tI) = f(t) I"),
    Check("reconstruction", _trial_reconstruction, 1e-4, order_sensitive=False,
          default_functions=("neg_log", "sqrt"), admissible=_ANY,
          description="f recovered from F(I, tI); rebuilt map matches F"),
    Check("geometric_mean_concavity", _trial_geometric_mean, 1e-8, fixed_function="sqrt",
          order_sensitive=False,
          description="A # B is jointly concave and symmetric"),
    Check("relative_entropy_commuting", _trial_relative_entropy, 1e-9,
          fixed_function="neg_log", order_sensitive=False, mode="property+witness",
          description="S(A,B) = Tr P_f(A,B) for commuting pairs, differs otherwise"),
    Check("limiting_case", _trial_limiting_case, 1e-8, fixed_function="inv",
          order_sensitive=False,
          description="P_{1/t}(A, B) = A B^-1 A"),
    Check("vanishing_at_origin", _trial_vanishing, 1e-8, admissible=_ANY,
          description="P_f(eps A, eps B) -> 0 linearly as eps -> 0"),
    Check("detect_violation_control", _trial_control, 1e-8, admissible=_ANY,
          default_functions=CONTROL_FUNCTIONS, mode="search",
          description="a joint-convexity violation exists for non-operator-convex f"),
)}


def _functions(check: Check, cfg: CheckConfig) -> list:
    if check.fixed_function is not None:
        return [check.fixed_function]
    ids = cfg.functions if cfg.functions is not None else check.default_functions
    out = []
    for fid in ids:
        f = get_function(fid)
        if f.classification not in check.admissible:
            raise UsageError(
                f"check {check.id} does not apply to {f.id} ({f.classification})"
            )
        out.append(f.id)
    return out


def trial_stream(check_id: str, f_id: str, order, dim: int, index: int, seed: int) -> RngStream:
    label = "-" if order is None else PerspectiveOrder(order).value
    return RngStream(seed).child(check_id, f_id, label, dim, index)


def run_trial(check_id: str, f_id: str, dim: int, index: int,
              cfg: CheckConfig = CheckConfig(), order=None) -> Outcome:
    """Run (or replay) one trial exactly as ``run_check`` does."""
    check = CHECKS[check_id]
    tol = cfg.tol if cfg.tol is not None else check.default_tol
    order = None if not check.order_sensitive else PerspectiveOrder(order or WF)
    f = None if check.fixed_function is not None else get_function(f_id)
    stream = trial_stream(check_id, f_id, order, dim, index, cfg.seed)
    return check.trial(Trial(f, dim, order, index, stream, cfg, tol))


def run_check(check_id: str, cfg: CheckConfig = CheckConfig()) -> TrialReport:
    if check_id not in CHECKS:
        raise UsageError(f"unknown check {check_id!r}; known: {', '.join(CHECKS)}")
    check = CHECKS[check_id]
    tol = cfg.tol if cfg.tol is not None else check.default_tol
    functions = _functions(check, cfg)
    orders = cfg.orders(check.default_orders) if check.order_sensitive else (None,)
    cells = []
    found = {}
    for f_id in functions:
        for order in orders:
            for dim in cfg.dims:
                if dim < check.min_dim:
                    continue
                if check.mode == "search" and found.get(f_id):
                    break
                cell = Cell(dim, f_id, None if order is None else order.value)
                cells.append(cell)
                for index in range(cfg.trials):
                    stream = trial_stream(check_id, f_id, order, dim, index, cfg.seed)
                    _run_one(check, f_id, dim, order, index, stream, cfg, tol, cell)
                    if check.mode == "search" and cell.witnesses:
                        found[f_id] = True
                        break
    if check.mode == "search":
        passed = all(found.get(f_id) for f_id in functions)
    else:
        passed = all(not c.failures for c in cells)
        if check.mode == "property+witness":
            passed = passed and any(c.witnesses for c in cells)
    config = dict(cfg.to_json(), tol=tol, functions=functions,
                  orders=[o.value if o is not None else None for o in orders])
    return TrialReport(check_id, config, cells, passed)


def _run_one(check, f_id, dim, order, index, stream, cfg, tol, cell: Cell):
    cell.trials += 1
    f = None if check.fixed_function is not None else get_function(f_id)
    try:
        out = check.trial(Trial(f, dim, order, index, stream, cfg, tol))
    except (PerspectaError, np.linalg.LinAlgError) as exc:
        cell.failures.append(Failure(index, str(stream), None, "error", f"{type(exc).__name__}: {exc}"))
        return
    for probe in out.probes:
        cell.worst_margin = min(cell.worst_margin, probe.margin)
    if check.mode != "search":
        bad = [p for p in out.probes if not p.ok]
        if bad:
            worst = min(bad, key=lambda p: p.margin / max(p.limit, 1e-300))
            cell.failures.append(Failure(index, str(stream), worst.margin, worst.name))
    if out.witness is not None and not cell.witnesses:
        cell.witnesses.append(dict(out.witness, trial=index, seed_path=str(stream),
                                   dim=dim, f=f_id, order=cell.order))


def replay_witness(check_id: str, witness: dict, cfg: CheckConfig = CheckConfig()) -> Outcome:
    """Recompute a recorded witness from its trial coordinates and seed."""
    return run_trial(check_id, witness["f"], witness["dim"], witness["trial"], cfg,
                     witness.get("order"))


def run_suite(check_ids=None, cfg: CheckConfig = CheckConfig()) -> list:
    ids = list(CHECKS) if check_ids in (None, "all", ["all"]) else list(check_ids)
    for cid in ids:
        if cid not in CHECKS:
            raise UsageError(f"unknown check {cid!r}; known: {', '.join(CHECKS)}")
    return [run_check(cid, cfg) for cid in ids]


# Named entry points, one per check.
def check_joint_convexity(cfg: CheckConfig = CheckConfig()) -> TrialReport:
    return run_check("joint_convexity", cfg)


def check_jensen_decomposition(cfg: CheckConfig = CheckConfig()) -> TrialReport:
    return run_check("jensen_decomposition", cfg)


def check_homogeneity(cfg: CheckConfig = CheckConfig()) -> TrialReport:
    return run_check("homogeneity", cfg)


def check_unitary_invariance(cfg: CheckConfig = CheckConfig()) -> TrialReport:
    return run_check("unitary_invariance", cfg)


def check_block_diagonal(cfg: CheckConfig = CheckConfig()) -> TrialReport:
    return run_check("block_diagonal", cfg)


def check_block_unitary_identity(cfg: CheckConfig = CheckConfig()) -> TrialReport:
    return run_check("block_unitary_identity", cfg)


def check_transformer_inequality(cfg: CheckConfig = CheckConfig()) -> TrialReport:
    return run_check("transformer_inequality", cfg)


def check_transformer_equality(cfg: CheckConfig = CheckConfig()) -> TrialReport:
    return run_check("transformer_equality", cfg)


def check_finite_rank_formula(cfg: CheckConfig = CheckConfig()) -> TrialReport:
    return run_check("finite_rank_formula", cfg)


def check_reconstruction(cfg: CheckConfig = CheckConfig()) -> TrialReport:
    return run_check("reconstruction", cfg)


def check_geometric_mean_concavity(cfg: CheckConfig = CheckConfig()) -> TrialReport:
    return run_check("geometric_mean_concavity", cfg)


def check_relative_entropy_commuting(cfg: CheckConfig = CheckConfig()) -> TrialReport:
    return run_check("relative_entropy_commuting", cfg)


def check_limiting_case(cfg: CheckConfig = CheckConfig()) -> TrialReport:
    return run_check("limiting_case", cfg)


def check_vanishing_at_origin(cfg: CheckConfig = CheckConfig()) -> TrialReport:
    return run_check("vanishing_at_origin", cfg)


def detect_violation_control(cfg: CheckConfig = CheckConfig()) -> TrialReport:
    return run_check("detect_violation_control", cfg)
