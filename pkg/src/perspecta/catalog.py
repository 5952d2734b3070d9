"""Scalar functions on the positive half-line and their operator-convexity class.

Classifications are trusted metadata. ``midpoint_operator_convexity_test``
looks for counterexamples to them with random Hermitian pairs.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .errors import DomainError, UsageError
from .matrix_core import apply_function, loewner_leq
from .random_ensembles import EnsembleConfig, RngStream, random_pd

OPERATOR_CONVEX = "operator_convex"
OPERATOR_CONCAVE = "operator_concave"
AFFINE = "affine"
CONTROL = "control_not_operator_convex"
CLASSIFICATIONS = (OPERATOR_CONVEX, OPERATOR_CONCAVE, AFFINE, CONTROL)

SAMPLE_COND = 1e4  # spectra drawn in [1e-2, 1e2]
DEFAULT_DOMAIN_FLOOR = 1e-8


@dataclass(frozen=True)
class ScalarFunction:
    """A catalog entry.

    ``evaluator`` is vectorized over numpy arrays. ``domain_floor`` is the
    open lower end of the domain: ``0`` for functions that only live on the
    positive half-line, ``-inf`` for polynomials.
    """

    id: str
    evaluator: Callable[[np.ndarray], np.ndarray]
    classification: str
    monotone: bool
    description: str
    domain_floor: float = 0.0

    def __call__(self, t):
        return self.evaluator(np.asarray(t, dtype=float))

    @property
    def sense(self) -> int:
        """+1 if the perspective should be convex, -1 if concave."""
        return -1 if self.classification == OPERATOR_CONCAVE else 1

    def listing(self) -> str:
        flag = "monotone" if self.monotone else "-"
        return f"{self.id:<12} {self.classification:<28} {flag:<9} {self.description}"

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "classification": self.classification,
            "monotone": self.monotone,
            "description": self.description,
        }


def _classify_power(p: float) -> tuple[str, bool]:
    if p in (0.0, 1.0):
        return AFFINE, True
    if -1.0 <= p <= 0.0 or 1.0 <= p <= 2.0:
        return OPERATOR_CONVEX, False
    if 0.0 < p < 1.0:
        return OPERATOR_CONCAVE, True
    return CONTROL, False


def power(p: float, id: str | None = None, description: str | None = None) -> ScalarFunction:
    """``t -> t**p`` classified by the exponent.

    Integer exponents are evaluated by repeated multiplication (and are
    defined on the whole line when non-negative); other exponents use
    ``exp(p log t)``.
    """
    p = float(p)
    cls, monotone = _classify_power(p)
    if p.is_integer() and p >= 0:
        k = int(p)
        evaluator = lambda t, k=k: np.power(t, k)
        floor = -math.inf
    elif p.is_integer():
        k = int(p)
        evaluator = lambda t, k=k: 1.0 / np.power(t, -k)
        floor = 0.0
    else:
        evaluator = lambda t, p=p: np.exp(p * np.log(t))
        floor = 0.0
    return ScalarFunction(
        id=id or f"pow({p:g})",
        evaluator=evaluator,
        classification=cls,
        monotone=monotone,
        description=description or f"t^{p:g}",
        domain_floor=floor,
    )


def _t_log_t(t):
    return t * np.log(t)


_ENTRIES = (
    ScalarFunction("identity", lambda t: np.array(t, dtype=float), AFFINE, True,
                   "t", -math.inf),
    ScalarFunction("const_one", lambda t: np.ones_like(t, dtype=float), AFFINE, True,
                   "1", -math.inf),
    ScalarFunction("neg_log", lambda t: -np.log(t), OPERATOR_CONVEX, False,
                   "-log t (relative entropy)"),
    ScalarFunction("log", np.log, OPERATOR_CONCAVE, True, "log t"),
    ScalarFunction("t_log_t", _t_log_t, OPERATOR_CONVEX, False, "t log t"),
    power(-1, "inv", "1/t (gives A B^-1 A)"),
    power(2, "square", "t^2"),
    power(1.5),
    power(-0.5),
    power(-0.25),
    power(0.5, "sqrt", "sqrt t (geometric mean)"),
    power(0.25),
    power(0.75),
    power(3, "cube", "t^3 (not operator convex)"),
    power(4, "quart", "t^4 (not operator convex)"),
)

_BY_ID = {f.id: f for f in _ENTRIES}
_POW_RE = re.compile(r"^pow\(\s*([-+0-9.eE]+)\s*\)$")


def catalog(classification: str | None = None) -> list[ScalarFunction]:
    """Catalog entries, optionally filtered by classification."""
    if classification is not None and classification not in CLASSIFICATIONS:
        raise UsageError(f"unknown classification {classification!r}")
    return [f for f in _ENTRIES if classification in (None, f.classification)]


def get_function(id: str | ScalarFunction) -> ScalarFunction:
    """Look up a catalog id; ``pow(p)`` ids are built on demand for any ``p``."""
    if isinstance(id, ScalarFunction):
        return id
    if id in _BY_ID:
        return _BY_ID[id]
    m = _POW_RE.match(id)
    if m:
        try:
            return power(float(m.group(1)))
        except ValueError:
            pass
    known = ", ".join(_BY_ID)
    raise UsageError(f"unknown function {id!r}; catalog: {known}")


@dataclass(frozen=True)
class ConvexityWitness:
    dim: int
    seed: int
    trial: int
    h: np.ndarray
    k: np.ndarray
    margin: float


@dataclass(frozen=True)
class ConvexityVerdict:
    violated: bool
    witness: ConvexityWitness | None = None
    trials_run: int = 0


def _sample_pair(dim: int, seed: int, trial: int, floor: float, retries: int = 8):
    cfg = EnsembleConfig(dim=dim, cond_target=SAMPLE_COND, seed=seed)
    base = RngStream(seed).child("midpoint", dim, trial)
    for attempt in range(retries):
        stream = base.child("retry", attempt) if attempt else base
        h = random_pd(cfg, stream.child("H"))
        k = random_pd(cfg, stream.child("K"))
        if min(h.eigmin, k.eigmin) > floor:
            return h, k
    raise DomainError(f"could not sample spectra above {floor:g} after {retries} attempts")


def midpoint_trial(f: ScalarFunction, dim: int, seed: int, trial: int,
                   tol: float = 1e-8, domain_floor: float = DEFAULT_DOMAIN_FLOOR):
    """One midpoint comparison. Returns ``(H, K, LoewnerComparison)``.

    For concave entries the reversed inequality is tested.
    """
    h, k = _sample_pair(dim, seed, trial, domain_floor)
    mid = apply_function(f, (h + k) / 2)
    avg = (apply_function(f, h) + apply_function(f, k)) / 2
    if f.sense > 0:
        cmp = loewner_leq(mid, avg, tol)
    else:
        cmp = loewner_leq(avg, mid, tol)
    return h, k, cmp


def midpoint_operator_convexity_test(
    f: ScalarFunction | str,
    dims: Iterable[int] = (2, 3, 4, 5, 6),
    trials: int = 500,
    seed: int = 0,
    tol: float = 1e-8,
) -> ConvexityVerdict:
    """Random search for a violation of ``f((H+K)/2) <= (f(H)+f(K))/2``.

    ``trials`` pairs are drawn per dimension; the first violation found is
    returned as the witness. Deterministic in ``seed``.
    """
    f = get_function(f)
    dims = list(dims)
    if trials < 1:
        raise UsageError("trials must be at least 1")
    if not dims or any(d < 1 or d > 16 for d in dims):
        raise UsageError("dims must lie in [1, 16]")
    run = 0
    for dim in dims:
        for trial in range(trials):
            h, k, cmp = midpoint_trial(f, dim, seed, trial, tol)
            run += 1
            if not cmp.holds:
                witness = ConvexityWitness(dim, seed, trial, h.data, k.data, cmp.margin)
                return ConvexityVerdict(True, witness, run)
    return ConvexityVerdict(False, None, run)
