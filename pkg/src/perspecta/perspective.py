"""Non-commutative perspectives and the objects built from them."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .catalog import ScalarFunction, get_function
from .errors import DomainError, MatrixFormatError
from .matrix_io import matrix_to_json
from .matrix_core import (
    HermitianMatrix,
    PDMatrix,
    apply_function,
    as_pd,
    congruence,
    hermitize,
    map_spectrum,
    spectral_norm,
)

INNER_FLOOR = 1e-12
COMMUTATOR_RTOL = 1e-10


class PerspectiveOrder(str, enum.Enum):
    """Which argument carries the square-root weights.

    ``WEIGHT_SECOND``: ``B^1/2 f(B^-1/2 A B^-1/2) B^1/2``, i.e. ``s f(t/s)``.
    ``WEIGHT_FIRST``: ``A^1/2 f(A^-1/2 B A^-1/2) A^1/2``, i.e. ``t f(s/t)``.
    """

    WEIGHT_SECOND = "weight_second"
    WEIGHT_FIRST = "weight_first"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class PerspectiveResult:
    value: HermitianMatrix
    inner_spectrum: np.ndarray
    order: PerspectiveOrder

    def to_json(self) -> dict:
        return {
            "value": matrix_to_json(self.value),
            "inner_spectrum": [float(x) for x in self.inner_spectrum],
            "order": self.order.value,
        }


def _pair(a, b) -> tuple[PDMatrix, PDMatrix]:
    a, b = as_pd(a), as_pd(b)
    if a.dim != b.dim:
        raise MatrixFormatError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return a, b


def perspective(f: ScalarFunction | str, a, b,
                order: PerspectiveOrder | str = PerspectiveOrder.WEIGHT_FIRST) -> PerspectiveResult:
    """Non-commutative perspective of ``f`` at the positive definite pair ``(A, B)``.

    The conjugated middle argument is re-hermitized and must have its whole
    spectrum above ``1e-12 * eigmax`` and inside the domain of ``f``; nothing
    is clamped.
    """
    f = get_function(f)
    order = PerspectiveOrder(order)
    a, b = _pair(a, b)
    weight, other = (b, a) if order is PerspectiveOrder.WEIGHT_SECOND else (a, b)

    q = weight.spectral.eigenvectors
    r = np.sqrt(weight.spectral.eigenvalues)
    qh = q.conj().T
    root = (q * r) @ qh
    inv_root = (q / r) @ qh
    inner = inv_root @ other.data @ inv_root
    w, v = np.linalg.eigh((inner + inner.conj().T) / 2)
    if w[0] <= INNER_FLOOR * w[-1]:
        raise DomainError(
            f"inner spectrum reaches the semidefinite boundary: eigenvalue {w[0]:.6g}",
            eigenvalue=float(w[0]),
        )
    middle = (v * map_spectrum(f, w)) @ v.conj().T
    out = root @ middle @ root
    value = HermitianMatrix._exact((out + out.conj().T) / 2)
    return PerspectiveResult(value, w, order)


def _common_eigenbasis(a: PDMatrix, b: PDMatrix) -> np.ndarray:
    # Diagonalize A, then B restricted to each eigenspace of A.
    dec = a.spectral
    w, q = dec.eigenvalues, dec.eigenvectors.copy()
    gap = 1e-9 * max(abs(w[-1]), 1.0)
    start = 0
    for stop in range(1, len(w) + 1):
        if stop == len(w) or w[stop] - w[stop - 1] > gap:
            if stop - start > 1:
                block = q[:, start:stop]
                sub = block.conj().T @ b.data @ block
                _, v = np.linalg.eigh((sub + sub.conj().T) / 2)
                q[:, start:stop] = block @ v
            start = stop
    return q


def perspective_commuting_oracle(f: ScalarFunction | str, a, b,
                                 order: PerspectiveOrder | str = PerspectiveOrder.WEIGHT_FIRST
                                 ) -> HermitianMatrix:
    """Scalar perspective applied pairwise in a common eigenbasis of commuting ``A, B``."""
    f = get_function(f)
    order = PerspectiveOrder(order)
    a, b = _pair(a, b)
    comm = float(np.max(np.abs(a.data @ b.data - b.data @ a.data)))
    if comm > COMMUTATOR_RTOL * a.norm() * b.norm():
        raise MatrixFormatError(f"A and B do not commute: ||AB - BA||_max = {comm:.3e}")
    q = _common_eigenbasis(a, b)
    av = np.real(np.einsum("ij,ik,kj->j", q.conj(), a.data, q))
    bv = np.real(np.einsum("ij,ik,kj->j", q.conj(), b.data, q))
    if order is PerspectiveOrder.WEIGHT_SECOND:
        vals = bv * f(av / bv)
    else:
        vals = av * f(bv / av)
    return hermitize((q * vals) @ q.conj().T)


def geometric_mean(a, b) -> PDMatrix:
    """``A # B = A^1/2 (A^-1/2 B A^-1/2)^1/2 A^1/2``."""
    return as_pd(perspective("sqrt", a, b, PerspectiveOrder.WEIGHT_FIRST).value)


def relative_entropy(a, b) -> float:
    """``Tr A log A - Tr A log B`` (natural log, no trace normalization)."""
    a, b = _pair(a, b)
    log_a = apply_function(get_function("log"), a)
    log_b = apply_function(get_function("log"), b)
    return float(np.real(np.trace(a.data @ (log_a.data - log_b.data))))


def trace_perspective_neg_log(a, b) -> float:
    """Trace of the ``-log`` perspective in weight-first order.

    Agrees with ``relative_entropy`` when ``A`` and ``B`` commute.
    """
    return perspective("neg_log", a, b, PerspectiveOrder.WEIGHT_FIRST).value.trace()


def quadratic_congruence(a, b) -> HermitianMatrix:
    """``A B^-1 A``, the perspective of ``1/t`` in weight-first order."""
    a, b = _pair(a, b)
    return hermitize(a.data @ np.linalg.solve(b.data, a.data))


def transformer_image(c, f: ScalarFunction | str, a, b,
                      order: PerspectiveOrder | str = PerspectiveOrder.WEIGHT_FIRST):
    """Both sides of the transformer law: ``(C* P(A,B) C, P(C*AC, C*BC))``."""
    lhs = congruence(c, perspective(f, a, b, order).value)
    rhs = perspective(f, congruence(c, a).data, congruence(c, b).data, order).value
    return lhs, rhs


def scale_of(*mats) -> float:
    return max([1.0] + [spectral_norm(np.asarray(m)) for m in mats])
