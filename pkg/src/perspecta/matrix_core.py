"""Dense Hermitian matrices, functional calculus and the Loewner order.

Every matrix here is stored as a complex128 ``ndarray``; real symmetric input
is just the special case with zero imaginary part. Results of operations are
re-hermitized so round-off never produces a visibly non-Hermitian output.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import DomainError, MatrixFormatError, NumericError

HERMITICITY_RTOL = 1e-12
DEFAULT_COND_CAP = 1e12
DEFAULT_LOEWNER_TOL = 1e-8

ArrayLike = Union[np.ndarray, "HermitianMatrix", list]


def _square_array(x) -> np.ndarray:
    a = np.array(x, dtype=np.complex128)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise MatrixFormatError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] == 0:
        raise MatrixFormatError("matrix must have dimension at least 1")
    if not np.all(np.isfinite(a)):
        raise MatrixFormatError("matrix has non-finite entries")
    return a


def _herm(a: np.ndarray) -> np.ndarray:
    return (a + a.conj().T) / 2


def max_asymmetry(a: np.ndarray) -> tuple[float, tuple[int, int]]:
    """Largest ``|X - X*|`` entry and its index."""
    diff = np.abs(a - a.conj().T)
    idx = np.unravel_index(int(np.argmax(diff)), diff.shape)
    return float(diff[idx]), (int(idx[0]), int(idx[1]))


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    """A dense complex Hermitian matrix.

    Construction validates shape, finiteness and hermiticity to within
    ``1e-12 * max(1, max |entry|)``; the entries are stored unchanged in a
    read-only array.
    """

    data: np.ndarray

    def __post_init__(self):
        a = _square_array(self.data)
        bound = HERMITICITY_RTOL * max(1.0, float(np.max(np.abs(a))))
        worst, (i, j) = max_asymmetry(a)
        if worst > bound:
            raise MatrixFormatError(
                f"matrix is not Hermitian: |X - X*| = {worst:.3e} at entry ({i}, {j})"
            )
        a.setflags(write=False)
        object.__setattr__(self, "data", a)

    @classmethod
    def _exact(cls, a: np.ndarray) -> "HermitianMatrix":
        # For arrays that are Hermitian by construction, e.g. _herm output.
        obj = object.__new__(HermitianMatrix)
        a.setflags(write=False)
        object.__setattr__(obj, "data", a)
        return obj

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None and not copy:
            return self.data
        return self.data.astype(dtype or self.data.dtype, copy=True)

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, data={np.array2string(self.data, precision=4)})"

    def __add__(self, other):
        return hermitize(self.data + np.asarray(other))

    __radd__ = __add__

    def __sub__(self, other):
        return hermitize(self.data - np.asarray(other))

    def __rsub__(self, other):
        return hermitize(np.asarray(other) - self.data)

    def __mul__(self, scalar):
        if not np.isscalar(scalar) or np.iscomplexobj(scalar):
            return NotImplemented
        return hermitize(self.data * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __neg__(self):
        return hermitize(-self.data)

    def __matmul__(self, other):
        return self.data @ np.asarray(other)

    def __rmatmul__(self, other):
        return np.asarray(other) @ self.data

    def norm(self) -> float:
        """Spectral norm, i.e. the largest absolute eigenvalue."""
        w = np.linalg.eigvalsh(self.data)
        return float(max(abs(w[0]), abs(w[-1])))

    def trace(self) -> float:
        return float(np.trace(self.data).real)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues and orthonormal eigenvectors (as columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        q = self.eigenvectors
        return _herm((q * self.eigenvalues) @ q.conj().T)

    def apply(self, values: np.ndarray) -> np.ndarray:
        """``Q diag(values) Q*`` for a replacement spectrum."""
        q = self.eigenvectors
        return _herm((q * values) @ q.conj().T)


@dataclass(frozen=True, eq=False, repr=False)
class PDMatrix(HermitianMatrix):
    """A positive definite Hermitian matrix with condition number at most ``cond_cap``.

    The spectral decomposition computed during validation is kept, so square
    roots and inverse square roots cost no further eigensolves.
    """

    eigmin: float = field(default=float("nan"))
    eigmax: float = field(default=float("nan"))
    cond_cap: float = DEFAULT_COND_CAP
    spectral: SpectralDecomposition | None = field(default=None, compare=False)

    def __post_init__(self):
        super().__post_init__()
        self._finish(self.spectral if self.spectral is not None else _eigh(self.data))

    def _finish(self, dec: SpectralDecomposition):
        lo, hi = float(dec.eigenvalues[0]), float(dec.eigenvalues[-1])
        if not lo > 0:
            raise DomainError(
                f"matrix is not positive definite: eigenvalue {lo:.6g}", eigenvalue=lo
            )
        if hi / lo > self.cond_cap:
            raise DomainError(
                f"condition number {hi / lo:.3e} exceeds cap {self.cond_cap:.1e}",
                eigenvalue=lo,
            )
        object.__setattr__(self, "spectral", dec)
        object.__setattr__(self, "eigmin", lo)
        object.__setattr__(self, "eigmax", hi)

    @classmethod
    def _exact(cls, a: np.ndarray, spectral: SpectralDecomposition | None = None,
               cond_cap: float = DEFAULT_COND_CAP) -> "PDMatrix":
        # Skips the hermiticity scan; positivity and the cap are still enforced.
        obj = object.__new__(PDMatrix)
        a.setflags(write=False)
        object.__setattr__(obj, "data", a)
        object.__setattr__(obj, "cond_cap", cond_cap)
        obj._finish(spectral if spectral is not None else _eigh(a))
        return obj

    @property
    def base(self) -> HermitianMatrix:
        return HermitianMatrix(self.data)

    @property
    def cond(self) -> float:
        return self.eigmax / self.eigmin

    def norm(self) -> float:
        return self.eigmax


def as_hermitian(x: ArrayLike) -> HermitianMatrix:
    if isinstance(x, HermitianMatrix):
        return x
    return HermitianMatrix(np.asarray(x))


def as_pd(x: ArrayLike, cond_cap: float = DEFAULT_COND_CAP) -> PDMatrix:
    """Coerce to ``PDMatrix``, validating positivity and the condition cap."""
    if isinstance(x, PDMatrix) and x.cond_cap <= cond_cap:
        return x
    if isinstance(x, HermitianMatrix):
        return PDMatrix._exact(x.data, cond_cap=cond_cap)
    return PDMatrix(np.asarray(x), cond_cap=cond_cap)


def hermitize(x) -> HermitianMatrix:
    """Return ``(X + X*) / 2``."""
    return HermitianMatrix._exact(_herm(_square_array(x)))


def _eigh(a: np.ndarray) -> SpectralDecomposition:
    try:
        w, q = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed: {exc}") from exc
    return SpectralDecomposition(w, q)


def eig(h: ArrayLike) -> SpectralDecomposition:
    """Spectral decomposition of a Hermitian matrix, eigenvalues ascending."""
    h = as_hermitian(h)
    if isinstance(h, PDMatrix):
        return h.spectral
    return _eigh(h.data)


def _evaluator(f) -> Callable[[np.ndarray], np.ndarray]:
    return getattr(f, "evaluator", f)


def _check_domain(w: np.ndarray, floor: float, name: str):
    bad = w <= floor
    if np.any(bad):
        lam = float(w[np.argmax(bad)])
        raise DomainError(
            f"eigenvalue {lam:.6g} is outside the domain of {name} (must exceed {floor:g})",
            eigenvalue=lam,
        )


def apply_function(f, h: ArrayLike, domain_floor: float | None = None) -> HermitianMatrix:
    """Functional calculus ``Q f(Lambda) Q*``.

    ``f`` is a catalog ``ScalarFunction`` or a plain vectorized callable. If
    ``domain_floor`` is omitted the function's own floor is used (no floor for
    plain callables). Raises ``DomainError`` naming the first eigenvalue at or
    below the floor.
    """
    dec = eig(h)
    return HermitianMatrix._exact(dec.apply(map_spectrum(f, dec.eigenvalues, domain_floor)))


def map_spectrum(f, w: np.ndarray, domain_floor: float | None = None) -> np.ndarray:
    """``f`` applied to an ascending spectrum, with the domain checks of ``apply_function``."""
    if domain_floor is None:
        domain_floor = getattr(f, "domain_floor", -np.inf)
    name = getattr(f, "id", "f")
    if w[0] <= domain_floor:
        _check_domain(w, domain_floor, name)
    values = np.asarray(_evaluator(f)(w), dtype=float)
    if not np.all(np.isfinite(values)):
        raise DomainError(f"{name} is not finite on the spectrum")
    return values


def pd_from_spectrum(q: np.ndarray, values: np.ndarray,
                     cond_cap: float = DEFAULT_COND_CAP) -> PDMatrix:
    """``Q diag(values) Q*`` for unitary ``Q``, keeping the decomposition."""
    order = np.argsort(values)
    dec = SpectralDecomposition(values[order], q[:, order])
    return PDMatrix._exact(dec.reconstruct(), dec, cond_cap)


def sqrt_pd(a: ArrayLike) -> PDMatrix:
    """Positive square root."""
    a = as_pd(a)
    return pd_from_spectrum(a.spectral.eigenvectors, np.sqrt(a.spectral.eigenvalues))


def inv_sqrt_pd(a: ArrayLike) -> PDMatrix:
    """Inverse of the positive square root."""
    a = as_pd(a)
    return pd_from_spectrum(a.spectral.eigenvectors, 1.0 / np.sqrt(a.spectral.eigenvalues))


def congruence(c, h: ArrayLike) -> HermitianMatrix:
    """``hermitize(C* H C)``; ``C`` may be rectangular."""
    c = np.asarray(c, dtype=np.complex128)
    h = as_hermitian(h)
    if c.ndim != 2 or c.shape[0] != h.dim:
        raise MatrixFormatError(
            f"congruence dimension mismatch: C is {c.shape}, H is {h.dim}x{h.dim}"
        )
    return hermitize(c.conj().T @ h.data @ c)


def spectral_norm(x) -> float:
    """Spectral norm of a Hermitian matrix."""
    w = np.linalg.eigvalsh(np.asarray(x))
    return float(max(abs(w[0]), abs(w[-1])))


@dataclass(frozen=True)
class LoewnerComparison:
    """Outcome of testing ``L <= R`` in the semidefinite order.

    ``margin`` is the smallest eigenvalue of ``R - L``; the comparison holds
    when ``margin >= -tol * scale``.
    """

    margin: float
    scale: float
    holds: bool
    tol: float = DEFAULT_LOEWNER_TOL

    @property
    def relative_margin(self) -> float:
        return self.margin / self.scale


def loewner_leq(lhs: ArrayLike, rhs: ArrayLike, tol: float = DEFAULT_LOEWNER_TOL) -> LoewnerComparison:
    lhs, rhs = as_hermitian(lhs), as_hermitian(rhs)
    if lhs.dim != rhs.dim:
        raise MatrixFormatError(f"dimension mismatch: {lhs.dim} vs {rhs.dim}")
    margin = float(np.linalg.eigvalsh(_herm(rhs.data - lhs.data))[0])
    scale = max(spectral_norm(lhs.data), spectral_norm(rhs.data), 1.0)
    return LoewnerComparison(margin, scale, margin >= -tol * scale, tol)


def max_deviation(x, y) -> tuple[float, float]:
    """Max-entry difference of two Hermitian matrices and their common scale.

    The scale is ``max(1, ||X||, ||Y||)`` in the spectral norm, the same one
    used by ``loewner_leq``.
    """
    x, y = np.asarray(x), np.asarray(y)
    if x.shape != y.shape:
        raise MatrixFormatError(f"shape mismatch: {x.shape} vs {y.shape}")
    dev = float(np.max(np.abs(x - y)))
    return dev, max(spectral_norm(x), spectral_norm(y), 1.0)
