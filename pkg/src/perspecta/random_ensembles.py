"""Seeded generators for the random matrices used by the property checks.

Randomness flows through ``RngStream`` values: a root seed plus a path of
labels, hashed into a fresh ``numpy`` generator. Every sampler takes either a
stream (same stream, same draw) or a ``Generator`` derived from one, so a
trial can draw several matrices from one generator and still be replayed from
its path alone.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UsageError
from .matrix_core import PDMatrix, pd_from_spectrum

PD_RETRY_CAP = 8


@dataclass(frozen=True)
class EnsembleConfig:
    dim: int
    cond_target: float = 100.0
    complex: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise UsageError(f"dim must be >= 1, got {self.dim}")
        if not self.cond_target >= 1:
            raise UsageError(f"cond_target must be >= 1, got {self.cond_target}")


@dataclass(frozen=True)
class RngStream:
    root_seed: int
    path: tuple = ()

    def child(self, *labels) -> "RngStream":
        return RngStream(self.root_seed, self.path + tuple(labels))

    def generator(self) -> np.random.Generator:
        key = f"{self.root_seed}|" + "/".join(map(str, self.path))
        digest = hashlib.blake2b(key.encode(), digest_size=16, person=b"perspecta-rng").digest()
        return np.random.default_rng(np.random.SeedSequence(int.from_bytes(digest, "little")))

    def __str__(self):
        return "/".join([str(self.root_seed), *map(str, self.path)])


def _rng(cfg: EnsembleConfig, source) -> np.random.Generator:
    # ``source`` is an RngStream, an already-derived Generator, or None for
    # a stream rooted at ``cfg.seed``.
    if isinstance(source, np.random.Generator):
        return source
    return (source if source is not None else RngStream(cfg.seed)).generator()


def _gaussian(rng: np.random.Generator, shape, complex_: bool) -> np.ndarray:
    if complex_:
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    return rng.standard_normal(shape).astype(np.complex128)


def _unitary(rng: np.random.Generator, dim: int, complex_: bool) -> np.ndarray:
    z = _gaussian(rng, (dim, dim), complex_)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def _log_uniform(rng: np.random.Generator, size: int, cond: float) -> np.ndarray:
    half = 0.5 * np.log(cond)
    return np.exp(rng.uniform(-half, half, size))


def random_unitary(cfg: EnsembleConfig, stream=None) -> np.ndarray:
    """QR of a Gaussian matrix with the phases of ``diag(R)`` divided out.

    Orthogonal rather than unitary when ``cfg.complex`` is false.
    """
    rng = _rng(cfg, stream)
    return _unitary(rng, cfg.dim, cfg.complex)


def random_pd(cfg: EnsembleConfig, stream=None) -> PDMatrix:
    """``Q diag(lam) Q*`` with ``lam`` log-uniform in ``[1/sqrt(c), sqrt(c)]``."""
    rng = _rng(cfg, stream)
    for _ in range(PD_RETRY_CAP):
        q = _unitary(rng, cfg.dim, cfg.complex)
        lam = _log_uniform(rng, cfg.dim, cfg.cond_target)
        try:
            return pd_from_spectrum(q, lam)
        except DomainError:
            continue
    raise DomainError(f"random_pd rejected {PD_RETRY_CAP} consecutive draws")


def random_commuting_pd_pair(cfg: EnsembleConfig, stream=None):
    """Two PD matrices diagonal in one shared random eigenbasis."""
    rng = _rng(cfg, stream)
    q = _unitary(rng, cfg.dim, cfg.complex)
    a = _log_uniform(rng, cfg.dim, cfg.cond_target)
    b = _log_uniform(rng, cfg.dim, cfg.cond_target)
    return pd_from_spectrum(q, a), pd_from_spectrum(q, b)


def random_contraction(cfg: EnsembleConfig, stream=None,
                       cond: float = 10.0) -> np.ndarray:
    """An invertible strict contraction with ``||C|| = 1 - margin``.

    ``margin`` is uniform in ``(0, 0.5)``. Singular values are log-uniform
    with ratio at most ``cond`` so congruences by ``C`` stay well conditioned.
    """
    rng = _rng(cfg, stream)
    u = _unitary(rng, cfg.dim, cfg.complex)
    w = _unitary(rng, cfg.dim, cfg.complex)
    s = _log_uniform(rng, cfg.dim, cond)
    margin = rng.uniform(0.0, 0.5)
    while margin == 0.0:
        margin = rng.uniform(0.0, 0.5)
    s = s * (1.0 - margin) / s.max()
    return (u * s) @ w.conj().T


def random_invertible(cfg: EnsembleConfig, stream=None,
                      cond: float = 100.0) -> np.ndarray:
    """``U diag(s) W*`` with singular values log-uniform around 1, ratio at most ``cond``."""
    rng = _rng(cfg, stream)
    u = _unitary(rng, cfg.dim, cfg.complex)
    w = _unitary(rng, cfg.dim, cfg.complex)
    s = _log_uniform(rng, cfg.dim, cond)
    return (u * s) @ w.conj().T


def random_projection_pair(cfg: EnsembleConfig, stream=None,
                           cut: int | None = None):
    """Complementary orthogonal projections ``p + q = I`` from a random basis.

    The rank of ``p`` is ``cut`` (uniform in ``[1, dim-1]`` if not given).
    Returns ``(p, q)``; ``range_basis`` recovers orthonormal bases of the ranges.
    """
    if cfg.dim < 2 and cut is None:
        raise UsageError("projection pairs need dim >= 2")
    rng = _rng(cfg, stream)
    if cut is None:
        cut = int(rng.integers(1, cfg.dim))
    if not 0 <= cut <= cfg.dim:
        raise UsageError(f"cut {cut} outside [0, {cfg.dim}]")
    u = _unitary(rng, cfg.dim, cfg.complex)
    pb, qb = u[:, :cut], u[:, cut:]
    return pb @ pb.conj().T, qb @ qb.conj().T


def range_basis(p: np.ndarray, tol: float = 0.5) -> np.ndarray:
    """Orthonormal basis (columns) of the range of an orthogonal projection."""
    w, v = np.linalg.eigh(np.asarray(p))
    return v[:, w > tol]
