"""Dense numerical kernels shared by every module.

PSD clipping, Hermitian square roots, range bases, least-squares solves on a
subspace and operator norms, plus the tolerance registry that the reports
carry around.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

import numpy as np
import scipy.linalg
import scipy.sparse as sp


class IndefiniteError(ValueError):
    """Raised when a matrix expected to be PSD has a genuinely negative eigenvalue."""


class InconsistentSolveError(ValueError):
    """Raised when a right-hand side does not lie in the prescribed range."""


@dataclass(frozen=True)
class Tolerances:
    """Named tolerances used across the toolkit.

    Every report embeds the instance it was produced with, and the CLI
    overrides individual entries through ``--tol name=value``.
    """

    unit_modulus: float = 1e-9
    eps_rank: float = 1e-10
    psd: float = 1e-10
    delta_clip: float = 1e-10
    delta_fail: float = 1e-8
    commutation: float = 1e-10
    interior: float = 1e-12
    purity: float = 1e-12
    cnc: float = 1e-10
    shift: float = 1e-12
    kernel: float = 1e-10
    intertwining: float = 1e-12
    calculus: float = 1e-10
    charfn_psd: float = 1e-9
    model: float = 1e-8
    unitary: float = 1e-10
    range_floor: float = 1e-16
    solve: float = 1e-8
    tail_slack: float = 1e-12

    def with_overrides(self, **overrides: float) -> "Tolerances":
        known = {f.name for f in fields(self)}
        bad = set(overrides) - known
        if bad:
            raise KeyError(f"unknown tolerance(s): {sorted(bad)}")
        for name, value in overrides.items():
            if not value > 0:
                raise ValueError(f"tolerance {name} must be positive, got {value}")
        return replace(self, **{k: float(v) for k, v in overrides.items()})

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT_TOLERANCES = Tolerances()


@dataclass
class PsdReport:
    least_eigenvalue: float
    norm: float
    clip_count: int
    rel_tol: float


def hermitian_part(X: np.ndarray) -> np.ndarray:
    return 0.5 * (X + X.conj().T)


def _check_hermitian(X: np.ndarray, tol: float = 1e-10) -> None:
    scale = max(np.abs(X).max(initial=0.0), 1.0)
    if np.abs(X - X.conj().T).max(initial=0.0) > tol * scale:
        raise ValueError("matrix is not Hermitian")


def psd_floor(X, rel_tol: float = 1e-10):
    """Clip small negative eigenvalues of a Hermitian matrix to zero.

    Eigenvalues in ``[-rel_tol*||X||, 0)`` are set to zero; anything more
    negative raises :class:`IndefiniteError`. Returns the clipped matrix and a
    :class:`PsdReport` describing the input.
    """
    X = np.asarray(X)
    _check_hermitian(X)
    w, V = np.linalg.eigh(hermitian_part(X))
    norm = float(np.abs(w).max(initial=0.0))
    least = float(w.min(initial=0.0)) if w.size else 0.0
    floor = -rel_tol * norm
    if w.size and least < floor:
        raise IndefiniteError(f"least eigenvalue {least:.3e} below {floor:.3e}")
    neg = w < 0
    report = PsdReport(least, norm, int(neg.sum()), rel_tol)
    if not neg.any():
        return X, report
    w = np.where(neg, 0.0, w)
    return (V * w) @ V.conj().T, report


def psd_eig(X, rel_tol: float = 1e-10):
    """Eigen-decomposition of a PSD matrix after :func:`psd_floor`'s clipping rule."""
    X = np.asarray(X)
    _check_hermitian(X)
    w, V = np.linalg.eigh(hermitian_part(X))
    norm = float(np.abs(w).max(initial=0.0))
    if w.size and w.min() < -rel_tol * norm:
        raise IndefiniteError(f"least eigenvalue {w.min():.3e} below {-rel_tol * norm:.3e}")
    return np.clip(w, 0.0, None), V


def sqrt_psd(X, rel_tol: float = 1e-10) -> np.ndarray:
    w, V = psd_eig(X, rel_tol)
    return (V * np.sqrt(w)) @ V.conj().T


def least_eigenvalue(X) -> float:
    X = np.asarray(X)
    if X.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(hermitian_part(X))[0])


def orthonormal_range(X, eps_rank: float = 1e-10):
    """Orthonormal basis of the column space of ``X``.

    Singular values at or below ``eps_rank`` times the largest one are
    treated as zero. Returns ``(Q, rank)``.
    """
    X = np.asarray(X)
    if X.size == 0:
        return np.zeros((X.shape[0], 0), dtype=complex), 0
    U, s, _ = np.linalg.svd(X, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((X.shape[0], 0), dtype=U.dtype), 0
    rank = int(np.count_nonzero(s > eps_rank * s[0]))
    return U[:, :rank], rank


def orthogonal_complement(Q: np.ndarray, dim: int | None = None) -> np.ndarray:
    """Orthonormal basis of the complement of the (orthonormal) columns of ``Q``."""
    n = Q.shape[0] if dim is None else dim
    if Q.shape[1] == 0:
        return np.eye(n, dtype=complex)
    return scipy.linalg.null_space(Q.conj().T)


def projector(Q: np.ndarray) -> np.ndarray:
    return Q @ Q.conj().T


def solve_on_range(B, C, range_basis, tol: float = 1e-8, cutoff: float = 1e-14):
    """Least-squares ``X`` with ``X @ (Q* B) ~ Q* C`` in range coordinates.

    ``range_basis`` has orthonormal columns ``Q``; the columns of ``C`` must
    lie in its span. Returns ``(X, condition_number, residual)`` where the
    condition number is taken over the retained singular values of ``Q* B``.
    """
    Q = np.asarray(range_basis)
    B = np.asarray(B)
    C = np.asarray(C)
    scale = max(operator_norm(C), 1.0)
    leak = operator_norm(C - Q @ (Q.conj().T @ C)) if C.size else 0.0
    if leak > 1e-8 * scale:
        raise InconsistentSolveError(f"right-hand side leaves the range (residual {leak:.3e})")
    Bc = Q.conj().T @ B
    Cc = Q.conj().T @ C
    U, s, Vh = np.linalg.svd(Bc, full_matrices=False)
    keep = s > cutoff * (s[0] if s.size else 0.0)
    if not keep.any():
        return np.zeros((Q.shape[1], Q.shape[1]), dtype=complex), np.inf, 0.0
    s_k = s[keep]
    # X Bc = Cc  =>  X = Cc Bc^+
    X = (Cc @ Vh[keep].conj().T) / s_k @ U[:, keep].conj().T
    residual = operator_norm(X @ Bc - Cc)
    if residual > tol * scale:
        raise InconsistentSolveError(f"least-squares residual {residual:.3e} exceeds {tol:.1e}")
    return X, float(s_k[0] / s_k[-1]), residual


def operator_norm(X) -> float:
    """Largest singular value; sparse input is densified."""
    if sp.issparse(X):
        X = X.toarray()
    X = np.asarray(X)
    if X.size == 0:
        return 0.0
    return float(np.linalg.norm(X, 2))


def schur_norm_bound(X) -> float:
    """Upper bound sqrt(max row sum * max column sum) on the operator norm.

    Cheap for sparse matrices; exact for matrices with at most one nonzero
    per row and column.
    """
    A = abs(X) if sp.issparse(X) else np.abs(np.asarray(X))
    if A.shape[0] == 0 or A.shape[1] == 0:
        return 0.0
    rows = np.asarray(A.sum(axis=1)).ravel().max()
    cols = np.asarray(A.sum(axis=0)).ravel().max()
    return float(np.sqrt(rows * cols))


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR with phase correction."""
    Z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    phases = np.diag(R) / np.abs(np.diag(R))
    return Q * phases
