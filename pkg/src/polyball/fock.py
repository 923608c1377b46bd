"""Twisted shift matrices on a truncated basis and the checks of their relations.

Shifts are stored sparse as compressions ``P_N S P_N``: images past grade ``N``
are dropped. Grade-lowering identities are then exact everywhere and
grade-raising ones on the interior (total grade at most ``N - 1``).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .numerics import schur_norm_bound
from .twist import TwistSpec, mu_letter
from .words import TruncatedBasis


@dataclass(frozen=True)
class ShiftOperator:
    matrix: sp.csr_matrix
    i: int
    s: int
    basis: TruncatedBasis = field(repr=False)

    def adjoint(self) -> sp.csr_matrix:
        return build_adjoint(self)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def _check_compatible(basis: TruncatedBasis, spec: TwistSpec) -> None:
    if tuple(basis.n) != tuple(spec.n):
        raise ValueError(f"basis arities {basis.n} do not match twist arities {spec.n}")


def build_shift(basis: TruncatedBasis, spec: TwistSpec, i: int, s: int) -> ShiftOperator:
    """Compressed shift ``S_{i,s}`` (1-based indices)."""
    _check_compatible(basis, spec)
    spec._check_slot(i, s)
    rows, cols, vals = [], [], []
    for pos, w in enumerate(basis):
        if basis.grades[pos] >= basis.N:
            continue
        target = w[: i - 1] + ((s,) + w[i - 1],) + w[i:]
        rows.append(basis.lookup(target))
        cols.append(pos)
        vals.append(mu_letter(spec, i, s, w))
    M = sp.csr_matrix((np.array(vals, dtype=complex), (rows, cols)), shape=(basis.size, basis.size))
    return ShiftOperator(M, i, s, basis)


def build_adjoint(shift: ShiftOperator) -> sp.csr_matrix:
    return shift.matrix.conj().T.tocsr()


class ShiftFamily:
    """All shifts of a (basis, twist) pair, built lazily and cached.

    ``S(i, s)`` and ``tensor(i, s, m)`` use 1-based indices.
    """

    def __init__(self, basis: TruncatedBasis, spec: TwistSpec):
        _check_compatible(basis, spec)
        self.basis = basis
        self.spec = spec
        self._shifts: dict[tuple[int, int], ShiftOperator] = {}
        self._tensors: dict[tuple[int, int, int], sp.csr_matrix] = {}

    def slots(self):
        for i in range(1, self.spec.k + 1):
            for s in range(1, self.spec.n[i - 1] + 1):
                yield i, s

    def shift(self, i: int, s: int) -> ShiftOperator:
        key = (i, s)
        if key not in self._shifts:
            self._shifts[key] = build_shift(self.basis, self.spec, i, s)
        return self._shifts[key]

    def S(self, i: int, s: int) -> sp.csr_matrix:
        return self.shift(i, s).matrix

    def tensor(self, i: int, s: int, m: int) -> sp.csr_matrix:
        key = (i, s, m)
        if key not in self._tensors:
            self._tensors[key] = tensor_with_identity(self.S(i, s), m).tocsr()
        return self._tensors[key]


def tensor_with_identity(A, d: int):
    """``A (x) I_d`` with basis-major, coefficient-minor index order."""
    if d == 1:
        return A
    if sp.issparse(A):
        return sp.kron(A, sp.identity(d, dtype=complex, format="csr"), format="csr")
    return np.kron(A, np.eye(d, dtype=complex))


def grade_projection(basis: TruncatedBasis, n: int) -> sp.dia_matrix:
    if not 0 <= n <= basis.N:
        raise ValueError(f"grade {n} outside 0..{basis.N}")
    return sp.diags((basis.grades == n).astype(float)).astype(complex)


def interior_mask(basis: TruncatedBasis) -> np.ndarray:
    return basis.grades <= basis.N - 1


def interior_projection(basis: TruncatedBasis) -> sp.dia_matrix:
    """Projection onto multi-words of total length at most ``N - 1``."""
    if basis.N < 1:
        raise ValueError("interior is empty for N = 0")
    return sp.diags(interior_mask(basis).astype(float)).astype(complex)


def row_isometry_defect(basis: TruncatedBasis, spec: TwistSpec, i: int,
                        family: ShiftFamily | None = None) -> float:
    """Interior defect of the row-isometry relations for factor ``i``.

    Maximum of ``||(S_{i,s}* S_{i,t} - delta_st I) P_int||`` over slot pairs and
    of ``||(sum_s S_{i,s} S_{i,s}* - (I - E_i)) P_int||`` where ``E_i`` projects
    onto multi-words whose ``i``-th component is empty.
    """
    fam = family or ShiftFamily(basis, spec)
    P = interior_projection(basis) if basis.N >= 1 else sp.csr_matrix((basis.size, basis.size))
    I = sp.identity(basis.size, dtype=complex, format="csr")
    n_i = spec.n[i - 1]
    worst = 0.0
    for s in range(1, n_i + 1):
        for t in range(1, n_i + 1):
            R = fam.S(i, s).conj().T @ fam.S(i, t)
            if s == t:
                R = R - I
            worst = max(worst, schur_norm_bound(R @ P))
    empty_i = np.array([len(w[i - 1]) == 0 for w in basis], dtype=float)
    R = sum(fam.S(i, s) @ fam.S(i, s).conj().T for s in range(1, n_i + 1)) - sp.diags(1.0 - empty_i)
    worst = max(worst, schur_norm_bound(R @ P))
    return worst


def doubly_commuting_defect(basis: TruncatedBasis, spec: TwistSpec,
                            family: ShiftFamily | None = None) -> dict[str, float]:
    """Interior residuals of the doubly twisted commutation relations.

    Keys are ``"i,s|j,t"`` with values ``{"adjoint": ..., "product": ...}``;
    empty for ``k = 1``.
    """
    fam = family or ShiftFamily(basis, spec)
    out: dict[str, dict[str, float]] = {}
    if spec.k < 2:
        return out
    P = interior_projection(basis)
    for i, s in fam.slots():
        for j, t in fam.slots():
            if i == j:
                continue
            lam = spec.lam(i, j, s, t)
            Si, Sj = fam.S(i, s), fam.S(j, t)
            adj = Si.conj().T @ Sj - np.conj(lam) * (Sj @ Si.conj().T)
            prod_ = Si @ Sj - lam * (Sj @ Si)
            out[f"{i},{s}|{j},{t}"] = {
                "adjoint": schur_norm_bound(adj @ P),
                "product": schur_norm_bound(prod_ @ P),
            }
    return out


def shift_phi(family: ShiftFamily, i: int, X, m: int = 1):
    """``sum_s (S_{i,s} (x) I_m) X (S_{i,s} (x) I_m)*``."""
    out = None
    for s in range(1, family.spec.n[i - 1] + 1):
        S = family.tensor(i, s, m)
        term = S @ X @ S.conj().T
        out = term if out is None else out + term
    return out


def shift_defect(family: ShiftFamily, X=None, m: int = 1, order: str = "ascending"):
    """Composed defect of the shift maps applied to ``X`` (identity by default).

    ``order="ascending"`` applies ``id - Phi_1`` first and ``id - Phi_k`` last;
    ``"descending"`` the reverse. The maps commute, so both agree.
    """
    size = family.basis.size * m
    if X is None:
        X = sp.identity(size, dtype=complex, format="csr")
    factors = range(1, family.spec.k + 1)
    if order == "descending":
        factors = reversed(list(factors))
    elif order != "ascending":
        raise ValueError(f"unknown order {order!r}")
    for i in factors:
        X = X - shift_phi(family, i, X, m)
    return X


def vacuum_defect_residual(family: ShiftFamily) -> float:
    """``||Delta_S(I) - P_0||`` on the truncated space."""
    D = shift_defect(family)
    P0 = grade_projection(family.basis, 0)
    return schur_norm_bound(sp.csr_matrix(D - P0))


def monomial_matrix(family: ShiftFamily, letters) -> sp.csr_matrix:
    """``S_{1,beta_1} ... S_{k,beta_k}`` for the multi-word with the given letters."""
    size = family.basis.size
    M = sp.identity(size, dtype=complex, format="csr")
    for i, comp in enumerate(letters, start=1):
        for s in comp:
            M = M @ family.S(i, s)
    return M.tocsr()
