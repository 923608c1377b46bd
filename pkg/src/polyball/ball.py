"""Operator tuples, the completely positive maps they generate, and the
membership, interior, purity and c.n.c. predicates of the twisted polyball."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .numerics import DEFAULT_TOLERANCES, least_eigenvalue, operator_norm
from .twist import TwistSpec

DEFAULT_R_GRID = tuple(np.round(np.arange(0.0, 0.951, 0.05), 2)) + (0.99,)


class OperatorTuple:
    """k rows of square matrices ``T[i][s]`` acting on ``C^d`` (0-based storage).

    ``op(i, s)`` uses the 1-based convention of the rest of the toolkit.
    """

    def __init__(self, mats: Sequence[Sequence[np.ndarray]]):
        rows = [[np.asarray(M, dtype=complex) for M in row] for row in mats]
        if not rows or any(len(r) == 0 for r in rows):
            raise ValueError("every factor needs at least one operator")
        d = rows[0][0].shape[0]
        if d < 1:
            raise ValueError("dimension must be positive")
        for row in rows:
            for M in row:
                if M.shape != (d, d):
                    raise ValueError(f"expected {d}x{d} matrices, got {M.shape}")
        self.mats = rows
        self.d = d
        self.k = len(rows)
        self.n = tuple(len(r) for r in rows)

    @classmethod
    def scalars(cls, values: Sequence[Sequence[complex]]) -> "OperatorTuple":
        return cls([[np.array([[v]], dtype=complex) for v in row] for row in values])

    @classmethod
    def zero(cls, n: Sequence[int], d: int) -> "OperatorTuple":
        return cls([[np.zeros((d, d), dtype=complex) for _ in range(ni)] for ni in n])

    def op(self, i: int, s: int) -> np.ndarray:
        return self.mats[i - 1][s - 1]

    def slots(self):
        for i in range(1, self.k + 1):
            for s in range(1, self.n[i - 1] + 1):
                yield i, s

    def map(self, f) -> "OperatorTuple":
        return OperatorTuple([[f(M) for M in row] for row in self.mats])

    def conjugate_by(self, W: np.ndarray) -> "OperatorTuple":
        Wh = W.conj().T
        return self.map(lambda M: W @ M @ Wh)

    def word_product(self, letters) -> np.ndarray:
        """``T_{1,beta_1} ... T_{k,beta_k}`` for a multi-word given by its letters."""
        out = np.eye(self.d, dtype=complex)
        for i, comp in enumerate(letters):
            for s in comp:
                out = out @ self.mats[i][s - 1]
        return out

    def __repr__(self) -> str:
        return f"OperatorTuple(k={self.k}, n={self.n}, d={self.d})"


def scaled_tuple(T: OperatorTuple, r: float) -> OperatorTuple:
    if not 0 <= r <= 1:
        raise ValueError("scale must lie in [0, 1]")
    return T.map(lambda M: r * M)


def phi_map(T: OperatorTuple, i: int, X: np.ndarray, r: float = 1.0) -> np.ndarray:
    """``sum_s r^2 T_{i,s} X T_{i,s}*``."""
    X = np.asarray(X)
    if X.shape != (T.d, T.d):
        raise ValueError(f"X must be {T.d}x{T.d}")
    out = np.zeros((T.d, T.d), dtype=complex)
    for M in T.mats[i - 1]:
        out += M @ X @ M.conj().T
    return (r * r) * out


def defect_delta(T: OperatorTuple, r: float = 1.0, X: np.ndarray | None = None,
                 order: Sequence[int] | None = None) -> np.ndarray:
    """Composed defect applied to ``X`` (default ``I``): ``id - Phi_1`` acts first.

    ``order`` lists factors in application order and is only used to test that
    the result does not depend on it.
    """
    X = np.eye(T.d, dtype=complex) if X is None else np.asarray(X, dtype=complex)
    for i in (order or range(1, T.k + 1)):
        X = X - phi_map(T, i, X, r)
    return X


def commutation_residual(T: OperatorTuple, spec: TwistSpec) -> float:
    """Largest ``||T_{i,s} T_{j,t} - lambda_ij(s,t) T_{j,t} T_{i,s}||`` over ``i < j``."""
    if tuple(spec.n) != T.n:
        raise ValueError("twist arities do not match the tuple")
    worst = 0.0
    for i in range(1, T.k + 1):
        for j in range(i + 1, T.k + 1):
            for s in range(1, T.n[i - 1] + 1):
                for t in range(1, T.n[j - 1] + 1):
                    A, B = T.op(i, s), T.op(j, t)
                    worst = max(worst, operator_norm(A @ B - spec.lam(i, j, s, t) * (B @ A)))
    return worst


@dataclass
class PurityReport:
    curves: dict[int, list[float]]
    is_pure: bool
    tol: float
    p_max: int


@dataclass
class MembershipReport:
    commutation_residual: float
    row_contraction_margins: dict[int, float]
    delta_min_eigs: dict[float, float]
    is_member: bool
    is_interior: bool
    is_pure: bool
    is_cnc: bool
    interior_margin: float
    cnc_least_eig: float
    box: tuple[int, ...]
    purity: PurityReport = field(repr=False)
    tolerances: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "commutation_residual": self.commutation_residual,
            "row_contraction_margins": {str(k): v for k, v in self.row_contraction_margins.items()},
            "delta_min_eigs": {f"{r:g}": v for r, v in self.delta_min_eigs.items()},
            "is_member": self.is_member,
            "is_interior": self.is_interior,
            "interior_margin": self.interior_margin,
            "is_pure": self.is_pure,
            "purity_curves": {str(k): v for k, v in self.purity.curves.items()},
            "purity_rule": f"decay below {self.purity.tol:g} by p={self.purity.p_max}",
            "is_cnc": self.is_cnc,
            "cnc_box": list(self.box),
            "cnc_least_eig": self.cnc_least_eig,
            "tolerances": self.tolerances,
        }


def check_interior(T: OperatorTuple, tol: float = DEFAULT_TOLERANCES.interior) -> tuple[bool, float]:
    margin = least_eigenvalue(defect_delta(T))
    return margin > tol, margin


def purity_report(T: OperatorTuple, p_max: int = 200, tol: float = DEFAULT_TOLERANCES.purity) -> PurityReport:
    """Decay curves ``||Phi_{T_i}^p(I)||`` for ``p = 1..p_max``."""
    if p_max < 1:
        raise ValueError("p_max must be at least 1")
    curves = {}
    pure = True
    for i in range(1, T.k + 1):
        X = np.eye(T.d, dtype=complex)
        curve = []
        for _ in range(p_max):
            X = phi_map(T, i, X)
            curve.append(operator_norm(X))
            if curve[-1] == 0.0:
                break
        curves[i] = curve
        pure = pure and curve[-1] <= tol
    return PurityReport(curves, pure, tol, p_max)


def phi_limit(T: OperatorTuple, i: int, iterations: int = 10000, tol: float = 1e-13):
    """Iterate ``X <- Phi_{T_i}(X)`` from ``I``; returns ``(X, converged)``."""
    X = np.eye(T.d, dtype=complex)
    for _ in range(iterations):
        Y = phi_map(T, i, X)
        if operator_norm(Y - X) <= tol:
            return Y, True
        X = Y
    return X, False


def box_defect(T: OperatorTuple, p: Sequence[int]) -> np.ndarray:
    """``(id - Phi_k^{p_k}) o ... o (id - Phi_1^{p_1})(I)``."""
    if len(p) != T.k or any(pi < 1 for pi in p):
        raise ValueError("box needs one positive exponent per factor")
    X = np.eye(T.d, dtype=complex)
    for i, pi in enumerate(p, start=1):
        Y = X
        for _ in range(pi):
            Y = phi_map(T, i, Y)
        X = X - Y
    return 0.5 * (X + X.conj().T)


def cnc_check(T: OperatorTuple, p: Sequence[int], tol: float = DEFAULT_TOLERANCES.cnc) -> tuple[bool, float]:
    """One-sided c.n.c. proxy: least eigenvalue of the box defect at ``p``."""
    lam = least_eigenvalue(box_defect(T, p))
    return lam > tol, lam


def check_membership(T: OperatorTuple, spec: TwistSpec, r_grid: Sequence[float] = DEFAULT_R_GRID,
                     tol=DEFAULT_TOLERANCES, p_max: int = 200,
                     box: Sequence[int] | None = None) -> MembershipReport:
    """Full membership report; failures are recorded, not raised."""
    if any(not 0 <= r < 1 for r in r_grid):
        raise ValueError("r-grid must lie in [0, 1)")
    comm = commutation_residual(T, spec)
    margins = {}
    for i in range(1, T.k + 1):
        margins[i] = least_eigenvalue(np.eye(T.d) - phi_map(T, i, np.eye(T.d, dtype=complex)))
    deltas = {}
    psd_ok = True
    for r in r_grid:
        D = defect_delta(T, r)
        lam = least_eigenvalue(D)
        deltas[float(r)] = lam
        if lam < -tol.psd * max(operator_norm(D), 1.0):
            psd_ok = False
    rows_ok = all(m >= -tol.psd for m in margins.values())
    is_member = comm <= tol.commutation and psd_ok and rows_ok
    interior, margin = check_interior(T, tol.interior)
    purity = purity_report(T, p_max, tol.purity)
    box = tuple(box) if box is not None else (p_max,) * T.k
    cnc, cnc_eig = cnc_check(T, box, tol.cnc)
    return MembershipReport(
        commutation_residual=comm,
        row_contraction_margins=margins,
        delta_min_eigs=deltas,
        is_member=is_member,
        is_interior=is_member and interior,
        is_pure=purity.is_pure,
        is_cnc=cnc,
        interior_margin=margin,
        cnc_least_eig=cnc_eig,
        box=box,
        purity=purity,
        tolerances=tol.as_dict(),
    )
