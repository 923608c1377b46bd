"""Multi-analytic operators, Beurling-type factorization, characteristic
functions and the functional models built from them.

Operators on ``basis (x) E`` use basis-major, coefficient-minor ordering, the
same layout as the Berezin kernel. Every shift is the compressed shift of the
truncation, so identities that hold in infinite dimensions are checked either
exactly (when the truncation preserves them) or on the interior rows/columns.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .ball import OperatorTuple, cnc_check, purity_report
from .berezin import (BerezinKernel, DefectSpace, build_kernel, defect_space, deficit_noise,
                      kernel_gram_deficit)
from .fock import ShiftFamily, interior_mask, shift_defect
from .numerics import (DEFAULT_TOLERANCES, Tolerances, hermitian_part, least_eigenvalue,
                       operator_norm, orthogonal_complement, orthonormal_range, psd_eig)
from .twist import TwistSpec
from .words import TruncatedBasis


class PreconditionError(ValueError):
    pass


class NotMultiAnalyticError(ValueError):
    pass


class CharFnNotAdmitted(PreconditionError):
    def __init__(self, least_eig: float):
        super().__init__(f"no characteristic function: least eigenvalue of the "
                         f"admissibility operator is {least_eig:.3e}")
        self.least_eig = least_eig


class NotUnitaryError(ValueError):
    pass


@dataclass
class MultiAnalyticOp:
    matrix: np.ndarray           # (size * mD) x (size * mE)
    mE: int
    mD: int
    residual: float
    basis: TruncatedBasis = field(repr=False)
    spec: TwistSpec = field(repr=False)


def _family(basis: TruncatedBasis, spec: TwistSpec, family: ShiftFamily | None) -> ShiftFamily:
    if family is not None:
        return family
    return ShiftFamily(basis, spec)


def _interior_rows(basis: TruncatedBasis, m: int) -> np.ndarray:
    return np.repeat(interior_mask(basis), m)


def multi_analytic_residual(A: np.ndarray, spec: TwistSpec, basis: TruncatedBasis, mE: int, mD: int,
                            family: ShiftFamily | None = None) -> float:
    """``max ||(A (S (x) I_E) - (S (x) I_D) A) P_int||`` over all slots."""
    A = np.asarray(A)
    if A.shape != (basis.size * mD, basis.size * mE):
        raise ValueError(f"operator of shape {A.shape} does not map basis(x)C^{mE} to basis(x)C^{mD}")
    fam = _family(basis, spec, family)
    cols = _interior_rows(basis, mE)
    if A.size == 0 or not cols.any():
        return 0.0
    worst = 0.0
    for i, s in fam.slots():
        left = (A @ fam.tensor(i, s, mE))[:, cols]
        right = fam.tensor(i, s, mD) @ A[:, cols]
        worst = max(worst, operator_norm(left - right))
    return worst


def support(A: np.ndarray, basis: TruncatedBasis, spec: TwistSpec, mE: int, mD: int,
            tol: float = DEFAULT_TOLERANCES.model, eps_rank: float = DEFAULT_TOLERANCES.eps_rank,
            family: ShiftFamily | None = None) -> np.ndarray:
    """Orthonormal basis of ``L``, where the support of ``A`` is ``basis (x) L``.

    ``L`` is the range of the grade-0 compression of ``A*``.
    """
    res = multi_analytic_residual(A, spec, basis, mE, mD, family)
    if res > tol:
        raise NotMultiAnalyticError(f"multi-analyticity residual {res:.3e} exceeds {tol:.1e}")
    grade0 = np.asarray(A).conj().T[:mE, :]
    Q, _ = orthonormal_range(grade0, eps_rank)
    return Q


def delta_S_tensor(Y, family: ShiftFamily, m: int, order: str = "descending") -> np.ndarray:
    """``(id - Phi_1) o ... o (id - Phi_k)(Y)`` for the shifts tensored with ``I_m``.

    The default applies ``id - Phi_k`` first; ``order="ascending"`` reverses
    the composition. The maps commute, so both agree.
    """
    Y = np.asarray(Y, dtype=complex)
    out = shift_defect(family, Y, m, order=order)
    return hermitian_part(np.asarray(out))


@dataclass
class BeurlingFactor:
    op: MultiAnalyticOp
    M: OperatorTuple | None            # tuple on G in G-coordinates
    G: np.ndarray                      # orthonormal basis of G (size*m x g)
    sqrt_values: np.ndarray            # square roots of the retained eigenvalues of Y
    defect: DefectSpace | None         # defect space of M (the D_* space)
    kernel: BerezinKernel | None
    factor_residual: float             # ||A A* - Y||
    leakage: float                     # ||Y^{1/2} (S* (x) I) restricted to ker Y||
    condition: float
    precondition_eig: float | None

    @property
    def A(self) -> np.ndarray:
        return self.op.matrix


def beurling_factorize(Y: np.ndarray, basis: TruncatedBasis, spec: TwistSpec, m: int,
                       tol: Tolerances = DEFAULT_TOLERANCES, spectrum=None,
                       family: ShiftFamily | None = None,
                       check_precondition: bool = True, floor: float | None = None) -> BeurlingFactor:
    """Multi-analytic ``A`` with ``A A* = Y``.

    ``G`` is the range of ``Y^{1/2}``; on it ``C_{i,s} Y^{1/2} g =
    Y^{1/2} (S_{i,s}* (x) I) g`` and ``M_{i,s} = C_{i,s}*``; then
    ``A = Y^{1/2} K_M*``. With ``spectrum=(values, vectors)`` supplied, the
    eigen-decomposition of ``Y`` is taken from it and eigenvalues above
    ``floor`` (default ``tol.range_floor``) are kept; otherwise ``Y`` is diagonalized and the
    relative ``tol.eps_rank`` cutoff applies.
    """
    Y = np.asarray(Y, dtype=complex)
    dim = basis.size * m
    if Y.shape != (dim, dim):
        raise ValueError(f"Y must be {dim}x{dim}")
    fam = _family(basis, spec, family)
    pre = None
    if check_precondition:
        D = delta_S_tensor(Y, fam, m)
        pre = least_eigenvalue(D)
        if pre < -tol.charfn_psd * max(1.0, operator_norm(D)):
            raise PreconditionError(f"Delta_(S(x)I)(Y) has eigenvalue {pre:.3e}")
    if spectrum is None:
        w, V = psd_eig(Y, tol.charfn_psd)
        keep = w > tol.eps_rank * max(w.max(initial=0.0), 1.0)
    else:
        w, V = spectrum
        w = np.asarray(w, dtype=float)
        keep = w > (tol.range_floor if floor is None else max(floor, tol.range_floor))
    Q = V[:, keep]
    s = np.sqrt(w[keep])
    g = Q.shape[1]
    if g == 0:
        A = np.zeros((dim, 0), dtype=complex)
        op = MultiAnalyticOp(A, 0, m, 0.0, basis, spec)
        return BeurlingFactor(op, None, Q, s, None, None, operator_norm(Y), 0.0, 1.0, pre)

    mats = [[None] * ni for ni in spec.n]
    leakage = 0.0
    for i, t in fam.slots():
        SQ = fam.tensor(i, t, m) @ Q                                # (S (x) I) Q
        Bq = SQ.conj().T @ Q                                        # Q* (S* (x) I) Q
        # C diag(s) = diag(s) Bq  on G-coordinates
        C = (s[:, None] * Bq) / s[None, :]
        mats[i - 1][t - 1] = C.conj().T
        # the part of Y^{1/2}(S*(x)I) living on ker Y must vanish
        leak = s[:, None] * (SQ.conj().T - Bq @ Q.conj().T)
        leakage = max(leakage, operator_norm(leak))
    M = OperatorTuple(mats)
    ds = defect_space(M, tol.eps_rank, clip_tol=tol.charfn_psd, fail_tol=tol.delta_fail)
    KM = build_kernel(M, basis, defect=ds)
    A = (Q * s) @ KM.matrix.conj().T
    resid = operator_norm(A @ A.conj().T - Y)
    mres = multi_analytic_residual(A, spec, basis, ds.rank, m, fam)
    op = MultiAnalyticOp(A, ds.rank, m, mres, basis, spec)
    cond = float(s.max() / s.min())
    return BeurlingFactor(op, M, Q, s, ds, KM, resid, leakage, cond, pre)


def invariance_residual(M_basis: np.ndarray, family: ShiftFamily, m: int) -> float:
    Q = np.asarray(M_basis)
    worst = 0.0
    for i, s in family.slots():
        X = family.tensor(i, s, m) @ Q
        worst = max(worst, operator_norm(X - Q @ (Q.conj().T @ X)))
    return worst


def beurling_subspace_check(M_basis: np.ndarray, basis: TruncatedBasis, spec: TwistSpec, m: int,
                            tol: Tolerances = DEFAULT_TOLERANCES,
                            family: ShiftFamily | None = None) -> dict:
    """Compare positivity of ``Delta(P_M)`` with double Lambda-commutation of the
    restricted shifts (evaluated on vectors of ``M`` below the top grade)."""
    fam = _family(basis, spec, family)
    Q = np.asarray(M_basis, dtype=complex)
    inv = invariance_residual(Q, fam, m)
    if inv > tol.model:
        raise PreconditionError(f"subspace is not invariant (residual {inv:.3e})")
    P = Q @ Q.conj().T
    D = delta_S_tensor(P, fam, m)
    lam = least_eigenvalue(D)
    positive = lam >= -tol.charfn_psd * max(1.0, operator_norm(D))
    V = {(i, s): Q.conj().T @ (fam.tensor(i, s, m) @ Q) for i, s in fam.slots()}
    top = ~_interior_rows(basis, m)
    inner = scipy.linalg.null_space(Q[top]) if top.any() else np.eye(Q.shape[1], dtype=complex)
    worst = 0.0
    for (i, s), Vi in V.items():
        for (j, t), Vj in V.items():
            if i == j:
                continue
            R = Vi.conj().T @ Vj - np.conj(spec.lam(i, j, s, t)) * (Vj @ Vi.conj().T)
            worst = max(worst, operator_norm(R @ inner))
    doubly = worst <= tol.model
    return {
        "invariance_residual": inv,
        "delta_least_eig": lam,
        "delta_positive": bool(positive),
        "doubly_commuting_residual": worst,
        "doubly_commuting": bool(doubly),
        "agree": bool(positive == doubly),
        "dim": int(Q.shape[1]),
    }


def kernel_complement(K: BerezinKernel) -> np.ndarray:
    """``Y = I - K K*`` on ``basis (x) D``."""
    n = K.matrix.shape[0]
    return np.eye(n, dtype=complex) - K.matrix @ K.matrix.conj().T


def admits_charfn(T: OperatorTuple, basis: TruncatedBasis, spec: TwistSpec,
                  tol: Tolerances = DEFAULT_TOLERANCES, family: ShiftFamily | None = None,
                  kernel: BerezinKernel | None = None) -> tuple[bool, float]:
    """Least eigenvalue of ``Delta_(S(x)I)(I - K_T K_T*)`` and whether it passes
    the relative PSD tolerance."""
    K = kernel or build_kernel(T, basis, tol.eps_rank)
    fam = _family(basis, spec, family)
    D = delta_S_tensor(kernel_complement(K), fam, K.m)
    lam = least_eigenvalue(D)
    return lam >= -tol.charfn_psd * max(1.0, operator_norm(D)), lam


def complement_spectrum(K: BerezinKernel, deficit: np.ndarray, tol: float = 1e-14):
    """Eigen-decomposition of ``I - K K*`` from the Gram deficit ``I - K*K``.

    With ``K*K = W diag(1 - rho) W*`` and ``U = K W diag(1/sigma)``, the
    complement equals ``(I - U U*) + U diag(rho) U*``; small ``rho`` come from
    ``deficit`` directly and keep full relative accuracy.
    """
    rho, Wv = np.linalg.eigh(hermitian_part(deficit))
    sigma2 = 1.0 - rho
    keep = sigma2 > tol
    U = (K.matrix @ Wv[:, keep]) / np.sqrt(sigma2[keep])
    Uperp = orthogonal_complement(U, K.matrix.shape[0])
    vals = np.concatenate([np.ones(Uperp.shape[1]), np.clip(rho[keep], 0.0, None)])
    vecs = np.hstack([Uperp, U])
    return vals, vecs


@dataclass
class CharFnResult:
    theta: MultiAnalyticOp
    factor: BeurlingFactor = field(repr=False)
    kernel: BerezinKernel = field(repr=False)
    Y: np.ndarray = field(repr=False)
    admits_eig: float
    gram_tail: float
    factorization_residual: float
    multi_analytic_residual: float
    partial_isometry_defect: float | None
    is_pure: bool

    @property
    def D(self) -> DefectSpace:
        return self.kernel.defect

    @property
    def D_star(self) -> DefectSpace | None:
        return self.factor.defect

    @property
    def M(self) -> OperatorTuple | None:
        return self.factor.M

    def as_dict(self, dump: bool = False) -> dict:
        out = {
            "N": self.kernel.N,
            "rank_D": self.kernel.m,
            "rank_D_star": self.theta.mE,
            "dim_G": int(self.factor.G.shape[1]),
            "admits_least_eig": self.admits_eig,
            "gram_tail": self.gram_tail,
            "residuals": {
                "factorization": self.factorization_residual,
                "multi_analyticity": self.multi_analytic_residual,
                "partial_isometry": self.partial_isometry_defect,
                "beurling_factor": self.factor.factor_residual,
                "kernel_leakage": self.factor.leakage,
            },
            "condition": self.factor.condition,
            "is_pure": self.is_pure,
        }
        if dump:
            from .io import dump_matrix
            out["theta"] = dump_matrix(self.theta.matrix)
        return out


def inner_check(theta) -> float:
    """``||(Theta* Theta)^2 - Theta* Theta||``."""
    Th = theta.matrix if isinstance(theta, MultiAnalyticOp) else np.asarray(theta)
    if Th.size == 0:
        return 0.0
    P = Th.conj().T @ Th
    return operator_norm(P @ P - P)


def characteristic_function(T: OperatorTuple, basis: TruncatedBasis, spec: TwistSpec,
                            tol: Tolerances = DEFAULT_TOLERANCES, family: ShiftFamily | None = None,
                            p_max: int = 200) -> CharFnResult:
    """``Theta_T`` with ``K_T K_T* + Theta Theta* = I`` on the truncation."""
    if tuple(basis.n) != T.n:
        raise ValueError("basis arities do not match the tuple")
    fam = _family(basis, spec, family)
    K = build_kernel(T, basis, tol.eps_rank)
    Y = kernel_complement(K)
    D = delta_S_tensor(Y, fam, K.m)
    lam = least_eigenvalue(D)
    if lam < -tol.charfn_psd * max(1.0, operator_norm(D)):
        raise CharFnNotAdmitted(lam)
    deficit = kernel_gram_deficit(T, basis.N, defect=K.defect, basis=basis)
    spectrum = complement_spectrum(K, deficit)
    floor = deficit_noise(T, basis.N, K.defect)
    factor = beurling_factorize(Y, basis, spec, K.m, tol, spectrum=spectrum, family=fam,
                                check_precondition=False, floor=floor)
    factor.precondition_eig = lam
    theta = factor.op
    Th = theta.matrix
    fres = operator_norm(K.matrix @ K.matrix.conj().T + Th @ Th.conj().T - np.eye(Y.shape[0]))
    pure = purity_report(T, p_max, tol.purity).is_pure
    pid = inner_check(theta) if pure else None
    return CharFnResult(theta, factor, K, Y, lam, operator_norm(deficit), fres, theta.residual, pid, pure)


@dataclass
class ModelReport:
    dim_H: int
    d: int
    projection_residual: float
    compression_residual: float
    H_basis: np.ndarray = field(repr=False)

    def as_dict(self) -> dict:
        return {"dim_H": self.dim_H, "d": self.d, "projection_residual": self.projection_residual,
                "compression_residual": self.compression_residual}


def model_space(T: OperatorTuple, cf: CharFnResult, tol: Tolerances = DEFAULT_TOLERANCES,
                family: ShiftFamily | None = None) -> ModelReport:
    """Pure model: ``H_T = (basis (x) D) minus range Theta`` with the compressed shifts."""
    if not cf.is_pure:
        raise PreconditionError("model space needs a pure tuple")
    if cf.factorization_residual > tol.model:
        raise PreconditionError(f"factorization residual {cf.factorization_residual:.3e} too large")
    K = cf.kernel
    basis = K.basis
    fam = _family(basis, cf.theta.spec, family)
    Th = cf.theta.matrix
    w, V = np.linalg.eigh(hermitian_part(Th @ Th.conj().T))
    null = w <= tol.eps_rank * max(1.0, w.max(initial=0.0))
    H = V[:, null]
    P = H @ H.conj().T
    KK = K.matrix @ K.matrix.conj().T
    proj = operator_norm(P - KK)
    worst = 0.0
    for i, s in T.slots():
        R = K.matrix @ T.op(i, s) - P @ (fam.tensor(i, s, K.m) @ K.matrix)
        worst = max(worst, operator_norm(R))
    return ModelReport(H.shape[1], T.d, proj, worst, H)


@dataclass
class CncModelReport:
    rank_D_theta: int
    dim_H: int
    d: int
    isometry_residual: float
    injectivity_sigma_min: float
    gamma_isometry_residual: float
    intertwining_residual: float
    pure_model_distance: float | None = None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def cnc_model_space(T: OperatorTuple, cf: CharFnResult, tol: Tolerances = DEFAULT_TOLERANCES,
                    family: ShiftFamily | None = None, box: Sequence[int] | None = None,
                    pure_model: ModelReport | None = None) -> CncModelReport:
    """Model on ``(basis (x) D) (+) closure D_Theta(basis (x) D_*)`` minus the graph of
    ``phi -> Theta phi (+) D_Theta phi``."""
    box = tuple(box) if box is not None else (200,) * T.k
    ok, _ = cnc_check(T, box, tol.cnc)
    if not ok:
        raise PreconditionError("tuple is not completely non-coisometric at the given box")
    K = cf.kernel
    basis = K.basis
    fam = _family(basis, cf.theta.spec, family)
    Th = cf.theta.matrix
    big = Th.shape[0]
    w, V = np.linalg.eigh(hermitian_part(np.eye(Th.shape[1]) - Th.conj().T @ Th))
    if w.size and w[0] < -tol.charfn_psd * max(1.0, np.abs(w).max()):
        raise PreconditionError(f"Theta is not a contraction (eigenvalue {w[0]:.3e})")
    keep = w > tol.eps_rank * max(1.0, w.max(initial=0.0))
    Z = V[:, keep]
    Psi = np.vstack([Th, np.sqrt(w[keep])[:, None] * Z.conj().T])
    iso = operator_norm(Psi.conj().T @ Psi - np.eye(Psi.shape[1])) if Psi.size else 0.0
    R, _ = orthonormal_range(Psi, tol.eps_rank) if Psi.size else (np.zeros((Psi.shape[0], 0)), 0)
    QH = orthogonal_complement(R, Psi.shape[0])
    top = QH[:big]
    sig = np.linalg.svd(top, compute_uv=False)
    smin = float(sig.min()) if sig.size else 0.0
    if smin <= tol.model:
        raise PreconditionError(f"projection onto basis(x)D is not injective on the model (sigma {smin:.3e})")
    G = K.gram()
    Gamma = top.conj().T @ K.matrix @ np.linalg.inv(G)
    giso = operator_norm(Gamma.conj().T @ Gamma - np.eye(T.d))
    rows = _interior_rows(basis, K.m)
    worst = 0.0
    for i, s in T.slots():
        Gs = Gamma @ T.op(i, s) @ Gamma.conj().T
        lhs = top @ Gs.conj().T
        rhs = fam.tensor(i, s, K.m).conj().T @ top
        worst = max(worst, operator_norm((lhs - rhs)[rows]))
    dist = None
    if pure_model is not None:
        Qt, _ = orthonormal_range(top, tol.eps_rank)
        dist = operator_norm(Qt @ Qt.conj().T - pure_model.H_basis @ pure_model.H_basis.conj().T)
    return CncModelReport(int(Z.shape[1]), int(QH.shape[1]), T.d, iso, smin, giso, worst, dist)


def _check_unitary(u: np.ndarray, tol: float, name: str) -> float:
    u = np.asarray(u)
    if u.shape[0] != u.shape[1]:
        raise NotUnitaryError(f"{name} is not square: {u.shape}")
    defect = operator_norm(u.conj().T @ u - np.eye(u.shape[0])) if u.size else 0.0
    if defect > tol:
        raise NotUnitaryError(f"{name} has unitarity defect {defect:.3e}")
    return defect


def coincide_check(theta, theta2, u: np.ndarray, u_star: np.ndarray,
                   tol: float = DEFAULT_TOLERANCES.unitary) -> float:
    """``||(I (x) u) Theta - Theta' (I (x) u_*)||``."""
    A = theta.matrix if isinstance(theta, MultiAnalyticOp) else np.asarray(theta)
    B = theta2.matrix if isinstance(theta2, MultiAnalyticOp) else np.asarray(theta2)
    _check_unitary(u, tol, "u")
    _check_unitary(u_star, tol, "u_*")
    mD, mE = u.shape[0], u_star.shape[0]
    size = A.shape[0] // mD if mD else B.shape[0] // max(u.shape[0], 1)
    left = np.kron(np.eye(size), u) @ A
    right = B @ np.kron(np.eye(size), u_star)
    if left.shape != right.shape:
        raise ValueError(f"shape mismatch {left.shape} vs {right.shape}")
    return operator_norm(left - right)


def factorization_partial_isometry(A1: np.ndarray, A2: np.ndarray, basis: TruncatedBasis,
                                   m1: int, m2: int, cutoff: float = 1e-10) -> dict:
    """Partial isometry ``V`` with ``A1 = A2 (I (x) V)`` for two factorizations
    of the same operator, recovered from the grade-0 rows of ``A1*`` and ``A2*``."""
    B1 = np.asarray(A1).conj().T[:m1]
    B2 = np.asarray(A2).conj().T[:m2]
    V = B2 @ np.linalg.pinv(B1, rcond=cutoff)
    size = basis.size
    resid = operator_norm(np.asarray(A1) - np.asarray(A2) @ np.kron(np.eye(size), V))
    VV = V.conj().T @ V
    return {"V": V, "residual": resid, "partial_isometry_defect": operator_norm(VV @ VV - VV),
            "same_product": operator_norm(A1 @ A1.conj().T - A2 @ A2.conj().T)}


def unitary_invariance_experiment(T: OperatorTuple, W: np.ndarray, basis: TruncatedBasis,
                                  spec: TwistSpec, tol: Tolerances = DEFAULT_TOLERANCES,
                                  family: ShiftFamily | None = None, cf: CharFnResult | None = None) -> dict:
    """Characteristic functions of ``T`` and ``W T W*`` coincide via ``u = W|_D``
    and ``u_* = (I (x) W)|_{D_*}``."""
    _check_unitary(W, tol.unitary, "W")
    fam = _family(basis, spec, family)
    cf1 = cf or characteristic_function(T, basis, spec, tol, fam)
    cf2 = characteristic_function(T.conjugate_by(W), basis, spec, tol, fam)
    if cf1.D.rank != cf2.D.rank or cf1.theta.mE != cf2.theta.mE:
        raise PreconditionError(f"defect ranks differ: D {cf1.D.rank} vs {cf2.D.rank}, "
                                f"D_* {cf1.theta.mE} vs {cf2.theta.mE}")
    u = cf2.D.vectors.conj().T @ W @ cf1.D.vectors
    size = basis.size
    if cf1.theta.mE:
        E1 = cf1.factor.G @ cf1.factor.defect.vectors
        E2 = cf2.factor.G @ cf2.factor.defect.vectors
        u_star = E2.conj().T @ np.kron(np.eye(size), u) @ E1
    else:
        u_star = np.zeros((0, 0), dtype=complex)
    u_def = operator_norm(u.conj().T @ u - np.eye(u.shape[0])) if u.size else 0.0
    us_def = operator_norm(u_star.conj().T @ u_star - np.eye(u_star.shape[0])) if u_star.size else 0.0
    residual = coincide_check(cf1.theta, cf2.theta, u, u_star, tol=max(tol.unitary, 10 * max(u_def, us_def)))
    return {"residual": residual, "u_unitarity": u_def, "u_star_unitarity": us_def,
            "rank_D": cf1.D.rank, "rank_D_star": cf1.theta.mE}


def zero_charfn_check(T: OperatorTuple, basis: TruncatedBasis, spec: TwistSpec,
                      tol: Tolerances = DEFAULT_TOLERANCES, box: Sequence[int] | None = None,
                      family: ShiftFamily | None = None) -> dict:
    """``||Theta_T||`` next to ``||K_T K_T* - I||``; both vanish exactly for shift copies."""
    box = tuple(box) if box is not None else (200,) * T.k
    ok, lam = cnc_check(T, box, tol.cnc)
    if not ok:
        raise PreconditionError(f"tuple is not completely non-coisometric (box eigenvalue {lam:.3e})")
    cf = characteristic_function(T, basis, spec, tol, family)
    KK = cf.kernel.matrix @ cf.kernel.matrix.conj().T
    return {"theta_norm": operator_norm(cf.theta.matrix),
            "kernel_coisometry_defect": operator_norm(KK - np.eye(KK.shape[0]))}
