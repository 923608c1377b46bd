"""Berezin kernels of polyball tuples, the Berezin transform, the polynomial
and radial functional calculus, and a von Neumann inequality harness."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .ball import OperatorTuple, defect_delta, phi_map
from .fock import ShiftFamily, interior_mask, tensor_with_identity
from .hardy import FormalSeries, tail_bound
from .numerics import DEFAULT_TOLERANCES, IndefiniteError, hermitian_part, operator_norm
from .words import TruncatedBasis, compositions


class NotAMemberError(ValueError):
    pass


@dataclass
class DefectSpace:
    """Spectral realization of the closure of the range of the defect operator."""

    vectors: np.ndarray          # d x m, orthonormal
    values: np.ndarray           # m retained eigenvalues
    sqrt: np.ndarray             # d x d square root of the clipped defect
    delta: np.ndarray = field(repr=False)   # defect as computed
    dropped_vectors: np.ndarray = field(repr=False, default=None)
    dropped_values: np.ndarray = field(repr=False, default=None)

    @property
    def rank(self) -> int:
        return self.vectors.shape[1]

    @property
    def d(self) -> int:
        return self.vectors.shape[0]

    def coords(self, x: np.ndarray) -> np.ndarray:
        return self.vectors.conj().T @ x

    @property
    def root_frame(self) -> np.ndarray:
        """``Delta^{1/2} V`` expressed as ``V diag(sqrt(values))`` (d x m)."""
        return self.vectors * np.sqrt(self.values)


def defect_space(T: OperatorTuple, eps_rank: float = DEFAULT_TOLERANCES.eps_rank,
                 clip_tol: float = DEFAULT_TOLERANCES.delta_clip,
                 fail_tol: float = DEFAULT_TOLERANCES.delta_fail) -> DefectSpace:
    D = hermitian_part(defect_delta(T))
    w, V = np.linalg.eigh(D)
    if w.size and w[0] < -fail_tol:
        raise NotAMemberError(f"defect has eigenvalue {w[0]:.3e}; tuple is not in the polyball")
    if w.size and w[0] < -clip_tol * max(abs(w).max(), 1.0):
        raise IndefiniteError(f"defect eigenvalue {w[0]:.3e} exceeds the clip tolerance")
    keep = w > eps_rank * max(w.max(initial=0.0), 1.0)
    vals = w[keep]
    vecs = V[:, keep]
    root = (vecs * np.sqrt(vals)) @ vecs.conj().T
    return DefectSpace(vecs, vals, root, D, V[:, ~keep], w[~keep])


def word_images(T: OperatorTuple, basis: TruncatedBasis, X: np.ndarray) -> np.ndarray:
    """Stack of ``T_beta @ X`` for every multi-word in basis order (shape ``(size, d, c)``)."""
    parent, factor, letter = basis.peel
    X = np.asarray(X, dtype=complex)
    out = np.empty((basis.size,) + X.shape, dtype=complex)
    out[0] = X
    for pos in range(1, basis.size):
        out[pos] = T.mats[factor[pos]][letter[pos]] @ out[parent[pos]]
    return out


@dataclass
class BerezinKernel:
    matrix: np.ndarray           # (size * m) x d
    basis: TruncatedBasis = field(repr=False)
    defect: DefectSpace = field(repr=False)

    @property
    def N(self) -> int:
        return self.basis.N

    @property
    def m(self) -> int:
        return self.defect.rank

    @property
    def d(self) -> int:
        return self.matrix.shape[1]

    def block(self, position: int) -> np.ndarray:
        return self.matrix[position * self.m:(position + 1) * self.m]

    def gram(self) -> np.ndarray:
        return self.matrix.conj().T @ self.matrix


def build_kernel(T: OperatorTuple, basis: TruncatedBasis, eps_rank: float = DEFAULT_TOLERANCES.eps_rank,
                 defect: DefectSpace | None = None) -> BerezinKernel:
    """Kernel with block ``coords(Delta^{1/2} T_beta^*)`` at each multi-word ``beta``."""
    if tuple(basis.n) != T.n:
        raise ValueError("basis arities do not match the tuple")
    ds = defect or defect_space(T, eps_rank)
    m = ds.rank
    imgs = word_images(T, basis, ds.root_frame)       # size x d x m
    K = np.ascontiguousarray(np.conj(np.transpose(imgs, (0, 2, 1)))).reshape(basis.size * m, T.d)
    return BerezinKernel(K, basis, ds)


def kernel_contraction_defect(K: BerezinKernel) -> float:
    return max(0.0, operator_norm(K.matrix) - 1.0)


def intertwining_residual(T: OperatorTuple, K: BerezinKernel, family: ShiftFamily,
                          interior: bool = True) -> float:
    """Max over slots of ``||K T_{i,s}^* - (S_{i,s}^* (x) I) K||``.

    With ``interior=True`` only rows of total grade at most ``N - 1`` are
    compared; the top-grade rows would need kernel blocks of grade ``N + 1``.
    """
    m = K.m
    if interior:
        rows = np.repeat(interior_mask(K.basis), m)
    else:
        rows = np.ones(K.matrix.shape[0], dtype=bool)
    worst = 0.0
    for i, s in T.slots():
        St = family.tensor(i, s, m)
        R = K.matrix @ T.op(i, s).conj().T - St.conj().T @ K.matrix
        worst = max(worst, operator_norm(R[rows]))
    return worst


def berezin_transform(K: BerezinKernel, A) -> np.ndarray:
    """``K^* (A (x) I_m) K``."""
    if A.shape != (K.basis.size, K.basis.size):
        raise ValueError("operator does not live on the kernel's basis")
    Am = tensor_with_identity(A, K.m)
    return K.matrix.conj().T @ (Am @ K.matrix)


def functional_calculus_poly(T: OperatorTuple, p: FormalSeries, r: float = 1.0) -> np.ndarray:
    """``sum_beta r^{|beta|} c_beta T_beta``."""
    if p.n != T.n:
        raise ValueError("series arities do not match the tuple")
    out = np.zeros((T.d, T.d), dtype=complex)
    for letters, c in p.items():
        g = sum(len(w) for w in letters)
        out += (c * r**g) * T.word_product(letters)
    return out


def _deficit_polynomial(k: int, N: int) -> dict[tuple[int, ...], int]:
    return dict(_deficit_polynomial_cached(k, N))


@lru_cache(maxsize=64)
def _deficit_polynomial_cached(k: int, N: int):
    # 1 - prod_i(1 - x_i) * sum_{|q| <= N} x^q, as integer coefficients
    prod_terms = {(0,) * k: 1}
    for i in range(k):
        nxt = {}
        for mono, c in prod_terms.items():
            nxt[mono] = nxt.get(mono, 0) + c
            bumped = mono[:i] + (mono[i] + 1,) + mono[i + 1:]
            nxt[bumped] = nxt.get(bumped, 0) - c
        prod_terms = nxt
    poly: dict[tuple[int, ...], int] = {}
    for p in range(N + 1):
        for q in compositions(p, k):
            for mono, c in prod_terms.items():
                key = tuple(a + b for a, b in zip(q, mono))
                poly[key] = poly.get(key, 0) + c
    out = {}
    zero = (0,) * k
    for key, c in poly.items():
        coeff = (1 if key == zero else 0) - c
        if coeff:
            out[key] = coeff
    return tuple(sorted(out.items()))


def _phi_monomials(T: OperatorTuple, monos: Iterable[tuple[int, ...]]) -> dict:
    """``Phi_1^{m_1} o ... o Phi_k^{m_k}(I)`` for the requested exponent vectors."""
    cache: dict[tuple[int, ...], np.ndarray] = {(0,) * T.k: np.eye(T.d, dtype=complex)}

    def get(m):
        if m in cache:
            return cache[m]
        # peel the outermost map: the first factor with a positive exponent
        i = next(j for j, e in enumerate(m) if e > 0)
        prev = m[:i] + (m[i] - 1,) + m[i + 1:]
        val = phi_map(T, i + 1, get(prev))
        cache[m] = val
        return val

    return {m: get(m) for m in monos}


def kernel_gram_deficit(T: OperatorTuple, N: int, defect: DefectSpace | None = None,
                        basis: TruncatedBasis | None = None) -> np.ndarray:
    """``I - K_N^* K_N`` computed without cancellation against ``I``.

    Uses the commuting-map identity ``I - sum_{|q|<=N} Phi^q(Delta) =
    sum_m c_m Phi^m(I)`` with integer ``c_m`` supported in degrees
    ``N+1..N+k``, plus the exact contribution of defect eigenvalues discarded
    by the rank cutoff (which the kernel does not carry). Negative ``N`` gives
    ``I``.
    """
    if N < 0:
        return np.eye(T.d, dtype=complex)
    poly = _deficit_polynomial(T.k, N)
    mats = _phi_monomials(T, poly.keys())
    out = np.zeros((T.d, T.d), dtype=complex)
    for mono, c in poly.items():
        out += c * mats[mono]
    ds = defect or defect_space(T)
    if ds.dropped_values is not None and ds.dropped_values.size:
        if basis is None or basis.N != N:
            basis = TruncatedBasis(T.n, N)
        frame = ds.dropped_vectors * ds.dropped_values
        imgs = word_images(T, basis, ds.dropped_vectors)
        imgs_w = word_images(T, basis, frame)
        out += np.einsum("pij,pkj->ik", imgs_w, imgs.conj())
    return hermitian_part(out)


def _peel_chain(m: tuple[int, ...]) -> list[tuple[int, ...]]:
    """Exponent vectors visited by :func:`_phi_monomials` on the way to ``m``."""
    chain = [m]
    while any(m):
        i = next(j for j, e in enumerate(m) if e > 0)
        m = m[:i] + (m[i] - 1,) + m[i + 1:]
        chain.append(m)
    return chain


def deficit_noise(T: OperatorTuple, N: int, defect: DefectSpace | None = None) -> float:
    """First-order rounding-error scale of :func:`kernel_gram_deficit`.

    ``Phi^m(I)`` is built one map at a time; the rounding made at an
    intermediate ``X_j = Phi^{m_j}(I)`` is of size ``eps n d ||X_j||`` and is
    then carried by the remaining positive map, whose norm is
    ``||Phi^{m - m_j}(I)||``. The dropped defect directions add one rounding
    per multi-word of the basis.
    """
    if N < 0:
        return 0.0
    eps = np.finfo(float).eps
    poly = _deficit_polynomial(T.k, N)
    chains = {m: _peel_chain(m) for m in poly}
    needed = {v for chain in chains.values() for v in chain}
    needed |= {tuple(a - b for a, b in zip(m, v)) for m, chain in chains.items() for v in chain}
    norms = {v: operator_norm(X) for v, X in _phi_monomials(T, needed).items()}
    total = 0.0
    for m, c in poly.items():
        carried = sum(norms[v] * norms[tuple(a - b for a, b in zip(m, v))] for v in chains[m])
        total += abs(c) * carried
    total *= max(T.n) * T.d
    ds = defect or defect_space(T)
    if ds.dropped_values is not None and ds.dropped_values.size:
        from .words import basis_size
        total += basis_size(T.n, N) * max(1.0, operator_norm(ds.delta))
    return float(eps * total)


def poly_transform_tail(T: OperatorTuple, p: FormalSeries, N: int, r: float = 1.0,
                        deficits: dict[int, float] | None = None) -> float:
    """Certified bound on ``||K^*(p(S) (x) I)K - p(T)||`` at truncation ``N``.

    At truncation the transform of a monomial ``S_gamma`` equals exactly
    ``T_gamma (K_M^* K_M)`` with ``M = N - |gamma|``, so the error of each term
    is bounded by ``|c| ||T_gamma|| ||I - K_M^* K_M||``. A first-order
    rounding allowance for the two evaluations (inner products of length
    ``basis_size * d`` with ``||K|| <= 1``, and ``g`` products of ``d x d``
    matrices) is added per term, so the bound also covers the computed gap.
    """
    from .words import basis_size
    deficits = {} if deficits is None else deficits
    eps = np.finfo(float).eps
    length = basis_size(T.n, N) * T.d
    total = 0.0
    for letters, c in p.items():
        g = sum(len(w) for w in letters)
        M = N - g
        if M not in deficits:
            deficits[M] = operator_norm(kernel_gram_deficit(T, M))
        word = operator_norm(T.word_product(letters))
        rounding = eps * (length + (g + 1) * T.d) * max(1.0, word)
        total += abs(c) * r**g * (word * deficits[M] + rounding)
    return total


@dataclass
class RadialResult:
    value: np.ndarray
    tail_bound: float
    grade: int


class TailNotCertified(RuntimeError):
    pass


def radial_calculus(T: OperatorTuple, series: FormalSeries, r: float,
                    tail_tol: float = 1e-12, grade_cap: int = 64) -> RadialResult:
    """Partial sum of ``sum r^{|beta|} c_beta T_beta`` with a certified tail."""
    if not 0 <= r < 1:
        raise ValueError("radius must lie in [0, 1)")
    top = series.max_grade
    for P in range(0, min(grade_cap, top) + 1):
        bound = tail_bound(series, r, P)
        if bound <= tail_tol:
            break
    else:
        P = min(grade_cap, top)
        bound = tail_bound(series, r, P)
        if bound > tail_tol:
            raise TailNotCertified(f"tail bound {bound:.3e} above {tail_tol:.1e} at grade cap {grade_cap}")
    value = np.zeros((T.d, T.d), dtype=complex)
    for letters, c in series.items():
        g = sum(len(w) for w in letters)
        if g <= P:
            value += (c * r**g) * T.word_product(letters)
    return RadialResult(value, bound, P)


# -- von Neumann harness -----------------------------------------------------

@dataclass(frozen=True)
class WickTerm:
    """``coeff * S_{i1,a1} ... S_{ip,ap} S_{j1,b1}^* ... S_{jm,bm}^*``.

    ``analytic`` and ``coanalytic`` are sequences of ``(factor, letters)``.
    """

    coeff: complex
    analytic: tuple[tuple[int, tuple[int, ...]], ...] = ()
    coanalytic: tuple[tuple[int, tuple[int, ...]], ...] = ()

    @property
    def grade(self) -> int:
        return sum(len(w) for _, w in self.analytic) + sum(len(w) for _, w in self.coanalytic)


def evaluate_wick(terms: Sequence[WickTerm], get_op, dim: int) -> np.ndarray:
    """Evaluate a Wick-ordered polynomial; ``get_op(i, s)`` returns a dense matrix."""
    out = np.zeros((dim, dim), dtype=complex)
    for term in terms:
        M = np.eye(dim, dtype=complex)
        for i, word in term.analytic:
            for s in word:
                M = M @ get_op(i, s)
        for j, word in term.coanalytic:
            for s in word:
                M = M @ get_op(j, s).conj().T
        out += term.coeff * M
    return out


def von_neumann_check(T: OperatorTuple, terms: Sequence[WickTerm], spec, N_list: Sequence[int]) -> dict:
    """Norm of ``p(T, T^*)`` against compressed-shift norms for each ``N``."""
    t_norm = operator_norm(evaluate_wick(terms, T.op, T.d))
    s_norms = {}
    for N in N_list:
        fam = ShiftFamily(TruncatedBasis(T.n, N), spec)
        dense = {key: fam.S(*key).toarray() for key in fam.slots()}
        s_norms[int(N)] = operator_norm(evaluate_wick(terms, lambda i, s: dense[(i, s)], fam.basis.size))
    vals = [s_norms[N] for N in sorted(s_norms)]
    monotone = all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
    return {"T_norm": t_norm, "S_norms": s_norms, "S_monotone": monotone,
            "margin": (vals[-1] - t_norm) if vals else None}


def gram_tail(T: OperatorTuple, N: int) -> float:
    """``||I - K_N^* K_N||`` from the accurate deficit formula."""
    return operator_norm(kernel_gram_deficit(T, N))


def truncation_for_tail(T: OperatorTuple, target: float, N_max: int = 64, N_min: int = 1,
                        size_cap: int | None = None, floor: float | None = None) -> int:
    """Smallest ``N >= N_min`` with ``gram_tail(T, N) < target``.

    With ``floor`` given the tail must also sit below
    ``max(floor, deficit_noise(T, N))``, so no deficit direction survives a
    range cutoff at that level; if no such ``N`` fits the cap, the first ``N``
    meeting ``target`` is returned.
    """
    from .words import basis_size, ResourceCapError, DEFAULT_SIZE_CAP
    cap = size_cap or DEFAULT_SIZE_CAP
    first = None
    for N in range(N_min, N_max + 1):
        if basis_size(T.n, N) > cap:
            break
        tail = gram_tail(T, N)
        if tail < target:
            if first is None:
                first = N
            if floor is None or tail <= max(floor, deficit_noise(T, N)):
                return N
    if first is not None:
        return first
    raise ResourceCapError(f"Gram tail stays above {target:.1e} up to N={N_max} within size cap {cap}")
