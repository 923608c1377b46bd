"""Formal Fourier series over the twisted shifts.

Matrix realizations, coefficient extraction, the grade bands ``Q_m`` and their
Cesaro means, radial norms and certified tails, and evaluation of free
holomorphic functions on interior tuples.

Band convention: ``Q_m(A) = sum_{n >= max(0, -m)} P_n A P_{n+m}``, so an
analytic monomial of grade ``p`` lives in the band ``m = -p``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Iterable, Mapping, Sequence

import numpy as np

from .numerics import operator_norm
from .twist import TwistSpec, mu_multi
from .words import TruncatedBasis


class FormalSeries:
    """Finitely supported coefficients ``beta -> c_beta`` over multi-words.

    Keys are tuples of letter tuples (one per factor, letters 1-based).
    """

    def __init__(self, n: Sequence[int], coeffs: Mapping | Iterable = ()):
        self.n = tuple(int(x) for x in n)
        self.k = len(self.n)
        self._c: dict[tuple[tuple[int, ...], ...], complex] = {}
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        for beta, c in items:
            key = tuple(tuple(int(a) for a in comp) for comp in beta)
            if len(key) != self.k:
                raise ValueError(f"multi-word {beta} does not have {self.k} components")
            for comp, ni in zip(key, self.n):
                if any(not 1 <= a <= ni for a in comp):
                    raise ValueError(f"letter out of range in {beta}")
            self._c[key] = self._c.get(key, 0j) + complex(c)

    @classmethod
    def constant(cls, n: Sequence[int], c: complex = 1.0) -> "FormalSeries":
        return cls(n, {tuple(() for _ in n): c})

    @classmethod
    def monomial(cls, n: Sequence[int], beta, c: complex = 1.0) -> "FormalSeries":
        return cls(n, {tuple(tuple(w) for w in beta): c})

    def items(self):
        return self._c.items()

    def coefficient(self, beta) -> complex:
        return self._c.get(tuple(tuple(w) for w in beta), 0j)

    def __len__(self) -> int:
        return len(self._c)

    @property
    def max_grade(self) -> int:
        return max((sum(len(w) for w in b) for b in self._c), default=0)

    def grade_slice(self, p: int) -> dict:
        return {b: c for b, c in self._c.items() if sum(len(w) for w in b) == p}

    def truncated(self, P: int) -> "FormalSeries":
        return FormalSeries(self.n, {b: c for b, c in self._c.items() if sum(len(w) for w in b) <= P})

    def __add__(self, other: "FormalSeries") -> "FormalSeries":
        if other.n != self.n:
            raise ValueError("arity mismatch")
        return FormalSeries(self.n, list(self._c.items()) + list(other._c.items()))

    def scaled(self, a: complex) -> "FormalSeries":
        return FormalSeries(self.n, {b: a * c for b, c in self._c.items()})

    def to_vector(self, basis: TruncatedBasis) -> np.ndarray:
        v = np.zeros(basis.size, dtype=complex)
        for b, c in self._c.items():
            pos = basis.lookup(b)
            if pos is not None:
                v[pos] = c
        return v

    def __repr__(self) -> str:
        return f"FormalSeries(n={self.n}, terms={len(self._c)})"


def series_to_matrix(series: FormalSeries, basis: TruncatedBasis, spec: TwistSpec, r: float = 1.0) -> np.ndarray:
    """Matrix of ``phi(rS)`` on the truncation; column ``gamma`` is
    ``sum_beta c_beta r^{|beta|} mu(beta, gamma) chi_{beta gamma}``."""
    if not 0 <= r <= 1:
        raise ValueError("radius must lie in [0, 1]")
    if series.n != basis.n:
        raise ValueError("series arities do not match the basis")
    A = np.zeros((basis.size, basis.size), dtype=complex)
    terms = [(b, c * r ** sum(len(w) for w in b), sum(len(w) for w in b)) for b, c in series.items()]
    for col, gamma in enumerate(basis):
        g = basis.grades[col]
        for beta, c, gb in terms:
            if c == 0 or g + gb > basis.N:
                continue
            target = tuple(bw + gw for bw, gw in zip(beta, gamma))
            A[basis.lookup(target), col] += c * mu_multi(spec, beta, gamma)
    return A


def fourier_extract(A: np.ndarray, basis: TruncatedBasis, spec: TwistSpec) -> FormalSeries:
    """Coefficients ``<A chi_0, chi_beta> / mu(beta, 0)`` for every multi-word of the basis."""
    column = np.asarray(A)[:, 0]
    empty = tuple(() for _ in basis.n)
    coeffs = {}
    for pos, beta in enumerate(basis):
        mu = mu_multi(spec, beta, empty)
        if abs(mu - 1.0) > 1e-14:
            raise AssertionError(f"phase at the vacuum is {mu}, expected 1")
        coeffs[beta] = column[pos] / mu
    return FormalSeries(basis.n, coeffs)


def q_projection(A: np.ndarray, m: int, basis: TruncatedBasis) -> np.ndarray:
    """Band ``Q_m(A) = sum_{n >= max(0,-m)} P_n A P_{n+m}``."""
    if abs(m) > basis.N:
        raise ValueError(f"band {m} outside +-{basis.N}")
    g = basis.grades
    mask = (g[:, None] + m) == g[None, :]
    return np.where(mask, A, 0)


def cesaro(A: np.ndarray, n_cesaro: int, basis: TruncatedBasis) -> np.ndarray:
    """Fejer mean ``sum_{|m|<n} (1 - |m|/n) Q_m(A)``."""
    if n_cesaro < 1:
        raise ValueError("Cesaro index must be positive")
    g = basis.grades
    band = g[None, :] - g[:, None]          # entry (row, col) sits in band m = col grade - row grade
    weight = np.where(np.abs(band) < n_cesaro, 1.0 - np.abs(band) / n_cesaro, 0.0)
    return weight * A


def radial_norms(series: FormalSeries, basis: TruncatedBasis, spec: TwistSpec,
                 r_grid: Sequence[float]) -> dict[float, float]:
    out = {}
    for r in r_grid:
        if not 0 <= r < 1:
            raise ValueError("radii must lie in [0, 1)")
        out[float(r)] = operator_norm(series_to_matrix(series, basis, spec, r))
    return out


def monotonicity_violation(norms: Mapping[float, float]) -> float:
    """Largest drop ``norm(r1) - norm(r2)`` over ``r1 < r2`` (0 when non-decreasing)."""
    rs = sorted(norms)
    worst = 0.0
    running = -np.inf
    for r in rs:
        running = max(running, norms[r])
        worst = max(worst, running - norms[r])
    return worst


def _composition_norms(series: FormalSeries, p: int) -> list[float]:
    groups: dict[tuple[int, ...], float] = {}
    for beta, c in series.grade_slice(p).items():
        comp = tuple(len(w) for w in beta)
        groups[comp] = groups.get(comp, 0.0) + abs(c) ** 2
    return [np.sqrt(v) for v in groups.values()]


def tail_bound(series: FormalSeries, r: float, P: int) -> float:
    """Certified operator-norm bound on the grades above ``P`` at radius ``r``.

    Words sharing a composition ``(p_1, ..., p_k)`` give products with
    orthogonal ranges, so each composition block is bounded by the l2 norm of
    its coefficients; blocks are then summed (at most ``C(p+k-1, k-1)`` of
    them, so this never exceeds ``sqrt(C(p+k-1, k-1))`` times the l2 norm of
    the whole grade-``p`` slice).
    """
    if not 0 <= r < 1:
        raise ValueError("radius must lie in [0, 1)")
    total = 0.0
    for p in range(P + 1, series.max_grade + 1):
        norms = _composition_norms(series, p)
        if norms:
            total += r**p * sum(norms)
    return total


def slice_bound(series: FormalSeries, p: int) -> float:
    """Cauchy-Schwarz form ``sqrt(C(p+k-1, k-1)) * ||slice_p||_2``."""
    sl = series.grade_slice(p)
    l2 = np.sqrt(sum(abs(c) ** 2 for c in sl.values()))
    return np.sqrt(comb(p + series.k - 1, series.k - 1)) * l2


@dataclass
class HoloEval:
    direct: np.ndarray
    transform: np.ndarray
    discrepancy: float
    tail: float


def holo_eval(series: FormalSeries, X, spec: TwistSpec, N: int, tail_tol: float = 1e-10,
              interior_tol: float = 1e-12) -> HoloEval:
    """Evaluate a free holomorphic function at an interior tuple by two routes.

    The direct route substitutes ``X`` into the series; the transform route
    computes ``K_X^*(A (x) I)K_X`` with ``A`` the matrix of the series on the
    truncation of total length ``N``. ``tail`` bounds their difference.
    """
    from .ball import check_interior
    from .berezin import build_kernel, berezin_transform, functional_calculus_poly, poly_transform_tail

    ok, margin = check_interior(X, interior_tol)
    if not ok:
        raise ValueError(f"tuple is not interior (defect margin {margin:.3e})")
    basis = TruncatedBasis(series.n, N)
    K = build_kernel(X, basis)
    A = series_to_matrix(series, basis, spec)
    transform = berezin_transform(K, A)
    direct = functional_calculus_poly(X, series)
    tail = poly_transform_tail(X, series, N)
    disc = operator_norm(direct - transform)
    return HoloEval(direct, transform, disc, tail)


def coefficient_uniqueness_check(series: FormalSeries, r_samples: Sequence[float], basis: TruncatedBasis,
                                 spec: TwistSpec, tol: float = 1e-10) -> bool:
    """Recover coefficients from ``phi(rS) chi_0`` at several radii and compare."""
    rs = [float(r) for r in r_samples]
    if len(set(rs)) < 2 or any(r <= 0 for r in rs):
        raise ValueError("need at least two distinct positive radii")
    target = series.to_vector(basis)
    grades = basis.grades
    recovered = []
    for r in rs:
        col = series_to_matrix(series, basis, spec, r)[:, 0]
        recovered.append(col / r**grades)
    ref = recovered[0]
    consistent = all(np.max(np.abs(v - ref)) <= tol * max(1.0, np.max(np.abs(ref))) for v in recovered)
    return consistent and np.max(np.abs(ref - target), initial=0.0) <= tol * max(1.0, np.max(np.abs(target), initial=0.0))
