"""Unimodular twist data and the phase products entering the shift action."""
from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .words import MultiWord, Word


class TwistError(ValueError):
    pass


class TwistSpec:
    """Phase matrices ``lambda_ij`` for ``i < j``; the ``i > j`` blocks are adjoints.

    Factor and slot indices in the public methods are 1-based.
    """

    def __init__(self, n: Sequence[int], blocks: Mapping[tuple[int, int], np.ndarray] | None = None,
                 unit_tol: float = 1e-9):
        self.n = tuple(int(x) for x in n)
        self.k = len(self.n)
        self._blocks: dict[tuple[int, int], np.ndarray] = {}
        blocks = dict(blocks or {})
        for (i, j), M in blocks.items():
            if not (1 <= i < j <= self.k):
                raise TwistError(f"block ({i},{j}) must satisfy 1 <= i < j <= k")
            M = np.asarray(M, dtype=complex)
            if M.shape != (self.n[i - 1], self.n[j - 1]):
                raise TwistError(f"block ({i},{j}) has shape {M.shape}, "
                                 f"expected {(self.n[i - 1], self.n[j - 1])}")
            mod = np.abs(M)
            if np.any(mod == 0) or np.any(np.abs(mod - 1.0) > unit_tol):
                raise TwistError(f"block ({i},{j}) has entries off the unit circle "
                                 f"(max deviation {np.abs(mod - 1.0).max():.3e})")
            self._blocks[(i, j)] = M / mod
        for i in range(1, self.k + 1):
            for j in range(i + 1, self.k + 1):
                self._blocks.setdefault((i, j), np.ones((self.n[i - 1], self.n[j - 1]), dtype=complex))

    @classmethod
    def trivial(cls, n: Sequence[int]) -> "TwistSpec":
        return cls(n)

    @classmethod
    def constant(cls, n: Sequence[int], phase: complex) -> "TwistSpec":
        """Every ``lambda_ij(s, t)`` with ``i < j`` equal to ``phase``."""
        k = len(n)
        blocks = {(i, j): np.full((n[i - 1], n[j - 1]), phase, dtype=complex)
                  for i in range(1, k + 1) for j in range(i + 1, k + 1)}
        return cls(n, blocks)

    def block(self, i: int, j: int) -> np.ndarray:
        if i == j or not (1 <= i <= self.k and 1 <= j <= self.k):
            raise IndexError(f"no twist block ({i},{j})")
        if i < j:
            return self._blocks[(i, j)]
        return self._blocks[(j, i)].conj().T

    def lam(self, i: int, j: int, s: int, t: int) -> complex:
        return complex(self.block(i, j)[s - 1, t - 1])

    def upper_blocks(self) -> dict[tuple[int, int], np.ndarray]:
        return dict(self._blocks)

    def is_trivial(self) -> bool:
        return all(np.allclose(M, 1.0) for M in self._blocks.values())

    def _check_slot(self, i: int, s: int) -> None:
        if not 1 <= i <= self.k:
            raise IndexError(f"factor {i} out of range 1..{self.k}")
        if not 1 <= s <= self.n[i - 1]:
            raise IndexError(f"slot {s} out of range 1..{self.n[i - 1]}")


def lambda_word(spec: TwistSpec, i: int, j: int, s: int, beta: Word | Sequence[int]) -> complex:
    """Product of ``lambda_ij(s, b)`` over the letters ``b`` of ``beta``."""
    spec._check_slot(i, s)
    letters = beta.letters if isinstance(beta, Word) else tuple(beta)
    row = spec.block(i, j)[s - 1]
    out = 1.0 + 0.0j
    for b in letters:
        if not 1 <= b <= spec.n[j - 1]:
            raise IndexError(f"letter {b} out of range for factor {j}")
        out *= row[b - 1]
    return out


def _letters(alpha) -> tuple[tuple[int, ...], ...]:
    return alpha.letters if isinstance(alpha, MultiWord) else tuple(tuple(c) for c in alpha)


def mu_letter(spec: TwistSpec, i: int, s: int, alpha) -> complex:
    """Phase picked up when ``g_s`` is prepended to factor ``i`` of ``alpha``."""
    spec._check_slot(i, s)
    comps = _letters(alpha)
    out = 1.0 + 0.0j
    for j in range(1, i):
        if comps[j - 1]:
            out *= lambda_word(spec, i, j, s, comps[j - 1])
    return out


def mu_word(spec: TwistSpec, i: int, gamma: Word | Sequence[int], alpha) -> complex:
    letters = gamma.letters if isinstance(gamma, Word) else tuple(gamma)
    out = 1.0 + 0.0j
    for s in letters:
        out *= mu_letter(spec, i, s, alpha)
    return out


def mu_multi(spec: TwistSpec, gamma, alpha) -> complex:
    g = _letters(gamma)
    if len(g) != spec.k:
        raise ValueError("shape mismatch between multi-word and twist")
    out = 1.0 + 0.0j
    for i in range(1, spec.k + 1):
        if g[i - 1]:
            out *= mu_word(spec, i, g[i - 1], alpha)
    return out
