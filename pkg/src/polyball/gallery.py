"""Named example tuples and seeded random members of the polyball."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .ball import OperatorTuple
from .fock import ShiftFamily
from .numerics import orthonormal_range, random_unitary
from .twist import TwistSpec
from .words import TruncatedBasis


def scalar_tuple(values: Sequence[Sequence[complex]], spec: TwistSpec | None = None):
    T = OperatorTuple.scalars(values)
    return T, spec or TwistSpec.trivial(T.n)


def brehmer_pair(t: float = 0.5):
    """Commuting scalar pair ``([t], [t])`` with trivial twist."""
    return scalar_tuple([[t], [t]])


def jordan_tuple():
    """Non-normal 2x2 strict contraction, k = 1."""
    return OperatorTuple([[np.array([[0.3, 0.5], [0.0, -0.2]], dtype=complex)]]), TwistSpec.trivial((1,))


def compressed_shift_tuple(spec: TwistSpec, N0: int) -> OperatorTuple:
    """The compressed shifts on the truncation of total length ``N0``, as a tuple."""
    fam = ShiftFamily(TruncatedBasis(spec.n, N0), spec)
    return OperatorTuple([[fam.S(i, s).toarray() for s in range(1, spec.n[i - 1] + 1)]
                          for i in range(1, spec.k + 1)])


def random_twist(n: Sequence[int], rng: np.random.Generator) -> TwistSpec:
    k = len(n)
    blocks = {(i, j): np.exp(2j * np.pi * rng.random((n[i - 1], n[j - 1])))
              for i in range(1, k + 1) for j in range(i + 1, k + 1)}
    return TwistSpec(n, blocks)


def coinvariant_compression(spec: TwistSpec, N0: int, vectors: np.ndarray) -> OperatorTuple:
    """Compress the shifts to the smallest subspace containing ``vectors`` and
    invariant under every ``S_{i,s}*``."""
    basis = TruncatedBasis(spec.n, N0)
    fam = ShiftFamily(basis, spec)
    adj = [fam.S(i, s).conj().T.tocsr() for i, s in fam.slots()]
    span, _ = orthonormal_range(np.asarray(vectors, dtype=complex), 1e-12)
    while True:
        images = [span] + [A @ span for A in adj]
        nxt, _ = orthonormal_range(np.hstack(images), 1e-12)
        if nxt.shape[1] == span.shape[1]:
            break
        span = nxt
    Q = span
    return OperatorTuple([[Q.conj().T @ (fam.S(i, s) @ Q) for s in range(1, spec.n[i - 1] + 1)]
                          for i in range(1, spec.k + 1)])


def random_member(rng: np.random.Generator, spec: TwistSpec, d_max: int = 8, N0_max: int = 3,
                  scale: float | None = None, conjugate: bool = True) -> OperatorTuple:
    """Random polyball member: a co-invariant compression of the shifts.

    A random vector of the truncation generates the co-invariant subspace;
    the grade ``N0`` is reduced until the dimension is at most ``d_max``.
    ``scale`` multiplies the tuple (staying inside the ball for ``scale <= 1``)
    and ``conjugate`` applies a Haar unitary.
    """
    for N0 in range(N0_max, -1, -1):
        basis = TruncatedBasis(spec.n, N0)
        v = rng.standard_normal(basis.size) + 1j * rng.standard_normal(basis.size)
        # thin out the vector so the generated subspace stays small
        v[rng.random(basis.size) < 0.5] = 0.0
        v[-1] = rng.standard_normal() + 1j
        T = coinvariant_compression(spec, N0, v[:, None])
        if T.d <= d_max:
            break
    if scale is not None:
        T = T.map(lambda M: scale * M)
    if conjugate and T.d > 1:
        T = T.conjugate_by(random_unitary(T.d, rng))
    return T


def gallery() -> dict[str, Callable[[], tuple[OperatorTuple, TwistSpec]]]:
    """Named members used by the acceptance suite and the CLI examples."""
    twisted = TwistSpec((1, 1), {(1, 2): np.array([[1j]])})
    return {
        "zero": lambda: scalar_tuple([[0.0]]),
        "half": lambda: scalar_tuple([[0.5]]),
        "brehmer": brehmer_pair,
        "jordan": jordan_tuple,
        "free_shift": lambda: (compressed_shift_tuple(TwistSpec.trivial((2,)), 1), TwistSpec.trivial((2,))),
        "twisted_shift": lambda: (compressed_shift_tuple(twisted, 2), twisted),
        "row_pair": lambda: (OperatorTuple([[np.array([[0.0, 0.6], [0.0, 0.0]]),
                                             np.array([[0.0, 0.5], [0.0, 0.0]])]]),
                             TwistSpec.trivial((2,))),
    }


CHARFN_GALLERY = ("zero", "half", "jordan", "free_shift", "twisted_shift", "row_pair")
