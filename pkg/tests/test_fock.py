import itertools

import numpy as np
import pytest
import scipy.sparse as sp

from oracles import kron_shift
from polyball.fock import (ShiftFamily, build_adjoint, build_shift, doubly_commuting_defect,
                           grade_projection, interior_projection, monomial_matrix, row_isometry_defect,
                           shift_defect, tensor_with_identity, vacuum_defect_residual)
from polyball.gallery import random_twist
from polyball.twist import TwistSpec, mu_multi
from polyball.words import TruncatedBasis


def dense(M):
    return M.toarray() if sp.issparse(M) else np.asarray(M)


@pytest.mark.parametrize("n,N", [((2,), 3), ((1, 1), 4), ((2, 1), 3), ((1, 2, 1), 3)])
def test_shifts_match_kronecker_oracle(n, N, rng):
    spec = random_twist(n, rng)
    b = TruncatedBasis(n, N)
    order = list(b)
    for i, s in ShiftFamily(b, spec).slots():
        ref = kron_shift(n, spec.lam, N, i, s, order)
        assert np.allclose(dense(build_shift(b, spec, i, s).matrix), ref, atol=1e-15)


def test_single_shift_is_forward_shift():
    b = TruncatedBasis((1,), 5)
    S = dense(build_shift(b, TwistSpec.trivial((1,)), 1, 1).matrix)
    assert np.array_equal(S, np.eye(6, k=-1))
    assert np.allclose(S.T @ S, np.diag([1, 1, 1, 1, 1, 0]))


def test_twisted_pair_phases():
    lam = np.exp(0.3j)
    spec = TwistSpec((1, 1), {(1, 2): [[lam]]})
    b = TruncatedBasis((1, 1), 5)
    S2 = dense(build_shift(b, spec, 2, 1).matrix)
    S2a = dense(build_adjoint(build_shift(b, spec, 2, 1)))
    for m in range(4):
        for n2 in range(4 - m):
            src = b.index_of(((1,) * m, (1,) * n2))
            dst = b.index_of(((1,) * m, (1,) * (n2 + 1)))
            assert S2[dst, src] == pytest.approx(np.conj(lam) ** m)
            assert S2a[src, dst] == pytest.approx(lam ** m)


def test_columns_have_one_unimodular_entry(rng):
    spec = random_twist((2, 2), rng)
    b = TruncatedBasis((2, 2), 3)
    for i, s in ShiftFamily(b, spec).slots():
        S = dense(build_shift(b, spec, i, s).matrix)
        for col in range(b.size):
            nz = np.flatnonzero(S[:, col])
            if b.grades[col] < b.N:
                assert len(nz) == 1 and abs(abs(S[nz[0], col]) - 1) < 1e-15
            else:
                assert len(nz) == 0


def test_adjoint_kills_vacuum():
    b = TruncatedBasis((2, 1), 3)
    fam = ShiftFamily(b, TwistSpec.trivial((2, 1)))
    for i, s in fam.slots():
        assert np.allclose(dense(build_adjoint(fam.shift(i, s)))[:, 0], 0)


def test_interior_projection():
    b = TruncatedBasis((1,), 1)
    assert np.linalg.matrix_rank(dense(interior_projection(b))) == 1
    b = TruncatedBasis((2, 2), 3)
    P = dense(interior_projection(b))
    assert np.trace(P).real == TruncatedBasis((2, 2), 2).size
    assert np.allclose(P @ P, P, atol=1e-14) and np.allclose(P, P.conj().T)


@pytest.mark.parametrize("n,N", [((2,), 3), ((1, 1), 4), ((2, 2), 3), ((2, 1, 2), 3)])
def test_row_isometry_and_double_commutation(n, N, rng):
    b = TruncatedBasis(n, N)
    for spec in (TwistSpec.trivial(n), random_twist(n, rng)):
        fam = ShiftFamily(b, spec)
        for i in range(1, len(n) + 1):
            assert row_isometry_defect(b, spec, i, fam) <= 1e-14
        for v in doubly_commuting_defect(b, spec, fam).values():
            assert v["adjoint"] <= 1e-14 and v["product"] <= 1e-14


def test_defect_without_interior_is_one():
    b = TruncatedBasis((2,), 3)
    fam = ShiftFamily(b, TwistSpec.trivial((2,)))
    I = np.eye(b.size)
    worst = max(np.linalg.norm(dense(fam.S(1, s)).conj().T @ dense(fam.S(1, s)) - I, 2) for s in (1, 2))
    assert worst == pytest.approx(1.0)


def test_k1_has_empty_commutation_report():
    b = TruncatedBasis((3,), 2)
    assert doubly_commuting_defect(b, TwistSpec.trivial((3,))) == {}


def test_grade_projections():
    b = TruncatedBasis((2, 1), 3)
    Ps = [dense(grade_projection(b, p)) for p in range(4)]
    assert np.allclose(sum(Ps), np.eye(b.size))
    assert Ps[0][0, 0] == 1 and np.trace(Ps[0]) == 1
    assert [int(np.trace(P).real) for P in Ps] == [1, 3, 7, 15]
    with pytest.raises(ValueError):
        grade_projection(b, 4)


def test_tensor_with_identity(rng):
    A = rng.standard_normal((4, 4))
    B = rng.standard_normal((4, 4))
    assert np.allclose(dense(tensor_with_identity(A, 1)), A)
    lhs = dense(tensor_with_identity(A, 3)) @ dense(tensor_with_identity(B, 3))
    assert np.allclose(lhs, dense(tensor_with_identity(A @ B, 3)))
    assert np.allclose(dense(tensor_with_identity(A, 2)), np.kron(A, np.eye(2)))


@pytest.mark.parametrize("n", [(1, 1), (2, 1), (1, 1, 1)])
def test_vacuum_defect_is_exact(n, rng):
    b = TruncatedBasis(n, 4 if len(n) < 3 else 3)
    for spec in (TwistSpec.trivial(n), random_twist(n, rng)):
        fam = ShiftFamily(b, spec)
        assert vacuum_defect_residual(fam) <= 1e-14
        asc = dense(shift_defect(fam, order="ascending"))
        desc = dense(shift_defect(fam, order="descending"))
        assert np.allclose(asc, desc, atol=1e-14)


def test_ordered_action_identity(rng):
    n, N = (2, 2), 4
    spec = random_twist(n, rng)
    b = TruncatedBasis(n, N)
    fam = ShiftFamily(b, spec)
    for gamma in b:
        M = dense(monomial_matrix(fam, gamma))
        g = sum(len(w) for w in gamma)
        for col, alpha in enumerate(b):
            if g + b.grades[col] > N:
                continue
            target = b.index_of(tuple(x + y for x, y in zip(gamma, alpha)))
            expect = np.zeros(b.size, dtype=complex)
            expect[target] = mu_multi(spec, gamma, alpha)
            assert np.allclose(M[:, col], expect, atol=1e-14)


def test_fourier_support_of_monomials():
    b = TruncatedBasis((1, 2), 4)
    fam = ShiftFamily(b, TwistSpec.trivial((1, 2)))
    for beta in [((1,), ()), ((1,), (2, 1)), ((), (2, 2, 1))]:
        M = dense(monomial_matrix(fam, beta))
        L = sum(len(w) for w in beta)
        for p, q in itertools.product(range(5), repeat=2):
            block = dense(grade_projection(b, p)) @ M @ dense(grade_projection(b, q))
            if p != q + L:
                assert not block.any()
