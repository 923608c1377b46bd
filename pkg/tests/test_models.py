import numpy as np
import pytest

from oracles import all_multiwords, blaschke_coefficients, dense_kernel, kron_shift
from polyball.ball import OperatorTuple
from polyball.berezin import build_kernel, truncation_for_tail
from polyball.fock import ShiftFamily, monomial_matrix, tensor_with_identity
from polyball.gallery import compressed_shift_tuple, random_member, random_twist, scalar_tuple
from polyball.models import (CharFnNotAdmitted, NotMultiAnalyticError, PreconditionError, admits_charfn,
                             beurling_factorize, beurling_subspace_check, characteristic_function,
                             cnc_model_space, coincide_check, factorization_partial_isometry, inner_check,
                             kernel_complement, model_space, multi_analytic_residual, support,
                             unitary_invariance_experiment, zero_charfn_check)
from polyball.numerics import DEFAULT_TOLERANCES, operator_norm, orthonormal_range, random_unitary
from polyball.twist import TwistSpec
from polyball.words import TruncatedBasis


def charfn_setup(T, spec):
    N = truncation_for_tail(T, 1e-12, floor=DEFAULT_TOLERANCES.range_floor)
    b = TruncatedBasis(T.n, N)
    fam = ShiftFamily(b, spec)
    return b, fam, characteristic_function(T, b, spec, DEFAULT_TOLERANCES, fam)


def test_multi_analytic_examples(rng):
    # monomials commute with every shift only for one-letter factors and the trivial twist
    spec = TwistSpec.trivial((1, 1))
    b = TruncatedBasis((1, 1), 4)
    fam = ShiftFamily(b, spec)
    A = tensor_with_identity(monomial_matrix(fam, ((1, 1), (1,))), 2).toarray()
    assert multi_analytic_residual(A, spec, b, 2, 2, fam) <= 1e-12
    twisted = TwistSpec((1, 1), {(1, 2): [[1j]]})
    At = tensor_with_identity(monomial_matrix(ShiftFamily(b, twisted), ((1,), ())), 2).toarray()
    assert multi_analytic_residual(At, twisted, b, 2, 2) > 0.5
    spec = random_twist((2, 1), rng)
    b = TruncatedBasis((2, 1), 3)
    fam = ShiftFamily(b, spec)
    assert multi_analytic_residual(np.eye(b.size * 2), spec, b, 2, 2, fam) == 0.0
    A = tensor_with_identity(monomial_matrix(fam, ((1, 2), ())), 2).toarray()
    assert multi_analytic_residual(A, spec, b, 2, 2, fam) > 0.5
    R = rng.standard_normal((b.size * 2, b.size * 2))
    assert multi_analytic_residual(R, spec, b, 2, 2, fam) > 0.1
    with pytest.raises(ValueError):
        multi_analytic_residual(R[:, :-1], spec, b, 2, 2, fam)


def test_support_examples():
    spec = TwistSpec.trivial((1,))
    b = TruncatedBasis((1,), 3)
    assert support(np.eye(b.size * 2), b, spec, 2, 2).shape[1] == 2
    assert support(np.zeros((b.size * 2, b.size * 2)), b, spec, 2, 2).shape[1] == 0
    P = np.kron(np.eye(b.size), np.diag([1.0, 0.0]))
    L = support(P, b, spec, 2, 2)
    assert L.shape[1] == 1 and abs(abs(L[0, 0]) - 1) <= 1e-14
    with pytest.raises(NotMultiAnalyticError):
        support(np.random.default_rng(0).standard_normal((8, 8)), b, spec, 2, 2)


def test_beurling_factorize_controls():
    spec = TwistSpec.trivial((1,))
    b = TruncatedBasis((1,), 4)
    f = beurling_factorize(np.zeros((b.size, b.size)), b, spec, 1)
    assert f.A.shape == (b.size, 0) and f.factor_residual == 0.0
    T, _ = scalar_tuple([[0.5]])
    b = TruncatedBasis((1,), 26)
    K = build_kernel(T, b)
    f = beurling_factorize(kernel_complement(K), b, spec, 1)
    assert f.factor_residual <= 1e-8 and f.op.residual <= 1e-8


def test_subspace_check_controls(rng):
    spec = TwistSpec.trivial((1, 1))
    b = TruncatedBasis((1, 1), 5)
    fam = ShiftFamily(b, spec)
    whole = beurling_subspace_check(np.eye(b.size), b, spec, 1, family=fam)
    assert whole["delta_positive"] and whole["doubly_commuting"] and whole["agree"]
    # range of an inner multi-analytic operator: the shift S_{1,1} applied to everything
    Q, _ = orthonormal_range(fam.S(1, 1).toarray())
    inner = beurling_subspace_check(Q, b, spec, 1, family=fam)
    assert inner["delta_positive"] and inner["doubly_commuting"]
    # invariant subspace generated by chi_(1),() + chi_(),(1): both tests fail together
    x = np.zeros(b.size); x[b.index_of(((1,), ()))] = 1; x[b.index_of(((), (1,)))] = 1
    span = np.column_stack([monomial_matrix(fam, beta) @ x for beta in b])
    Q, _ = orthonormal_range(span)
    gen = beurling_subspace_check(Q, b, spec, 1, family=fam)
    assert not gen["delta_positive"] and not gen["doubly_commuting"] and gen["agree"]
    with pytest.raises(PreconditionError):
        beurling_subspace_check(np.eye(b.size)[:, 1:2], b, spec, 1, family=fam)


def test_admissibility(rng):
    T, spec = scalar_tuple([[0.5]])
    b = TruncatedBasis((1,), 20)
    ok, lam = admits_charfn(T, b, spec)
    assert ok and lam >= -1e-12
    T0, spec0 = scalar_tuple([[0.0]])
    assert admits_charfn(T0, TruncatedBasis((1,), 3), spec0)[0]
    Z, specZ = scalar_tuple([[0.0], [0.0]])
    ok, lam = admits_charfn(Z, TruncatedBasis((1, 1), 3), specZ)
    assert not ok and lam < -0.1


def test_brehmer_not_admitted_matches_oracle():
    T, spec = scalar_tuple([[0.5], [0.5]])
    N = 14
    b = TruncatedBasis((1, 1), N)
    with pytest.raises(CharFnNotAdmitted) as exc:
        characteristic_function(T, b, spec)
    order = list(b)
    S1 = kron_shift((1, 1), spec.lam, N, 1, 1, order)
    S2 = kron_shift((1, 1), spec.lam, N, 2, 1, order)
    K = dense_kernel(T.mats, order)
    Y = np.eye(b.size) - K @ K.conj().T
    phi = lambda S, X: S @ X @ S.conj().T
    D = Y - phi(S1, Y) - phi(S2, Y) + phi(S1, phi(S2, Y))
    assert exc.value.least_eig == pytest.approx(np.linalg.eigvalsh(D)[0], abs=1e-12)
    assert exc.value.least_eig == pytest.approx(-0.75, abs=1e-6)


def test_zero_tuple_charfn_is_the_shift():
    T, spec = scalar_tuple([[0.0]])
    b = TruncatedBasis((1,), 6)
    cf = characteristic_function(T, b, spec)
    Th = cf.theta.matrix
    assert np.linalg.matrix_rank(Th @ Th.conj().T) == b.size - 1
    assert cf.factorization_residual <= 1e-10
    assert inner_check(cf.theta) <= 1e-12
    # theta(z) = z up to a unimodular constant on the one-dimensional spaces
    phase = Th[1, 0]
    assert abs(abs(phase) - 1) <= 1e-12
    assert np.allclose(Th, phase * np.eye(b.size, k=-1), atol=1e-12)


def test_half_charfn_is_blaschke_factor():
    T, spec = scalar_tuple([[0.5]])
    b, fam, cf = charfn_setup(T, spec)
    assert b.N >= 12
    assert cf.factorization_residual <= 1e-8 and cf.multi_analytic_residual <= 1e-8
    assert cf.partial_isometry_defect <= 1e-8
    Th = cf.theta.matrix
    coeffs = Th[:, 0]
    ref = blaschke_coefficients(0.5, b.size)
    phase = coeffs[0] / ref[0]
    assert abs(abs(phase) - 1) <= 1e-10
    assert np.allclose(coeffs, phase * ref, atol=1e-8)


def test_inner_check_controls():
    T, spec = scalar_tuple([[0.5]])
    _, _, cf = charfn_setup(T, spec)
    assert inner_check(cf.theta) <= 1e-8
    assert inner_check(0.5 * cf.theta.matrix) == pytest.approx(0.1875, abs=1e-8)
    assert inner_check(np.zeros((4, 4))) == 0.0


def test_model_spaces():
    T, spec = scalar_tuple([[0.0]])
    b = TruncatedBasis((1,), 5)
    fam = ShiftFamily(b, spec)
    cf = characteristic_function(T, b, spec, family=fam)
    rep = model_space(T, cf, family=fam)
    assert rep.dim_H == 1 and abs(abs(rep.H_basis[0, 0]) - 1) <= 1e-12
    assert rep.projection_residual <= 1e-12 and rep.compression_residual <= 1e-12
    for name_T in ([[0.5]], [[0.3 + 0.4j]]):
        T, spec = scalar_tuple(name_T)
        b, fam, cf = charfn_setup(T, spec)
        rep = model_space(T, cf, family=fam)
        assert rep.dim_H == T.d
        assert rep.projection_residual <= 1e-8 and rep.compression_residual <= 1e-8
        cnc = cnc_model_space(T, cf, family=fam, pure_model=rep)
        # Theta is inner below the top grade; the truncation leaves D_Theta on top-grade columns only
        top = int((b.grades == b.N).sum()) * cf.theta.mE
        assert cnc.rank_D_theta <= top
        assert cnc.pure_model_distance <= 1e-8
        assert cnc.isometry_residual <= 1e-8 and cnc.intertwining_residual <= 1e-8


def test_model_rejects_impure():
    T, spec = scalar_tuple([[1.0]])
    b = TruncatedBasis((1,), 3)
    with pytest.raises(PreconditionError):
        zero_charfn_check(T, b, spec)


def test_coincide_check(rng):
    T, spec = scalar_tuple([[0.5]])
    b, fam, cf = charfn_setup(T, spec)
    one = np.eye(1)
    assert coincide_check(cf.theta, cf.theta, one, one) == 0.0
    v, w = random_unitary(2, rng), random_unitary(3, rng)
    size = 3
    Th = rng.standard_normal((6, 9)) + 1j * rng.standard_normal((6, 9))
    Th2 = np.kron(np.eye(size), v) @ Th @ np.kron(np.eye(size), w.conj().T)
    assert coincide_check(Th, Th2, v, w) <= 1e-13


def test_two_factorizations_agree_on_supports(rng):
    for T, spec in [scalar_tuple([[0.5]]), (OperatorTuple([[np.array([[0.3, 0.5], [0, -0.2]])]]),
                                            TwistSpec.trivial((1,)))]:
        b, fam, cf = charfn_setup(T, spec)
        other = beurling_factorize(cf.Y, b, spec, cf.kernel.m, family=fam)
        rep = factorization_partial_isometry(cf.theta.matrix, other.A, b, cf.theta.mE, other.op.mE)
        assert rep["same_product"] <= 1e-8 and rep["residual"] <= 1e-8
        # padding the coefficient space with a dead direction keeps the support
        padded = np.zeros((other.A.shape[0], b.size * (other.op.mE + 1)), dtype=complex)
        for pos in range(b.size):
            padded[:, pos * (other.op.mE + 1):pos * (other.op.mE + 1) + other.op.mE] = \
                other.A[:, pos * other.op.mE:(pos + 1) * other.op.mE]
        rep = factorization_partial_isometry(cf.theta.matrix, padded, b, cf.theta.mE, other.op.mE + 1)
        assert rep["residual"] <= 1e-8 and rep["partial_isometry_defect"] <= 1e-8


def test_unitary_invariance(rng):
    T = OperatorTuple([[np.array([[0.3, 0.5], [0, -0.2]])]])
    spec = TwistSpec.trivial((1,))
    b, fam, cf = charfn_setup(T, spec)
    assert unitary_invariance_experiment(T, np.eye(2), b, spec, family=fam, cf=cf)["residual"] <= 1e-14
    for _ in range(3):
        rep = unitary_invariance_experiment(T, random_unitary(2, rng), b, spec, family=fam, cf=cf)
        assert rep["residual"] <= 1e-8
    B, specB = scalar_tuple([[0.5], [0.5]])
    with pytest.raises(CharFnNotAdmitted):
        unitary_invariance_experiment(B, np.eye(1), TruncatedBasis((1, 1), 8), specB)


def test_zero_charfn_diagnostics():
    spec = TwistSpec.trivial((1,))
    S = compressed_shift_tuple(spec, 4)
    # at the nilpotency grade the kernel is unitary and Theta vanishes
    rep = zero_charfn_check(S, TruncatedBasis((1,), 4), spec)
    assert rep["theta_norm"] <= 1e-12 and rep["kernel_coisometry_defect"] <= 1e-12
    # past it the boundary mass shows up in both quantities
    rep = zero_charfn_check(S, TruncatedBasis((1,), 6), spec)
    assert rep["theta_norm"] == pytest.approx(1.0) and rep["kernel_coisometry_defect"] == pytest.approx(1.0)
    b = TruncatedBasis((1,), 6)
    T, _ = scalar_tuple([[0.0]])
    rep = zero_charfn_check(T, b, spec)
    assert rep["theta_norm"] == pytest.approx(1.0)
