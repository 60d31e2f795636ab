import numpy as np
import pytest

from gnslab.cstar import CStarAlgebra, State, op_norm, point_state, random_state
from gnslab.errors import PreconditionError
from gnslab.gns import (
    build_gns,
    gns_from_bounded_functional,
    gns_from_positive_linear_map,
    intertwiner,
    module_gns,
    reconstruct_phi,
    unitary_equivalence,
    verify_representation,
)
from gnslab.nc_examples import (
    TraceAlgebra,
    omega_trace_functional,
    phi_right_mult,
    schatten_trace_map,
)
from gnslab.quasi import full_matrix_model, scalar_core_model
from gnslab.sampling import random_isometry, rng_from_seed
from gnslab.sesq import (
    PositiveLinearMap,
    SesquiMap,
    canonical_right_action,
    compression_map,
    evaluate,
    random_invariant_map,
)

M2 = CStarAlgebra((2,))


def trace_state_map(m=2):
    Q = full_matrix_model(m)
    cod = CStarAlgebra((1,))
    values = tuple(cod.element([np.array([[np.trace(b) / m]])]) for b in Q.basis)
    return PositiveLinearMap(domain=Q, codomain=cod, values=values)


# -- build_gns ------------------------------------------------------------------


def test_trace_state_gns_is_left_regular():
    omega = trace_state_map(2)
    triple = gns_from_positive_linear_map(omega)
    assert triple.rep_dim == 4
    # Pi matrices match the left-multiplication structure constants moved
    # into the representation coordinates.
    Q = omega.domain
    rep = triple.quotient.rep_basis
    for i in range(Q.dim):
        left = Q.left_mult_tensor[i].T  # columns: coeffs of e_i e_x
        expected = rep.conj().T @ left @ rep
        assert np.allclose(triple.pi[i], expected, atol=1e-10)
    assert triple.residuals["linear_map_recovery"] <= 1e-12


def test_zero_map_gives_trivial_triple():
    Q = full_matrix_model(2)
    phi = SesquiMap(
        codomain=M2, gram=(np.zeros((4, 4, 2, 2), dtype=complex),), domain=Q
    )
    triple = build_gns(phi)
    assert triple.rep_dim == 0
    assert triple.pi.shape == (4, 0, 0)
    assert verify_representation(triple).passed


def test_schatten_map_reconstruction(rng):
    TA = TraceAlgebra(2, p=2.0)
    phi = schatten_trace_map(TA, np.diag([1.0, 2.0]), 8, rng=rng)
    triple = build_gns(phi)
    assert triple.residuals["reconstruction"] <= 1e-9
    for i in range(phi.dim):
        for j in range(phi.dim):
            lhs = reconstruct_phi(triple, _unit(4, i), _unit(4, j))
            rhs = phi.element_at(i, j)
            assert op_norm(lhs - rhs) <= 1e-9 * max(phi.scale, 1.0)


def _unit(d, i):
    e = np.zeros(d, dtype=complex)
    e[i] = 1.0
    return e


def test_build_rejects_non_dense_core():
    Q = scalar_core_model(2)
    elements = [
        [M2.element([Q.basis[j].conj().T @ Q.basis[i]]) for j in range(4)]
        for i in range(4)
    ]
    phi = SesquiMap.from_elements(M2, elements, domain=Q)
    with pytest.raises(PreconditionError, match="not representable"):
        build_gns(phi)


def test_build_rejects_non_invariant(rng):
    Q = full_matrix_model(2)
    raw = rng.standard_normal((4, 4, 2, 2)) + 1j * rng.standard_normal((4, 4, 2, 2))
    big = raw.transpose(0, 2, 1, 3).reshape(8, 8)
    big = big.conj().T @ big
    blocks = big.reshape(4, 2, 4, 2).transpose(0, 2, 1, 3)
    gram = blocks.transpose(1, 0, 2, 3).copy()
    phi = SesquiMap(codomain=M2, gram=(gram,), domain=Q)
    with pytest.raises(PreconditionError, match="invariant"):
        build_gns(phi)


def test_verify_representation_all_pass(rng):
    phi = random_invariant_map(rng, full_matrix_model(2), CStarAlgebra((2, 1)))
    triple = build_gns(phi)
    report = verify_representation(triple)
    assert report.passed, [c.name for c in report.failures()]


def test_corrupted_pi_fails_adjoint(rng):
    phi = phi_right_mult(M2)
    triple = build_gns(phi)
    triple.pi = triple.pi.copy()
    triple.pi[1] += 0.01 * np.eye(triple.rep_dim)
    report = verify_representation(triple)
    assert not report.find("adjoint").passed


def test_unit_acts_as_identity():
    phi = phi_right_mult(M2)
    triple = build_gns(phi)
    pi_e = triple.pi_of(phi.domain.unit_coeffs)
    assert np.allclose(pi_e, np.eye(triple.rep_dim), atol=1e-12)
    # composition against the unit is composition with the identity
    for i in range(phi.dim):
        assert np.allclose(triple.pi[i] @ pi_e, triple.pi[i], atol=1e-12)


def test_reconstruct_at_unit():
    phi = phi_right_mult(M2)
    triple = build_gns(phi)
    e = phi.domain.unit_coeffs
    value = reconstruct_phi(triple, e, e)
    assert op_norm(value - evaluate(phi, e, e)) <= 1e-11


def test_reconstruct_random_arguments(rng):
    phi = random_invariant_map(rng, full_matrix_model(2), M2)
    triple = build_gns(phi)
    for _ in range(10):
        a = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        b = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        gap = op_norm(reconstruct_phi(triple, a, b) - evaluate(phi, a, b))
        assert gap <= 1e-9 * max(phi.scale, 1.0)


# -- uniqueness -------------------------------------------------------------------


def test_uniqueness_identity_case():
    phi = phi_right_mult(M2)
    t1 = build_gns(phi)
    U, report = unitary_equivalence(t1, t1)
    assert report.passed
    assert np.allclose(U, np.eye(t1.rep_dim), atol=1e-12)


def test_uniqueness_rotated_basis(rng):
    phi = random_invariant_map(rng, full_matrix_model(2), M2)
    t1 = build_gns(phi)
    t2 = build_gns(phi, rotate_with=rng_from_seed(777))
    U, report = unitary_equivalence(t1, t2)
    assert report.passed, [c.name for c in report.failures()]
    assert report.find("intertwining").residual <= 1e-10


def test_uniqueness_rejects_different_map(rng):
    phi1 = phi_right_mult(M2)
    t1 = build_gns(phi1)
    gram = tuple(g.copy() for g in phi1.gram)
    gram[0][0, 0] *= 2.0
    gram[0][1, 1] *= 3.0
    phi2 = SesquiMap(codomain=M2, gram=gram, domain=phi1.domain)
    t2 = build_gns(phi2, check_inputs=False)
    U, report = unitary_equivalence(t1, t2)
    assert U is None
    assert not report.find("inner_product_match").passed
    assert "pair" in report.find("inner_product_match").witness


# -- corollaries for linear maps ------------------------------------------------------


def test_linear_map_recovery_trace():
    omega = trace_state_map(2)
    triple = gns_from_positive_linear_map(omega)
    eta = triple.cyclic
    # omega(e) = <eta, eta>
    lhs = triple.inner(eta, eta)
    assert op_norm(lhs - omega(omega.domain.unit_coeffs)) <= 1e-12


def test_linear_map_isometry_compression(rng):
    Q = full_matrix_model(3)
    cod = CStarAlgebra((2,))
    V = random_isometry(rng, 3, 2)
    values = tuple(cod.element([V.conj().T @ b @ V]) for b in Q.basis)
    omega = PositiveLinearMap(domain=Q, codomain=cod, values=values)
    triple = gns_from_positive_linear_map(omega, rng=rng)
    assert triple.residuals["linear_map_recovery"] <= 1e-9
    assert triple.residuals["linear_map_triple_identity"] <= 1e-9


def test_bounded_functional_trace_model(rng):
    TA = TraceAlgebra(2, p=2.0)
    W = np.diag([1.0, 2.0])
    omega = omega_trace_functional(TA, W, 8, rng=rng)
    bound = float(np.linalg.eigvalsh(W).max())  # ||W|| rho(I)
    triple = gns_from_bounded_functional(omega, bound=bound, rng=rng)
    assert triple.residuals["functional_recovery"] <= 1e-10
    assert triple.residuals["limit_stinespring_ratio"] <= 1.0 + 1e-9


def test_bounded_functional_zero_map(rng):
    TA = TraceAlgebra(2)
    Q = TA.quasi
    cod = CStarAlgebra((1,))
    values = tuple(cod.zero() for _ in range(Q.dim))
    omega = PositiveLinearMap(domain=Q, codomain=cod, values=values)
    triple = gns_from_bounded_functional(omega, bound=1.0, rng=rng)
    assert triple.rep_dim == 0


def test_bounded_functional_bound_violation(rng):
    TA = TraceAlgebra(2)
    W = np.diag([1.0, 2.0])
    omega = omega_trace_functional(TA, W, 8, rng=rng)
    with pytest.raises(PreconditionError, match="bound violated"):
        gns_from_bounded_functional(omega, bound=1e-6, rng=rng)


def test_bounded_functional_random_family(rng):
    # Random bounded positive functionals: build and check the recovery
    # identity plus the limit inequality realized on exact combinations.
    from gnslab.sesq import random_kraus_linear_map

    Q = full_matrix_model(2)
    for _ in range(5):
        omega = random_kraus_linear_map(rng, Q, CStarAlgebra((2,)), n_kraus=2)
        # operator-norm model is normed; bound from sampling
        bound = 0.0
        for _ in range(64):
            c = Q.random_element(rng, core_only=True)
            d = Q.random_element(rng, core_only=True)
            val = op_norm(omega.of_matrix(d.matrix().conj().T @ c.matrix()))
            bound = max(bound, val / max(Q.norm(c) * Q.norm(d), 1e-300))
        triple = gns_from_bounded_functional(omega, bound=bound * 1.5, rng=rng)
        assert triple.residuals["functional_recovery"] <= 1e-9
        assert triple.residuals["limit_stinespring_ratio"] <= 1.0 + 1e-9


# -- module representation -------------------------------------------------------------


def test_module_gns_right_mult(rng):
    phi = phi_right_mult(M2)
    action = canonical_right_action(phi.domain, M2)
    triple, report = module_gns(phi, action, rng=rng)
    assert report.passed, [c.name for c in report.failures()]
    assert triple.residuals["pi_module_linearity"] <= 1e-12


def test_module_gns_compression(rng):
    phi, action = compression_map(full_matrix_model(3), random_isometry(rng, 3, 2))
    triple, report = module_gns(phi, action, rng=rng)
    assert report.passed


def test_module_gns_rejects_unbounded(rng):
    Q = full_matrix_model(2)
    V = np.diag([1.0, 0.05]).astype(complex)
    elements = [
        [M2.element([V.conj().T @ Q.basis[j].conj().T @ Q.basis[i] @ V]) for j in range(4)]
        for i in range(4)
    ]
    phi = SesquiMap.from_elements(M2, elements, domain=Q)
    action = canonical_right_action(Q, M2)
    with pytest.raises(PreconditionError, match="module structure"):
        module_gns(phi, action, rng=rng)


# -- intertwiner -------------------------------------------------------------------------


def test_intertwiner_point_evaluation(rng):
    TA = TraceAlgebra(2)
    phi = schatten_trace_map(TA, np.diag([1.0, 2.0]), 6, rng=rng)
    triple = build_gns(phi)
    theta = point_state(phi.codomain, 5)
    result = intertwiner(phi, theta, triple, rng=rng)
    assert result.report.passed, [c.name for c in result.report.failures()]
    assert result.bound <= 1.0 + 1e-10
    assert result.residuals["intertwining"] <= 1e-10


def test_intertwiner_scalar_identity(rng):
    # Scalar-valued map with the identity state: T is literally the identity
    # because both quotients are built by the same decomposition.
    omega = trace_state_map(2)
    triple = gns_from_positive_linear_map(omega)
    phi = triple.phi
    theta = State(phi.codomain, (np.eye(1),))
    result = intertwiner(phi, theta, triple, rng=rng)
    assert np.allclose(result.T, np.eye(triple.rep_dim), atol=1e-12)


def test_intertwiner_rank_deficient_state(rng):
    phi = phi_right_mult(M2)
    triple = build_gns(phi)
    theta = State(M2, (np.diag([1.0, 0.0]),))  # pure, rank-deficient
    result = intertwiner(phi, theta, triple, rng=rng)
    assert result.scalar.rep_dim < triple.rep_dim
    rank = np.linalg.matrix_rank(result.T, tol=1e-10)
    assert rank == result.scalar.rep_dim  # surjective
    assert result.scalar.rep_dim < triple.rep_dim  # hence not injective
    assert result.report.passed


def test_intertwiner_rejects_wrong_state(rng):
    phi = phi_right_mult(M2)
    triple = build_gns(phi)
    with pytest.raises(PreconditionError):
        bad = State(CStarAlgebra((3,)), (np.eye(3) / 3,))
        intertwiner(phi, bad, triple, rng=rng)
    with pytest.raises(PreconditionError):
        State(M2, (np.eye(2),))  # trace 2, not a state


def test_admissibility_bounds_pi_norm(rng):
    # ||Pi(a)|| over the quasi-norm unit ball is bounded by sqrt(gamma_a).
    from gnslab.sesq import admissibility_constant

    phi = phi_right_mult(M2)
    triple = build_gns(phi)
    qs = triple.quotient
    for i in range(phi.dim):
        gamma = admissibility_constant(phi, _unit(4, i), n_samples=64, rng=rng)
        worst = 0.0
        for _ in range(200):
            u = rng.standard_normal(triple.rep_dim) + 1j * rng.standard_normal(
                triple.rep_dim
            )
            denom = qs.norm_coords(u)
            if denom < 1e-12:
                continue
            worst = max(worst, qs.norm_coords(triple.pi[i] @ u) / denom)
        assert worst <= np.sqrt(gamma) * (1 + 1e-9)
