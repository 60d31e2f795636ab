import itertools

import numpy as np
import pytest
from scipy.linalg import subspace_angles

from gnslab.cstar import CStarAlgebra, is_positive, op_norm
from gnslab.errors import PreconditionError
from gnslab.nc_examples import phi_right_mult, right_mult_domain
from gnslab.quasi import full_matrix_model, scalar_core_model
from gnslab.reporting import FAIL
from gnslab.sesq import (
    MapFlags,
    PositiveLinearMap,
    RightAction,
    SesquiMap,
    admissibility_constant,
    canonical_right_action,
    certificate_matrices,
    check_admissibility,
    check_c_linearity,
    check_cs,
    check_hermitian_symmetry,
    check_invariance,
    check_module_bound,
    check_positivity,
    compression_map,
    density_check,
    evaluate,
    null_space,
    phi_from_linear_map,
    quasi_norm,
    quasi_triangle_check,
    random_certificate_map,
    random_invariant_map,
    random_kraus_linear_map,
    run_suite,
    stinespring_inequality,
)

M2 = CStarAlgebra((2,))


def scalar_gram_map(form_matrix, codomain=None, domain=None):
    """Phi(a, b) = (a^T g conj(b)) . 1 with standard-convention form matrix."""
    codomain = codomain or CStarAlgebra((1,))
    g = np.asarray(form_matrix, dtype=complex).T  # convert to gram convention
    d = g.shape[0]
    gram = []
    for n in codomain.block_dims:
        eye = np.eye(n, dtype=complex)
        gram.append(np.einsum("ij,pq->ijpq", g, eye))
    return SesquiMap(codomain=codomain, gram=tuple(gram), domain=domain)


# -- evaluation and symmetry -----------------------------------------------------


def test_eval_right_mult_identity():
    phi = phi_right_mult(M2)
    e = phi.domain.unit().coeffs
    value = evaluate(phi, e, e)
    assert np.allclose(value.blocks[0], np.eye(2), atol=1e-12)


def test_eval_zero_argument(rng):
    phi = phi_right_mult(M2)
    b = phi.domain.random_element(rng).coeffs
    out = evaluate(phi, np.zeros(4), b)
    assert op_norm(out) == pytest.approx(0.0, abs=1e-14)


def test_eval_matches_matrix_formula(rng):
    phi = phi_right_mult(M2)
    Q = phi.domain
    a, b = Q.random_element(rng), Q.random_element(rng)
    value = evaluate(phi, a, b)
    expected = b.matrix().conj().T @ a.matrix()
    assert np.allclose(value.blocks[0], expected, atol=1e-11)


def test_eval_sesquilinear(rng):
    phi = random_certificate_map(rng, 3, CStarAlgebra((2,)))
    a, b, c = (rng.standard_normal(3) + 1j * rng.standard_normal(3) for _ in range(3))
    al, be, ga = 1.3 - 0.2j, -0.7j, 2.0 + 1.0j
    lhs = evaluate(phi, al * a + be * b, ga * c)
    rhs = np.conj(ga) * (al * evaluate(phi, a, c) + be * evaluate(phi, b, c))
    assert op_norm(lhs - rhs) == pytest.approx(0.0, abs=1e-10)


def test_hermitian_symmetry_of_constructions(rng):
    for phi in (
        phi_right_mult(M2),
        random_certificate_map(rng, 4, CStarAlgebra((2, 1))),
        random_invariant_map(rng, full_matrix_model(2), CStarAlgebra((2,))),
    ):
        check = check_hermitian_symmetry(phi)
        assert check.passed
        assert check.residual <= 1e-12
        # eval form of the same statement
        a = rng.standard_normal(phi.dim) + 1j * rng.standard_normal(phi.dim)
        b = rng.standard_normal(phi.dim) + 1j * rng.standard_normal(phi.dim)
        gap = evaluate(phi, b, a) - evaluate(phi, a, b).star()
        assert op_norm(gap) <= 1e-11 * max(phi.scale, 1.0)


def test_broken_symmetry_witness():
    g = np.zeros((2, 2, 1, 1), dtype=complex)
    g[0, 1, 0, 0] = 1.0  # no matching conjugate at (1, 0)
    phi = SesquiMap(codomain=CStarAlgebra((1,)), gram=(g,))
    check = check_hermitian_symmetry(phi)
    assert check.status == FAIL
    assert tuple(check.witness["pair"]) in {(0, 1), (1, 0)}


# -- positivity -------------------------------------------------------------------


def test_right_mult_certificate_passes():
    phi = phi_right_mult(M2)
    result = check_positivity(phi, mode="certificate")
    assert result.passed and result.details["mode"] == "block-PSD"
    for big in certificate_matrices(phi):
        assert np.linalg.eigvalsh(big).min() >= -1e-12


def test_negative_diagonal_witness(rng):
    g = -np.eye(2)[:, :, None, None] * np.ones((1, 1))
    g = np.einsum("ij,pq->ijpq", -np.eye(2), np.eye(1))
    phi = SesquiMap(codomain=CStarAlgebra((1,)), gram=(g,))
    result = check_positivity(phi, mode="sampled", n_samples=50, rng=rng)
    assert result.status == FAIL
    witness = np.asarray(result.witness["coefficients"])
    assert np.allclose(witness, [1.0, 0.0])  # e_1 reported first


def test_certificate_falls_through_to_sampled(rng):
    # A positive map whose certificate matrix is NOT PSD: positivity is
    # confirmed by sampling instead.  Transposition on M2 is positive but
    # not completely positive; its certificate matrix is the swap-like
    # Choi matrix with a negative eigenvalue.
    Q = full_matrix_model(2)
    cod = CStarAlgebra((2,))
    elements = [
        [cod.element([(Q.basis[j].conj().T @ Q.basis[i]).T]) for j in range(4)]
        for i in range(4)
    ]
    phi = SesquiMap.from_elements(cod, elements, domain=Q)
    assert check_hermitian_symmetry(phi).passed
    bad_cert = min(
        np.linalg.eigvalsh(b).min() for b in certificate_matrices(phi)
    )
    assert bad_cert < -1e-3
    result = check_positivity(phi, mode="certificate", n_samples=500, rng=rng)
    assert result.passed and result.details["mode"] == "sampled"


def test_random_certificate_maps_positive(rng):
    for _ in range(10):
        phi = random_certificate_map(rng, 4, CStarAlgebra((2,)))
        result = check_positivity(phi, mode="certificate")
        assert result.passed and result.details["mode"] == "block-PSD"


# -- Cauchy-Schwarz ----------------------------------------------------------------


def test_cs_equal_arguments_tight(rng):
    phi = random_certificate_map(rng, 3, CStarAlgebra((2,)))
    a = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    num = op_norm(evaluate(phi, a, a))
    geo = np.sqrt(op_norm(evaluate(phi, a, a)) * op_norm(evaluate(phi, a, a)))
    assert num == pytest.approx(geo, rel=1e-12)


def test_factor_one_for_right_mult(rng):
    phi = phi_right_mult(M2)
    report = check_cs(phi, n_samples=500, rng=rng)
    clin = report.find("cauchy_schwarz_c_linear")
    assert clin is not None and clin.passed
    assert clin.worst_ratio <= 1.0 + 1e-9


def test_factor_two_random_sweep(rng):
    for _ in range(20):
        phi = random_certificate_map(rng, 5, CStarAlgebra((3,)))
        report = check_cs(phi, n_samples=200, rng=rng)
        assert report.find("cauchy_schwarz_factor2").passed


def test_commutative_factor_one(rng):
    phi = random_certificate_map(rng, 4, CStarAlgebra((1, 1, 1)))
    report = check_cs(phi, n_samples=500, rng=rng)
    comm = report.find("cauchy_schwarz_commutative")
    assert comm is not None and comm.passed


# -- Stinespring-type inequality ------------------------------------------------------


def test_stinespring_trace_state():
    Q = full_matrix_model(2)
    cod = CStarAlgebra((1,))
    values = tuple(cod.element([np.array([[np.trace(b) / 2]])]) for b in Q.basis)
    omega = PositiveLinearMap(domain=Q, codomain=cod, values=values)
    result = stinespring_inequality(omega, n_samples=200, rng=np.random.default_rng(5))
    assert result.passed
    assert result.worst_ratio <= 1.0 + 1e-9


def test_stinespring_isometry_family(rng):
    from gnslab.sampling import random_isometry

    Q = full_matrix_model(3)
    cod = CStarAlgebra((2,))
    for _ in range(10):
        V = random_isometry(rng, 3, 2)
        values = tuple(cod.element([V.conj().T @ b @ V]) for b in Q.basis)
        omega = PositiveLinearMap(domain=Q, codomain=cod, values=values)
        result = stinespring_inequality(omega, n_samples=100, rng=rng)
        assert result.passed


def test_stinespring_zero_element():
    Q = full_matrix_model(2)
    cod = CStarAlgebra((1,))
    values = tuple(cod.element([np.array([[np.trace(b) / 2]])]) for b in Q.basis)
    omega = PositiveLinearMap(domain=Q, codomain=cod, values=values)
    zero = omega(np.zeros(4))
    assert 4 * op_norm(omega(Q.unit_coeffs)) * 0.0 >= op_norm(zero) ** 2


# -- null space and quotient -----------------------------------------------------------


def test_faithful_map_has_trivial_null():
    phi = phi_right_mult(M2)
    qs = null_space(phi)
    assert qs.null_dim == 0 and qs.rep_dim == 4


def test_zero_map_null_is_everything():
    g = np.zeros((3, 3, 1, 1), dtype=complex)
    phi = SesquiMap(codomain=CStarAlgebra((1,)), gram=(g,))
    qs = null_space(phi)
    assert qs.null_dim == 3 and qs.rep_dim == 0


def test_null_space_matches_scalar_kernel(rng):
    # Phi(a, b) = omega-form . 1 with a rank-deficient PSD form: the SVD
    # kernel must match the eigendecomposition kernel of the form matrix.
    d = 5
    basisK = np.zeros((d, 2), dtype=complex)
    basisK[0, 0] = 1.0
    basisK[1, 0] = -1.0
    basisK[2, 1] = 1.0
    basisK[3, 1] = 1.0j
    q, _ = np.linalg.qr(
        np.concatenate([basisK, rng.standard_normal((d, d - 2))], axis=1)
    )
    perp = q[:, 2:]
    form = perp @ np.diag([1.0, 2.0, 3.0]) @ perp.conj().T
    phi = scalar_gram_map(form, codomain=CStarAlgebra((2,)))
    qs = null_space(phi)
    assert qs.null_dim == 2
    angles = subspace_angles(qs.null_basis, basisK)
    assert angles.max(initial=0.0) <= 1e-8


def lattice_vectors(d):
    alphabet = [0.0, 1.0, -1.0, 1.0j, -1.0j]
    for combo in itertools.product(alphabet, repeat=d):
        v = np.array(combo, dtype=complex)
        if np.any(v != 0):
            yield v


def test_null_space_brute_force_oracle(rng):
    # Dense coefficient sweep over the {0, +-1, +-i} lattice: the set
    # {a : ||Phi(a,a)|| <= 1e-9} collected from the sweep spans exactly the
    # SVD kernel (principal angles <= 1e-6).
    d = 4
    kernel = np.zeros((d, 2), dtype=complex)
    kernel[0, 0] = 1.0
    kernel[1, 0] = 1.0
    kernel[2, 1] = 1.0
    kernel[3, 1] = -1.0j
    q, _ = np.linalg.qr(np.concatenate([kernel, rng.standard_normal((d, d - 2))], axis=1))
    perp = q[:, 2:]
    form = perp @ np.diag([1.5, 0.5]) @ perp.conj().T
    phi = scalar_gram_map(form)
    qs = null_space(phi)

    hits = []
    scale = max(phi.scale, 1e-300)
    for v in lattice_vectors(d):
        if op_norm(evaluate(phi, v, v)) <= 1e-9 * scale * np.linalg.norm(v) ** 2:
            hits.append(v)
    hit_matrix = np.stack(hits, axis=1)
    assert np.linalg.matrix_rank(hit_matrix, tol=1e-8) == qs.null_dim
    angles = subspace_angles(hit_matrix, qs.null_basis)
    assert angles.max(initial=0.0) <= 1e-6


def test_quotient_inner_product_well_defined(rng):
    d = 4
    kernel = np.zeros((d, 1), dtype=complex)
    kernel[0, 0] = 1.0
    kernel[1, 0] = -1.0
    q, _ = np.linalg.qr(np.concatenate([kernel, rng.standard_normal((d, d - 1))], axis=1))
    perp = q[:, 1:]
    form = perp @ np.diag([1.0, 2.0, 0.5]) @ perp.conj().T
    phi = scalar_gram_map(form, codomain=CStarAlgebra((2,)))
    qs = null_space(phi)
    a = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    b = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    n = qs.null_basis[:, 0]
    base = evaluate(phi, a, b)
    shifted = evaluate(phi, a + 2.0 * n, b - 1.5j * n)
    assert op_norm(base - shifted) <= 1e-10 * max(phi.scale, 1.0)
    # and the coordinates see the same value
    coords = qs.inner_eval(qs.coords(a), qs.coords(b))
    assert op_norm(coords - base) <= 1e-10 * max(phi.scale, 1.0)


def test_quasi_norm_basics(rng):
    phi = phi_right_mult(M2)
    qs = null_space(phi)
    assert quasi_norm(qs, np.zeros(4)) == pytest.approx(0.0, abs=1e-14)
    a = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    assert quasi_norm(qs, 2.0 * a) == pytest.approx(2.0 * quasi_norm(qs, a), rel=1e-12)


def test_quasi_triangle_sweeps(rng):
    general = random_certificate_map(rng, 4, CStarAlgebra((2,)))
    check = quasi_triangle_check(null_space(general), n_samples=2000, rng=rng)
    assert check.passed
    assert check.worst_ratio <= np.sqrt(2.0) + 1e-9

    clinear = phi_right_mult(M2)
    check = quasi_triangle_check(null_space(clinear), n_samples=2000, rng=rng)
    assert check.worst_ratio <= 1.0 + 1e-9


# -- invariance ---------------------------------------------------------------------


def test_right_mult_invariant():
    result = check_invariance(phi_right_mult(M2))
    assert result.passed and result.residual <= 1e-12


def test_kraus_maps_invariant(rng):
    phi = random_invariant_map(rng, full_matrix_model(2), CStarAlgebra((2, 1)))
    assert check_invariance(phi).passed


def test_random_symmetric_gram_fails_invariance(rng):
    Q = full_matrix_model(2)
    cod = CStarAlgebra((2,))
    raw = rng.standard_normal((4, 4, 2, 2)) + 1j * rng.standard_normal((4, 4, 2, 2))
    sym = 0.5 * (raw + np.conj(np.swapaxes(raw.transpose(1, 0, 2, 3), 2, 3)))
    phi = SesquiMap(codomain=cod, gram=(sym,), domain=Q)
    assert check_hermitian_symmetry(phi).passed
    result = check_invariance(phi)
    assert result.status == FAIL
    assert result.residual > 1e-3


# -- module structure ----------------------------------------------------------------


def test_c_linearity_unit_is_identity(rng):
    phi = phi_right_mult(M2)
    action = canonical_right_action(phi.domain, M2)
    a = phi.domain.random_element(rng)
    ax = action.act(a, M2.unit())
    assert np.allclose(ax.coeffs, a.coeffs, atol=1e-12)


def test_right_mult_is_c_linear(rng):
    phi = phi_right_mult(M2)
    action = canonical_right_action(phi.domain, M2)
    assert check_c_linearity(phi, action, rng=rng).passed


def test_compression_with_bad_factor_not_c_linear(rng):
    # Phi(A, B) = V* B* A V with V not the projection: generically the
    # compressed action does not commute through.
    from gnslab.sampling import complex_normal

    Q = full_matrix_model(3)
    J = np.zeros((3, 2), dtype=complex)
    J[0, 0] = J[1, 1] = 1.0
    V = J @ complex_normal(rng, (2, 2)) @ J.conj().T  # lives in P B(H) P, != P
    cod = CStarAlgebra((2,))
    elements = [
        [
            cod.element([J.conj().T @ V.conj().T @ Q.basis[j].conj().T @ Q.basis[i] @ V @ J])
            for j in range(9)
        ]
        for i in range(9)
    ]
    phi = SesquiMap.from_elements(cod, elements, domain=Q)
    action = RightAction(domain=Q, codomain=cod, isometries=(J,))
    result = check_c_linearity(phi, action, rng=rng)
    assert result.status == FAIL

    # with V = P the same construction is module-linear
    elements = [
        [cod.element([J.conj().T @ Q.basis[j].conj().T @ Q.basis[i] @ J]) for j in range(9)]
        for i in range(9)
    ]
    phi_p = SesquiMap.from_elements(cod, elements, domain=Q)
    assert check_c_linearity(phi_p, action, rng=rng).passed


def test_module_bound_for_c_linear(rng):
    phi, action = compression_map(full_matrix_model(3), np.eye(3)[:, :2])
    result = check_module_bound(phi, action, n_samples=200, rng=rng)
    assert result.passed


def test_module_bound_violation_witnessed(rng):
    # Phi(a, b) = V* b* a V with invertible non-unitary V: invariant and
    # positive, but the congruence distorts norms enough to break the
    # module bound.
    Q = full_matrix_model(2)
    V = np.diag([1.0, 0.05]).astype(complex)
    cod = CStarAlgebra((2,))
    elements = [
        [cod.element([V.conj().T @ Q.basis[j].conj().T @ Q.basis[i] @ V]) for j in range(4)]
        for i in range(4)
    ]
    phi = SesquiMap.from_elements(cod, elements, domain=Q)
    assert check_invariance(phi).passed
    action = canonical_right_action(Q, cod)
    result = check_module_bound(phi, action, n_samples=300, rng=rng)
    assert result.status == FAIL
    assert result.witness is not None


def test_module_bound_unit_equality(rng):
    phi = phi_right_mult(M2)
    action = canonical_right_action(phi.domain, M2)
    a = phi.domain.random_element(rng).coeffs
    ax = action.act_coeffs(a, M2.unit())
    assert op_norm(evaluate(phi, ax, ax)) == pytest.approx(
        op_norm(evaluate(phi, a, a)) * op_norm(M2.unit()) ** 2, rel=1e-12
    )


# -- admissibility ---------------------------------------------------------------------


def test_admissibility_unit_is_one(rng):
    phi = phi_right_mult(M2)
    gamma = admissibility_constant(phi, phi.domain.unit().coeffs, rng=rng)
    assert gamma == pytest.approx(1.0, rel=1e-10)


def test_admissibility_right_mult_matches_norm(rng):
    phi = phi_right_mult(M2)
    gammas, result = check_admissibility(phi, n_samples=200, rng=rng)
    assert result.passed
    for i, elem in enumerate(M2.basis()):
        assert gammas[i] == pytest.approx(op_norm(elem) ** 2, rel=1e-9)


def test_admissibility_always_finite(rng):
    phi = random_invariant_map(rng, full_matrix_model(2), CStarAlgebra((2,)))
    gammas, result = check_admissibility(phi, n_samples=100, rng=rng)
    assert result.passed
    assert all(np.isfinite(list(gammas.values())))


# -- density ----------------------------------------------------------------------------


def test_density_full_core():
    assert density_check(phi_right_mult(M2))


def test_density_fails_for_scalar_core():
    Q = scalar_core_model(2)
    cod = CStarAlgebra((2,))
    elements = [
        [cod.element([Q.basis[j].conj().T @ Q.basis[i]]) for j in range(4)]
        for i in range(4)
    ]
    phi = SesquiMap.from_elements(cod, elements, domain=Q)
    assert not density_check(phi)


def test_suite_runner(rng):
    phi = phi_right_mult(M2)
    report = run_suite(
        phi,
        ["positivity", "symmetry", "cs", "invariance", "module_bound", "admissibility", "density"],
        rng,
        n_samples=200,
    )
    assert report.passed, [c.name for c in report.failures()]
    assert run_suite(phi, [], rng).checks == []
