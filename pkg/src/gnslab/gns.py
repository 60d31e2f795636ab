"""Cyclic *-representations built from positive C*-valued maps.

Given an invariant positive map with dense core image, the quotient by the
null space carries the C*-valued inner product, and left multiplication
descends to representation matrices on the quotient coordinates:

    Pi(a) Lambda(c) = Lambda(a c),   xi = Lambda(e).

Everything the construction promises is verified numerically and the
residuals are kept with the triple: the adjoint identity, the weak partial
product, reconstruction of the map from the cyclic vector, cyclicity, and
uniqueness up to unitaries.  At finite dimension the domain needs no
closure step, so the graph-topology machinery collapses and closedness is
recorded as automatic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cstar import AlgebraElement, State, op_norm
from .errors import InternalInconsistencyError, PreconditionError, StructureError
from .quasi import QuasiElement, QuasiStarAlgebra
from .reporting import CheckResult, Report, failing, passing
from .sampling import haar_unitary, unit_vectors
from .sesq import (
    PositiveLinearMap,
    QuotientSpace,
    RightAction,
    SesquiMap,
    check_c_linearity,
    check_invariance,
    check_module_bound,
    check_positivity,
    density_ranks,
    evaluate,
    null_space,
    phi_from_linear_map,
)

DEFAULT_TOL = 1e-9


@dataclass(eq=False)
class GnsTriple:
    """Representation matrices over the quotient coordinates.

    ``pi`` stacks one rep-space matrix per domain basis element;
    ``domain_coords`` holds Lambda of the core basis (the dense domain of
    the unbounded picture, which at finite dimension is the whole space);
    ``cyclic`` is Lambda(e).
    """

    phi: SesquiMap
    quotient: QuotientSpace
    pi: np.ndarray
    domain_coords: np.ndarray
    cyclic: np.ndarray
    residuals: dict[str, float] = field(default_factory=dict)

    @property
    def rep_dim(self) -> int:
        return self.quotient.rep_dim

    def pi_of(self, a) -> np.ndarray:
        coeffs = a.coeffs if isinstance(a, QuasiElement) else np.asarray(a, complex)
        return np.einsum("i,iab->ab", coeffs, self.pi)

    def inner(self, u: np.ndarray, v: np.ndarray) -> AlgebraElement:
        return self.quotient.inner_eval(u, v)

    def star_pi(self, i: int) -> np.ndarray:
        """Pi(e_i^*): representation of the involved basis element."""
        S = self.phi.require_domain().involution_coeffs
        return self.pi_of(S[i])


def _sandwich(H: np.ndarray, left: np.ndarray | None, right: np.ndarray | None) -> np.ndarray:
    """Tensor of <L e_a, R e_b> for a matrix-valued Gram H (r, r, n, n)."""
    out = H
    if left is not None:
        out = np.einsum("ca,cbpq->abpq", left, out)
    if right is not None:
        out = np.einsum("db,adpq->abpq", right.conj(), out)
    return out


def _max_abs(arrays) -> float:
    return max((float(np.abs(a).max(initial=0.0)) for a in arrays), default=0.0)


def build_gns(
    phi: SesquiMap,
    tol: float = DEFAULT_TOL,
    rotate_with=None,
    check_inputs: bool = True,
    rng=None,
) -> GnsTriple:
    """Construct the cyclic representation of an invariant positive map.

    Preconditions (verified unless ``check_inputs`` is False): positivity,
    invariance, a unital domain, and density of the core image in the
    quotient.  Density failure is a rejection (the map is not
    representable); a well-definedness failure after those checks pass is
    an internal inconsistency, because well-definedness is a theorem given
    invariance.

    ``rotate_with`` (a Generator) applies a Haar-random unitary change of
    rep coordinates; builds over rotated bases are unitarily equivalent.
    """
    Q = phi.require_domain()
    if Q.unit_coeffs is None:
        raise PreconditionError("construction needs a unital domain")
    if check_inputs:
        if phi.flags.positivity is None:
            result = check_positivity(
                phi, mode="certificate", n_samples=512, rng=rng, tol=tol
            )
            if not result.passed:
                raise PreconditionError("map failed the positivity check")
            phi.flags.positivity = result.details.get("mode")
        if phi.flags.invariant is None:
            result = check_invariance(phi, tol=max(tol, 1e-10))
            if not result.passed:
                raise PreconditionError(
                    f"map is not invariant: residual {result.residual:.3e}"
                )
            phi.flags.invariant = True
        core_rank, full_rank = density_ranks(phi, tol=tol)
        if core_rank != full_rank:
            raise PreconditionError(
                "not representable: core image is not dense in the quotient "
                f"(rank {core_rank} < {full_rank})"
            )

    qs = null_space(phi, tol=tol)
    if rotate_with is not None and qs.rep_dim:
        U = haar_unitary(rotate_with, qs.rep_dim)
        rep = qs.rep_basis @ U
        inner = tuple(
            np.einsum("ia,jb,ijpq->abpq", rep, rep.conj(), g) for g in phi.gram
        )
        qs = QuotientSpace(phi, qs.null_basis, rep, inner)

    repH = qs.rep_basis.conj().T
    r, d = qs.rep_dim, phi.dim
    core = list(Q.a0_indices)
    Y = repH[:, core]
    P = Q.left_mult_tensor  # (d, d0, d)
    pinv_Y = np.linalg.pinv(Y)

    pi = np.zeros((d, r, r), dtype=complex)
    scale_z = 1e-300
    wd_resid = 0.0
    for i in range(d):
        Z = repH @ P[i].T  # (r, d0): Lambda(e_i x) over core x
        pi[i] = Z @ pinv_Y
        wd_resid = max(wd_resid, float(np.linalg.norm(pi[i] @ Y - Z)))
        scale_z = max(scale_z, float(np.linalg.norm(Z)))
    if wd_resid > 100.0 * tol * scale_z:
        raise InternalInconsistencyError(
            "left multiplication does not descend to the quotient "
            f"(residual {wd_resid:.3e}); invariance must have been violated"
        )

    cyclic = repH @ np.asarray(Q.unit_coeffs, dtype=complex)
    triple = GnsTriple(
        phi=phi,
        quotient=qs,
        pi=pi,
        domain_coords=Y,
        cyclic=cyclic,
        residuals={"well_definedness": wd_resid / scale_z},
    )
    triple.residuals.update(_representation_residuals(triple))
    return triple


def _representation_residuals(T: GnsTriple) -> dict[str, float]:
    """All *-representation residuals, relative to the natural scales."""
    phi, qs = T.phi, T.quotient
    Q = phi.require_domain()
    d, r = phi.dim, qs.rep_dim
    H = qs.inner
    scale_h = max(_max_abs(H), 1e-300)
    pi_scale = max(float(np.abs(T.pi).max(initial=0.0)), 1.0)
    S = Q.involution_coeffs
    P = Q.left_mult_tensor

    unit = 0.0
    if r:
        pi_e = T.pi_of(Q.unit_coeffs)
        unit = float(np.abs(pi_e - np.eye(r)).max(initial=0.0))

    adjoint = 0.0
    weak = 0.0
    comp = 0.0
    for i in range(d):
        A = T.pi[i]
        Astar = T.pi_of(S[i])
        for Hk in H:
            lhs = _sandwich(Hk, A, None)
            rhs = _sandwich(Hk, None, Astar)
            adjoint = max(adjoint, float(np.abs(lhs - rhs).max(initial=0.0)))
        for xpos, xidx in enumerate(Q.a0_indices):
            C = T.pi[xidx]
            AC = T.pi_of(P[i, xpos])
            for Hk in H:
                lhs = _sandwich(Hk, C, Astar)
                rhs = _sandwich(Hk, AC, None)
                weak = max(weak, float(np.abs(lhs - rhs).max(initial=0.0)))
            comp = max(
                comp, float(np.abs(AC - A @ C).max(initial=0.0))
            )

    recon = 0.0
    if r:
        U = np.einsum("iab,b->ia", T.pi, T.cyclic)
        for g, Hk in zip(phi.gram, H):
            rebuilt = np.einsum("ia,jb,abpq->ijpq", U, U.conj(), Hk)
            recon = max(recon, float(np.abs(rebuilt - g).max(initial=0.0)))
    else:
        recon = _max_abs(phi.gram)

    cyclic_rank = 0
    if T.domain_coords.size:
        sv = np.linalg.svd(T.domain_coords, compute_uv=False)
        cyclic_rank = int(np.sum(sv > 1e-9 * max(sv[0], 1e-300)))

    return {
        "unit_identity": unit,
        "adjoint": adjoint / scale_h,
        "weak_product": weak / scale_h,
        "product_composition": comp / pi_scale,
        "reconstruction": recon / max(phi.scale, 1e-300),
        "cyclic_defect": float(r - cyclic_rank),
    }


def verify_representation(
    T: GnsTriple, tol: float = 1e-10, unit_tol: float = 1e-12
) -> Report:
    """Report on the *-representation axioms of a built triple.

    Closedness is recorded as automatic: at finite dimension the graph
    topology adds nothing and every operator is already everywhere defined.
    """
    res = _representation_residuals(T)
    report = Report(environment={"tol": tol})

    def entry(name: str, value: float, bound: float) -> CheckResult:
        if value > bound:
            return failing(name, residual=value)
        return passing(name, residual=value)

    report.add(entry("adjoint", res["adjoint"], tol))
    report.add(entry("weak_product", res["weak_product"], tol))
    report.add(entry("product_composition", res["product_composition"], tol))
    report.add(entry("unit_identity", res["unit_identity"], unit_tol))
    report.add(entry("reconstruction", res["reconstruction"], tol * 10))
    if res["cyclic_defect"] > 0:
        report.add(failing("cyclicity", residual=res["cyclic_defect"]))
    else:
        report.add(passing("cyclicity"))
    report.add(passing("closedness", details={"closed": "automatic (finite dimension)"}))
    return report


def reconstruct_phi(T: GnsTriple, a, b) -> AlgebraElement:
    """<Pi(a) xi, Pi(b) xi>; equal to Phi(a, b) within tolerance."""
    ua = T.pi_of(a) @ T.cyclic
    ub = T.pi_of(b) @ T.cyclic
    return T.inner(ua, ub)


def unitary_equivalence(
    T1: GnsTriple, T2: GnsTriple, tol: float = 1e-10
) -> tuple[np.ndarray | None, Report]:
    """Unitary intertwiner between two builds of the same map.

    Sends Lambda^1(a) to Lambda^2(a); checks that it preserves the
    C*-valued inner product, matches the cyclic vectors, and intertwines
    every representation matrix.  Disagreeing inner products mean the
    triples do not come from the same map: the report carries the witness
    pair and no unitary is returned.
    """
    report = Report(environment={"tol": tol})
    if T1.rep_dim != T2.rep_dim or T1.phi.dim != T2.phi.dim:
        report.add(
            failing(
                "unitary_dimensions",
                details={"rep_dims": [T1.rep_dim, T2.rep_dim]},
            )
        )
        return None, report
    U = T2.quotient.rep_basis.conj().T @ T1.quotient.rep_basis
    scale = max(_max_abs(T1.quotient.inner), _max_abs(T2.quotient.inner), 1e-300)

    worst, witness = 0.0, None
    for H1, H2 in zip(T1.quotient.inner, T2.quotient.inner):
        moved = _sandwich(H2, U, U)
        gap = np.abs(moved - H1).max(axis=(2, 3))
        if gap.size:
            idx = np.unravel_index(int(gap.argmax()), gap.shape)
            if gap[idx] > worst:
                worst, witness = float(gap[idx]), (int(idx[0]), int(idx[1]))
    if worst / scale > tol:
        report.add(
            failing("inner_product_match", residual=worst / scale, witness={"pair": witness})
        )
        return None, report
    report.add(passing("inner_product_match", residual=worst / scale))

    unitarity = 0.0
    if U.size:
        unitarity = float(
            np.abs(U.conj().T @ U - np.eye(T1.rep_dim)).max(initial=0.0)
        )
    report.add(
        passing("unitarity", residual=unitarity)
        if unitarity <= tol
        else failing("unitarity", residual=unitarity)
    )

    cyc = float(np.abs(U @ T1.cyclic - T2.cyclic).max(initial=0.0))
    report.add(
        passing("cyclic_match", residual=cyc) if cyc <= tol else failing("cyclic_match", residual=cyc)
    )

    inter = 0.0
    pi_scale = max(float(np.abs(T1.pi).max(initial=0.0)), 1.0)
    for i in range(T1.phi.dim):
        inter = max(
            inter,
            float(np.abs(U @ T1.pi[i] - T2.pi[i] @ U).max(initial=0.0)) / pi_scale,
        )
    report.add(
        passing("intertwining", residual=inter)
        if inter <= tol
        else failing("intertwining", residual=inter)
    )
    if not report.passed:
        return None, report
    return U, report


def gns_from_positive_linear_map(
    omega: PositiveLinearMap,
    tol: float = DEFAULT_TOL,
    rng=None,
) -> GnsTriple:
    """Representation of a positive linear C*-valued map on a unital *-algebra.

    Builds Phi(a, b) = omega(b* a) and runs the construction; additionally
    records the recovery residuals omega(a) = <Pi(a) eta, eta> and
    omega(b* a c) = <Pi(a) Lambda(c), Lambda(b)> with eta = Lambda(e).
    """
    Q = omega.domain
    if Q.a0_dim != Q.dim:
        raise PreconditionError("linear-map construction needs A0 = A (a *-algebra)")
    if Q.unit_coeffs is None:
        raise PreconditionError("linear-map construction needs a unit")
    phi = phi_from_linear_map(omega, tol=tol)
    result = check_positivity(phi, mode="certificate", n_samples=2048, rng=rng, tol=tol)
    if not result.passed:
        raise PreconditionError("omega(b* a) is not a positive map")
    phi.flags.positivity = result.details.get("mode")
    triple = build_gns(phi, tol=tol, rng=rng)

    eta = triple.cyclic
    scale = max(omega.scale, 1e-300)
    linear_resid = 0.0
    for i in range(Q.dim):
        lhs = triple.inner(triple.pi[i] @ eta, eta)
        rhs = omega.values[i]
        linear_resid = max(linear_resid, op_norm(lhs - rhs) / scale)

    triple_resid = 0.0
    for i in range(Q.dim):
        for c in range(Q.dim):
            lam_c = triple.quotient.coords(_basis_vec(Q.dim, c))
            lhs = triple.inner(triple.pi[i] @ lam_c, eta)
            rhs = omega.of_matrix(Q.basis[i] @ Q.basis[c], tol=tol)
            triple_resid = max(triple_resid, op_norm(lhs - rhs) / scale)

    triple.residuals["linear_map_recovery"] = linear_resid
    triple.residuals["linear_map_triple_identity"] = triple_resid
    return triple


def _basis_vec(d: int, i: int) -> np.ndarray:
    e = np.zeros(d, dtype=complex)
    e[i] = 1.0
    return e


def gns_from_bounded_functional(
    omega: PositiveLinearMap,
    bound: float,
    n_samples: int = 128,
    rng=None,
    tol: float = DEFAULT_TOL,
) -> GnsTriple:
    """Representation of a bounded positive linear map on a normed model.

    Verifies ||omega(d* c)|| <= bound ||c|| ||d|| on sampled core pairs,
    extends Phi_0(b, c) = omega(c* b) from the core to the whole space
    (exact at finite dimension since the core spans), checks invariance of
    the extension, and builds the representation.  Records the recovery
    residual omega(a) = Phi(a, e) and the limit form of the
    Stinespring-type inequality realized on exact core combinations.
    """
    Q = omega.domain
    if Q.norm_a is None:
        raise PreconditionError("bounded-functional construction needs a normed model")
    if Q.unit_coeffs is None:
        raise PreconditionError("bounded-functional construction needs a unit")
    core_rank = np.linalg.matrix_rank(Q._core_flat, tol=1e-10)
    if core_rank < Q.dim:
        raise PreconditionError("core does not span the ambient space")
    if rng is None:
        rng = np.random.default_rng(0)

    for _ in range(n_samples):
        c = Q.random_element(rng, core_only=True)
        dd = Q.random_element(rng, core_only=True)
        val = op_norm(omega.of_matrix(dd.matrix().conj().T @ c.matrix(), tol=tol))
        cap = bound * Q.norm(c) * Q.norm(dd)
        if val > cap * (1.0 + tol) + tol * max(omega.scale, 1.0):
            raise PreconditionError(
                f"bound violated: ||omega(d*c)|| = {val:.3e} > {cap:.3e}"
            )

    phi = phi_from_linear_map(omega, tol=tol)
    invariance = check_invariance(phi, tol=max(tol, 1e-10))
    if not invariance.passed:
        raise PreconditionError("extension of the functional is not invariant")
    phi.flags.invariant = True
    triple = build_gns(phi, tol=tol, rng=rng)

    scale = max(omega.scale, 1e-300)
    unit = np.asarray(Q.unit_coeffs, dtype=complex)
    recovery = 0.0
    stinespring_worst = 0.0
    unit_norm = op_norm(omega(unit))
    for i in range(Q.dim):
        lhs = evaluate(phi, _basis_vec(Q.dim, i), unit)
        recovery = max(recovery, op_norm(lhs - omega.values[i]) / scale)
        waa = op_norm(evaluate(phi, _basis_vec(Q.dim, i), _basis_vec(Q.dim, i)))
        wa = op_norm(omega.values[i])
        if wa > 0:
            stinespring_worst = max(
                stinespring_worst, wa**2 / max(4.0 * unit_norm * waa, 1e-300)
            )
    if stinespring_worst > 1.0 + tol:
        raise InternalInconsistencyError(
            "limit Stinespring inequality violated on exact combinations"
        )
    triple.residuals["functional_recovery"] = recovery
    triple.residuals["limit_stinespring_ratio"] = stinespring_worst
    return triple


def module_gns(
    phi: SesquiMap,
    action: RightAction,
    n_samples: int = 128,
    rng=None,
    tol: float = DEFAULT_TOL,
) -> tuple[GnsTriple, Report]:
    """Representation with the module structure carried to the quotient.

    Requires module linearity or at least the module bound; rejected with
    the offending witness otherwise.  Verifies that the quotient right
    action is well-defined and that every representation matrix commutes
    with it (module linearity of Pi(a)).
    """
    if rng is None:
        rng = np.random.default_rng(0)
    report = Report(environment={"tol": tol})
    clin = check_c_linearity(phi, action, n_samples=n_samples, rng=rng, tol=max(tol, 1e-10))
    report.add(clin)
    if clin.passed:
        phi.flags.c_linear = True
    else:
        mb = check_module_bound(phi, action, n_samples=n_samples, rng=rng, tol=tol)
        report.add(mb)
        if not mb.passed:
            raise PreconditionError(
                f"map carries no module structure: {mb.witness or mb.details}"
            )

    triple = build_gns(phi, tol=tol, rng=rng)
    Q = phi.require_domain()
    repH = triple.quotient.rep_basis.conj().T
    rep = triple.quotient.rep_basis
    d = phi.dim
    scale = max(float(np.abs(triple.pi).max(initial=0.0)), 1.0)

    wd = 0.0
    clin_pi = 0.0
    for x in phi.codomain.basis():
        act = np.stack(
            [action.act_coeffs(_basis_vec(d, i), x, tol=tol) for i in range(d)],
            axis=1,
        )
        Zx = repH @ act
        Rx = Zx @ rep
        wd = max(wd, float(np.abs(Rx @ repH - Zx).max(initial=0.0)))
        for i in range(d):
            clin_pi = max(
                clin_pi,
                float(np.abs(triple.pi[i] @ Rx - Rx @ triple.pi[i]).max(initial=0.0))
                / scale,
            )
    wd_rel = wd / max(scale, 1.0)
    report.add(
        passing("quotient_action", residual=wd_rel)
        if wd_rel <= 10 * tol
        else failing("quotient_action", residual=wd_rel)
    )
    report.add(
        passing("pi_module_linearity", residual=clin_pi)
        if clin_pi <= max(tol, 1e-12)
        else failing("pi_module_linearity", residual=clin_pi)
    )
    triple.residuals["pi_module_linearity"] = clin_pi
    return triple, report


@dataclass(eq=False)
class IntertwinerResult:
    """Compression onto the scalar construction of a composed state.

    ``T`` maps quotient coordinates of the C*-valued construction onto the
    scalar one; it is a contraction for the quasi norm and intertwines the
    two representations exactly on basis elements.
    """

    T: np.ndarray
    scalar: GnsTriple
    bound: float
    residuals: dict[str, float]
    report: Report


def intertwiner(
    phi: SesquiMap,
    theta: State,
    triple: GnsTriple,
    n_samples: int = 512,
    rng=None,
    tol: float = DEFAULT_TOL,
) -> IntertwinerResult:
    """Intertwine the representation with the scalar one of theta o Phi.

    The composed form phi_theta(a, b) = theta(Phi(a, b)) has a larger null
    space, so the coset map T: Lambda(a) -> lambda(a) is well-defined; it
    is a contraction because |theta(z)| <= ||z|| on positive z.
    """
    if theta.algebra.block_dims != phi.codomain.block_dims:
        raise PreconditionError("state lives on a different algebra than the map")
    if rng is None:
        rng = np.random.default_rng(0)
    report = Report(environment={"tol": tol})

    scalar_map = phi.compose_state(theta)
    scalar_map.flags.invariant = phi.flags.invariant
    scalar = build_gns(scalar_map, tol=tol, rng=rng)

    # Null inclusion N_Phi <= N_phi: scalar form vanishes on the null basis.
    g = scalar_map.gram[0][:, :, 0, 0]
    null = triple.quotient.null_basis
    ninc = 0.0
    if null.size:
        ninc = float(np.abs(g @ null).max(initial=0.0)) / max(
            float(np.abs(g).max(initial=0.0)), 1e-300
        )
    report.add(
        passing("null_inclusion", residual=ninc)
        if ninc <= 100 * tol
        else failing("null_inclusion", residual=ninc)
    )

    T = scalar.quotient.rep_basis.conj().T @ triple.quotient.rep_basis
    wd = float(
        np.abs(
            T @ triple.quotient.rep_basis.conj().T
            - scalar.quotient.rep_basis.conj().T
        ).max(initial=0.0)
    )
    report.add(
        passing("well_defined", residual=wd) if wd <= 100 * tol else failing("well_defined", residual=wd)
    )

    r = triple.rep_dim
    bound = 0.0
    if r:
        samples = np.concatenate(
            [np.eye(r, dtype=complex), unit_vectors(rng, n_samples, r)], axis=0
        )
        for u in samples:
            denom = triple.quotient.norm_coords(u)
            if denom <= 1e-14:
                continue
            bound = max(bound, scalar.quotient.norm_coords(T @ u) / denom)
    report.add(
        passing("contraction", worst_ratio=bound)
        if bound <= 1.0 + max(tol, 1e-10)
        else failing("contraction", worst_ratio=bound)
    )

    inter = 0.0
    pi_scale = max(float(np.abs(triple.pi).max(initial=0.0)), 1.0)
    for i in range(phi.dim):
        inter = max(
            inter,
            float(np.abs(T @ triple.pi[i] - scalar.pi[i] @ T).max(initial=0.0))
            / pi_scale,
        )
    report.add(
        passing("intertwining", residual=inter)
        if inter <= max(tol, 1e-10)
        else failing("intertwining", residual=inter)
    )

    t_rank = int(np.linalg.matrix_rank(T, tol=1e-10)) if T.size else 0
    report.add(
        passing(
            "rank_comparison",
            details={
                "scalar_dim": scalar.rep_dim,
                "rep_dim": r,
                "t_rank": t_rank,
                "surjective": t_rank == scalar.rep_dim,
            },
        )
    )

    residuals = {
        "null_inclusion": ninc,
        "well_defined": wd,
        "intertwining": inter,
    }
    return IntertwinerResult(
        T=T, scalar=scalar, bound=bound, residuals=residuals, report=report
    )
