"""Positive C*-valued sesquilinear maps and the structure they induce.

A map is stored by its Gram tensor G[i][j] = Phi(e_i, e_j), one codomain
element per ordered basis pair, with the fixed convention

    Phi(sum_i a_i e_i, sum_j b_j e_j) = sum_ij a_i conj(b_j) G[i][j]

(linear in the first slot, antilinear in the second).  Everything in this
module either evaluates the map, certifies one of its inequalities, or
builds the quotient by its null space.

Positivity has two grades: a block-PSD certificate (the big matrix whose
(i, j) block is Phi(e_j, e_i) is a Gram matrix for maps of inner-product
type; PSD implies positivity but not conversely) and a seeded randomized
sweep.  A certificate failure is inconclusive and falls through to the
sweep.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cstar import AlgebraElement, CStarAlgebra, is_positive, op_norm
from .errors import (
    ClosureError,
    PreconditionError,
    StructureError,
)
from .quasi import QuasiElement, QuasiStarAlgebra, mod_mult
from .reporting import CheckResult, Report, failing, passing, skipped
from .sampling import complex_normal, unit_vectors

DEFAULT_TOL = 1e-9
DEFAULT_POSITIVITY_SAMPLES = 10_000
DEFAULT_SAMPLES = 1_000

CERT_BLOCK_PSD = "block-PSD"
CERT_SAMPLED = "sampled"
CERT_STRUCTURAL = "structural"


@dataclass
class MapFlags:
    """Verified-property bookkeeping attached to a map."""

    positivity: str | None = None
    invariant: bool | None = None
    c_linear: bool | None = None
    faithful: bool | None = None
    gammas: dict[int, float] | None = None

    def to_dict(self) -> dict:
        out = {}
        if self.positivity is not None:
            out["positivity_certificate"] = self.positivity
        if self.invariant is not None:
            out["invariant"] = self.invariant
        if self.c_linear is not None:
            out["c_linear"] = self.c_linear
        if self.faithful is not None:
            out["faithful"] = self.faithful
        if self.gammas is not None:
            out["gammas"] = {str(k): float(v) for k, v in self.gammas.items()}
        return out

    @staticmethod
    def from_dict(data: dict) -> "MapFlags":
        gammas = data.get("gammas")
        return MapFlags(
            positivity=data.get("positivity_certificate"),
            invariant=data.get("invariant"),
            c_linear=data.get("c_linear"),
            faithful=data.get("faithful"),
            gammas={int(k): float(v) for k, v in gammas.items()} if gammas else None,
        )


@dataclass(eq=False)
class SesquiMap:
    """Gram-tensor realization of a C*-valued sesquilinear map.

    ``domain`` may be None for maps on a bare coefficient space (the
    vector-space case); operations that need module structure then refuse.
    ``gram`` holds one array per codomain block, shaped (d, d, n_k, n_k).
    """

    codomain: CStarAlgebra
    gram: tuple[np.ndarray, ...]
    domain: QuasiStarAlgebra | None = None
    flags: MapFlags = field(default_factory=MapFlags)

    def __post_init__(self):
        if len(self.gram) != len(self.codomain.block_dims):
            raise StructureError("one gram array per codomain block required")
        d = self.gram[0].shape[0] if self.gram else 0
        arrays = []
        for g, n in zip(self.gram, self.codomain.block_dims):
            g = np.asarray(g, dtype=complex)
            if g.shape != (d, d, n, n):
                raise StructureError(
                    f"gram block of shape {g.shape}, expected {(d, d, n, n)}"
                )
            g.setflags(write=False)
            arrays.append(g)
        self.gram = tuple(arrays)
        if self.domain is not None and self.domain.dim != d:
            raise StructureError("gram size does not match domain dimension")

    # -- basic geometry ------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.gram[0].shape[0]

    @property
    def scale(self) -> float:
        return max(
            (float(np.abs(g).max(initial=0.0)) for g in self.gram), default=0.0
        )

    def _coeffs(self, a) -> np.ndarray:
        if isinstance(a, QuasiElement):
            return a.coeffs
        c = np.asarray(a, dtype=complex).ravel()
        if c.shape != (self.dim,):
            raise StructureError(f"coefficient length {c.shape[0]}, expected {self.dim}")
        return c

    def __call__(self, a, b) -> AlgebraElement:
        return evaluate(self, a, b)

    def eval_batch(self, A: np.ndarray, B: np.ndarray) -> list[np.ndarray]:
        """Phi on row-paired batches of coefficients; one (N, n, n) per block."""
        return [np.einsum("ni,nj,ijpq->npq", A, B.conj(), g) for g in self.gram]

    def norm_batch(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        """||Phi(a_r, b_r)||_C for each row pair."""
        norms = np.zeros(A.shape[0])
        for vals in self.eval_batch(A, B):
            sv = np.linalg.svd(vals, compute_uv=False)
            norms = np.maximum(norms, sv[:, 0] if sv.size else 0.0)
        return norms

    def diag_norm_batch(self, A: np.ndarray) -> np.ndarray:
        return self.norm_batch(A, A)

    def element_at(self, i: int, j: int) -> AlgebraElement:
        return self.codomain.element([g[i, j] for g in self.gram])

    def require_domain(self) -> QuasiStarAlgebra:
        if self.domain is None:
            raise PreconditionError("operation needs a quasi *-algebra domain")
        return self.domain

    # -- constructors ----------------------------------------------------------

    @staticmethod
    def from_elements(
        codomain: CStarAlgebra,
        elements,
        domain: QuasiStarAlgebra | None = None,
        flags: MapFlags | None = None,
    ) -> "SesquiMap":
        d = len(elements)
        gram = []
        for k, n in enumerate(codomain.block_dims):
            g = np.zeros((d, d, n, n), dtype=complex)
            for i in range(d):
                for j in range(d):
                    g[i, j] = elements[i][j].blocks[k]
            gram.append(g)
        return SesquiMap(
            codomain=codomain, gram=tuple(gram), domain=domain, flags=flags or MapFlags()
        )

    def compose_state(self, theta) -> "SesquiMap":
        """Scalar-valued map theta(Phi(., .)) into the one-dimensional algebra."""
        scalar = CStarAlgebra((1,))
        g = np.zeros((self.dim, self.dim), dtype=complex)
        for rho, block in zip(theta.densities, self.gram):
            g += np.einsum("pq,ijqp->ij", rho, block)
        return SesquiMap(
            codomain=scalar,
            gram=(g[:, :, None, None],),
            domain=self.domain,
            flags=MapFlags(invariant=self.flags.invariant),
        )


def evaluate(phi: SesquiMap, a, b) -> AlgebraElement:
    """Phi(a, b) following the fixed Gram convention."""
    ca, cb = phi._coeffs(a), phi._coeffs(b)
    blocks = [np.einsum("i,j,ijpq->pq", ca, cb.conj(), g) for g in phi.gram]
    return phi.codomain.element(blocks)


def hermitian_symmetry_residual(phi: SesquiMap) -> float:
    """max_ij ||G[j][i] - G[i][j]^*|| relative to the gram scale."""
    worst = 0.0
    for g in phi.gram:
        swapped = np.conj(np.swapaxes(g.transpose(1, 0, 2, 3), 2, 3))
        worst = max(worst, float(np.abs(g - swapped).max(initial=0.0)))
    return worst / max(phi.scale, 1e-300)


def check_hermitian_symmetry(phi: SesquiMap, tol: float = 1e-12) -> CheckResult:
    worst_pair, worst = None, 0.0
    for g in phi.gram:
        swapped = np.conj(np.swapaxes(g.transpose(1, 0, 2, 3), 2, 3))
        gap = np.abs(g - swapped).max(axis=(2, 3))
        idx = np.unravel_index(int(gap.argmax()), gap.shape)
        if gap[idx] > worst:
            worst, worst_pair = float(gap[idx]), (int(idx[0]), int(idx[1]))
    rel = worst / max(phi.scale, 1e-300)
    if rel > tol:
        return failing(
            "hermitian_symmetry", residual=rel, witness={"pair": worst_pair}
        )
    return passing("hermitian_symmetry", residual=rel)


def certificate_matrices(phi: SesquiMap) -> list[np.ndarray]:
    """Per codomain block, the big matrix whose (i, j) block is Phi(e_j, e_i).

    For maps of Gram type this is literally a Gram matrix; its positivity
    implies positivity of the map (plug in xi_i = a_i v).
    """
    out = []
    for g, n in zip(phi.gram, phi.codomain.block_dims):
        d = phi.dim
        big = g.transpose(1, 0, 2, 3).transpose(0, 2, 1, 3).reshape(d * n, d * n)
        out.append(big)
    return out


def check_positivity(
    phi: SesquiMap,
    mode: str = "certificate",
    n_samples: int = DEFAULT_POSITIVITY_SAMPLES,
    rng=None,
    tol: float = DEFAULT_TOL,
) -> CheckResult:
    """Positivity of Phi(a, a) for all a.

    ``certificate`` tries block-PSD first (sufficient; a failure is
    inconclusive and falls through to sampling).  ``sampled`` checks the
    standard basis directions plus seeded random coefficients and reports a
    witness on failure.
    """
    if mode not in ("certificate", "sampled"):
        raise PreconditionError(f"unknown positivity mode {mode!r}")
    scale = phi.scale
    if mode == "certificate":
        min_eig = 0.0
        certified = True
        for big in certificate_matrices(phi):
            herm_gap = float(np.abs(big - big.conj().T).max(initial=0.0))
            if herm_gap > 1e-10 * max(scale, 1e-300):
                certified = False
                break
            if big.size:
                low = float(np.linalg.eigvalsh(0.5 * (big + big.conj().T)).min())
                min_eig = min(min_eig, low)
                if low < -tol * max(scale, 1e-300):
                    certified = False
                    break
        if certified:
            return passing(
                "positivity",
                residual=abs(min(min_eig, 0.0)) / max(scale, 1e-300),
                details={"mode": CERT_BLOCK_PSD},
            )
        # fall through

    if rng is None:
        rng = np.random.default_rng(0)
    d = phi.dim
    samples = np.concatenate(
        [np.eye(d, dtype=complex), unit_vectors(rng, n_samples, d)], axis=0
    )
    # Basis directions come first so the simplest witness is reported.
    for row in range(samples.shape[0]):
        value = evaluate(phi, samples[row], samples[row])
        if not is_positive(value, tol=tol, scale=scale):
            low = min(
                float(np.linalg.eigvalsh(0.5 * (b + b.conj().T)).min())
                for b in value.blocks
                if b.size
            )
            return failing(
                "positivity",
                residual=-low / max(scale, 1e-300),
                witness={"coefficients": samples[row], "min_eigenvalue": low},
                details={"mode": CERT_SAMPLED},
            )
    return passing("positivity", details={"mode": CERT_SAMPLED, "n_samples": n_samples})


def check_cs(
    phi: SesquiMap,
    n_samples: int = DEFAULT_SAMPLES,
    rng=None,
    tol: float = DEFAULT_TOL,
) -> Report:
    """Cauchy-Schwarz sweep.

    Always checks the factor-2 inequality
    ||Phi(a,b)||^2 <= 4 ||Phi(a,a)|| ||Phi(b,b)||; adds the factor-1
    inequality when the codomain is commutative or the map is flagged
    C-linear.  Worst observed ratios are recorded; a violation carries the
    offending pair as witness (it signals a positivity or arithmetic bug).
    """
    if rng is None:
        rng = np.random.default_rng(0)
    report = Report(environment={"n_samples": n_samples, "tol": tol})
    d = phi.dim
    A = unit_vectors(rng, n_samples, d)
    B = unit_vectors(rng, n_samples, d)
    num = phi.norm_batch(A, B)
    da = phi.diag_norm_batch(A)
    db = phi.diag_norm_batch(B)
    geo = np.sqrt(da * db)
    floor = 1e-14 * max(phi.scale, 1e-300)
    live = geo > floor

    def sweep(name: str, factor: float) -> CheckResult:
        ratios = num[live] / (factor * geo[live])
        worst = float(ratios.max()) if ratios.size else 0.0
        # Pairs with vanishing diagonal must have vanishing numerator too
        # (up to einsum roundoff at the map's scale).
        degenerate_bad = bool(np.any(num[~live] > 1e-10 * max(phi.scale, 1e-300)))
        if worst > 1.0 + tol or degenerate_bad:
            idx = int(np.argmax(num / np.maximum(factor * geo, floor)))
            return failing(
                name,
                worst_ratio=worst,
                witness={"a": A[idx], "b": B[idx]},
            )
        return passing(name, worst_ratio=worst)

    report.add(sweep("cauchy_schwarz_factor2", 2.0))
    if phi.codomain.commutative:
        report.add(sweep("cauchy_schwarz_commutative", 1.0))
    if phi.flags.c_linear:
        report.add(sweep("cauchy_schwarz_c_linear", 1.0))
    return report


@dataclass(eq=False)
class PositiveLinearMap:
    """Linear map from the domain model into a C*-algebra, given on the basis."""

    domain: QuasiStarAlgebra
    codomain: CStarAlgebra
    values: tuple[AlgebraElement, ...]

    def __post_init__(self):
        if len(self.values) != self.domain.dim:
            raise StructureError("one value per domain basis element required")
        self.values = tuple(self.values)

    def __call__(self, a) -> AlgebraElement:
        coeffs = a.coeffs if isinstance(a, QuasiElement) else np.asarray(a, complex)
        out = self.codomain.zero()
        for c, v in zip(coeffs, self.values):
            out = out + c * v
        return out

    def of_matrix(self, matrix: np.ndarray, tol: float = DEFAULT_TOL) -> AlgebraElement:
        c, _ = self.domain.coeffs_of(matrix, tol=tol, require=True)
        return self(c)

    @property
    def scale(self) -> float:
        return max((op_norm(v) for v in self.values), default=0.0)


def phi_from_linear_map(omega: PositiveLinearMap, tol: float = DEFAULT_TOL) -> SesquiMap:
    """Gram tensor of Phi(a, b) = omega(b* a) over the domain basis.

    Needs all products e_j^* e_i to stay inside span(A); that is automatic
    when the core spans the ambient space (the *-algebra case).
    """
    Q = omega.domain
    d = Q.dim
    elements = [[None] * d for _ in range(d)]
    for i in range(d):
        for j in range(d):
            prod = Q.basis[j].conj().T @ Q.basis[i]
            elements[i][j] = omega.of_matrix(prod, tol=tol)
    return SesquiMap.from_elements(omega.codomain, elements, domain=Q)


def stinespring_inequality(
    omega: PositiveLinearMap,
    n_samples: int = DEFAULT_SAMPLES,
    rng=None,
    tol: float = DEFAULT_TOL,
) -> CheckResult:
    """4 ||omega(e)|| ||omega(a*a)|| >= ||omega(a)||^2 and ||omega(a*)|| = ||omega(a)||.

    Sampled over core elements of a unital model; a violation is a bug
    signal, reported with the offending coefficients.
    """
    Q = omega.domain
    if Q.unit_coeffs is None:
        raise PreconditionError("Stinespring-type inequality needs a unital model")
    if rng is None:
        rng = np.random.default_rng(0)
    unit_norm = op_norm(omega(Q.unit_coeffs))
    samples = [Q.basis_element(i) for i in Q.a0_indices]
    samples += [Q.random_element(rng, core_only=True) for _ in range(n_samples)]
    scale = max(omega.scale, 1e-300)
    worst_ratio, worst_sym = 0.0, 0.0
    for a in samples:
        mat = a.matrix()
        wa = op_norm(omega.of_matrix(mat, tol=tol))
        wastar = op_norm(omega.of_matrix(mat.conj().T, tol=tol))
        waa = omega.of_matrix(mat.conj().T @ mat, tol=tol)
        if not is_positive(waa, tol=tol, scale=scale * float(np.linalg.norm(mat)) ** 2):
            return failing(
                "stinespring_positive",
                witness={"coefficients": a.coeffs},
                details={"reason": "omega(a*a) not PSD"},
            )
        lhs = 4.0 * unit_norm * op_norm(waa)
        if wa > 0:
            worst_ratio = max(worst_ratio, wa**2 / max(lhs, 1e-300))
        worst_sym = max(worst_sym, abs(wa - wastar) / max(wa, wastar, 1e-300))
        if wa**2 > lhs * (1.0 + tol) + tol * scale**2:
            return failing(
                "stinespring_inequality",
                worst_ratio=wa**2 / max(lhs, 1e-300),
                witness={"coefficients": a.coeffs},
            )
    if worst_sym > tol:
        return failing("stinespring_inequality", residual=worst_sym)
    return passing(
        "stinespring_inequality", worst_ratio=worst_ratio, residual=worst_sym
    )


# -- null space and quotient ---------------------------------------------------


@dataclass(eq=False)
class QuotientSpace:
    """Orthonormal coordinates for A/N_Phi with its C*-valued inner product.

    ``null_basis`` (d, k) and ``rep_basis`` (d, r) have orthonormal columns;
    ``inner`` holds <Lambda(u_alpha), Lambda(u_beta)> per codomain block,
    shaped (r, r, n_k, n_k).
    """

    phi: SesquiMap
    null_basis: np.ndarray
    rep_basis: np.ndarray
    inner: tuple[np.ndarray, ...]

    @property
    def rep_dim(self) -> int:
        return self.rep_basis.shape[1]

    @property
    def null_dim(self) -> int:
        return self.null_basis.shape[1]

    def coords(self, a) -> np.ndarray:
        c = self.phi._coeffs(a)
        return self.rep_basis.conj().T @ c

    def coords_batch(self, C: np.ndarray) -> np.ndarray:
        return C @ self.rep_basis.conj()

    def inner_eval(self, u: np.ndarray, v: np.ndarray) -> AlgebraElement:
        blocks = [np.einsum("a,b,abpq->pq", u, v.conj(), H) for H in self.inner]
        return self.phi.codomain.element(blocks)

    def norm_coords(self, u: np.ndarray) -> float:
        return float(np.sqrt(max(op_norm(self.inner_eval(u, u)), 0.0)))

    def norm_coords_batch(self, U: np.ndarray) -> np.ndarray:
        norms = np.zeros(U.shape[0])
        for H in self.inner:
            vals = np.einsum("na,nb,abpq->npq", U, U.conj(), H)
            sv = np.linalg.svd(vals, compute_uv=False)
            norms = np.maximum(norms, sv[:, 0] if sv.size else 0.0)
        return np.sqrt(np.maximum(norms, 0.0))


def null_space(phi: SesquiMap, tol: float = DEFAULT_TOL) -> QuotientSpace:
    """Kernel of a -> (Phi(a, e_j))_j by SVD with threshold tol * sigma_max.

    Null vectors are re-verified against the definition Phi(v, e_j) = 0
    before acceptance; by the Cauchy-Schwarz mechanism this matches
    {a : Phi(a, a) = 0}.
    """
    d = phi.dim
    stacked = np.concatenate(
        [g.transpose(1, 2, 3, 0).reshape(-1, d) for g in phi.gram], axis=0
    )
    if stacked.size == 0:
        rep = np.zeros((d, 0), dtype=complex)
        null = np.eye(d, dtype=complex)
        return QuotientSpace(phi, null, rep, tuple(
            np.zeros((0, 0, n, n), dtype=complex) for n in phi.codomain.block_dims
        ))
    _, sv, vh = np.linalg.svd(stacked, full_matrices=True)
    sigma_max = sv[0] if sv.size else 0.0
    rank = int(np.sum(sv > tol * max(sigma_max, 1e-300)))
    v = vh.conj().T
    rep, null = v[:, :rank], v[:, rank:]

    # Re-verify the computed kernel against the definition.
    if null.size:
        worst = float(np.abs(stacked @ null).max(initial=0.0))
        if worst > 100.0 * tol * max(sigma_max, 1e-300):
            raise StructureError(
                f"null-space re-verification failed: residual {worst:.3e}"
            )
    inner = tuple(
        np.einsum("ia,jb,ijpq->abpq", rep, rep.conj(), g) for g in phi.gram
    )
    return QuotientSpace(phi, null, rep, inner)


def quasi_norm(qs: QuotientSpace, a) -> float:
    """||Lambda(a)||_Phi = ||Phi(a, a)||^(1/2)."""
    value = evaluate(qs.phi, a, a)
    return float(np.sqrt(max(op_norm(value), 0.0)))


def quasi_triangle_check(
    qs: QuotientSpace,
    n_samples: int = DEFAULT_SAMPLES,
    rng=None,
    tol: float = DEFAULT_TOL,
) -> CheckResult:
    """Homogeneity plus the sqrt(2)-quasi-triangle inequality on samples.

    Reports the worst ratio ||a+b|| / (||a|| + ||b||); C-linear maps carry a
    true norm, so their observed worst ratio stays at or below one.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    d = qs.phi.dim
    A = unit_vectors(rng, n_samples, d)
    B = unit_vectors(rng, n_samples, d)
    na = qs.phi.diag_norm_batch(A) ** 0.5
    nb = qs.phi.diag_norm_batch(B) ** 0.5
    nsum = qs.phi.diag_norm_batch(A + B) ** 0.5
    floor = 1e-10 * np.sqrt(max(qs.phi.scale, 1e-300))
    live = (na + nb) > floor
    ratios = nsum[live] / (na + nb)[live]
    worst = float(ratios.max()) if ratios.size else 0.0

    hom = 0.0
    alphas = 1.0 + rng.random(min(n_samples, 64)) * 3.0
    for row, alpha in enumerate(alphas):
        base = na[row]
        scaled = quasi_norm(qs, alpha * A[row])
        hom = max(hom, abs(scaled - alpha * base) / max(alpha * base, 1e-300))

    limit = np.sqrt(2.0) * (1.0 + tol)
    if worst > limit or hom > tol:
        idx = int(np.argmax(np.where(live, nsum / np.maximum(na + nb, floor), 0.0)))
        return failing(
            "quasi_triangle",
            worst_ratio=worst,
            residual=hom,
            witness={"a": A[idx], "b": B[idx]},
        )
    return passing("quasi_triangle", worst_ratio=worst, residual=hom)


# -- invariance, module structure, admissibility, density ----------------------


def check_invariance(phi: SesquiMap, tol: float = DEFAULT_TOL) -> CheckResult:
    """Condition (I): Phi(a c, d) = Phi(c, a* d) on basis triples.

    a runs over the ambient basis, c and d over the core; this is the
    algebraic hook that makes the representation construction possible.
    """
    Q = phi.require_domain()
    scale = max(phi.scale, 1e-300)
    P = Q.left_mult_tensor  # (d, d0, d): coeffs of e_i @ core_x
    S = Q.involution_coeffs  # (d, d): coeffs of e_i^*
    worst, witness = 0.0, None
    for i in range(Q.dim):
        star_i = S[i]
        for cpos, cidx in enumerate(Q.a0_indices):
            ac = P[i, cpos]
            for dpos, didx in enumerate(Q.a0_indices):
                # a* d = sum_k star_i[k] e_k d
                astar_d = np.einsum("k,kl->l", star_i, P[:, dpos, :])
                ed = np.zeros(Q.dim, dtype=complex)
                ed[didx] = 1.0
                ec = np.zeros(Q.dim, dtype=complex)
                ec[cidx] = 1.0
                lhs = evaluate(phi, ac, ed)
                rhs = evaluate(phi, ec, astar_d)
                gap = op_norm(lhs - rhs)
                if gap > worst:
                    worst, witness = gap, (i, int(cidx), int(didx))
    rel = worst / scale
    if rel > tol:
        return failing("invariance", residual=rel, witness={"triple": witness})
    return passing("invariance", residual=rel)


@dataclass(frozen=True, eq=False)
class RightAction:
    """Right action of the codomain on the ambient space.

    The codomain embeds into M_m through one isometry per block
    (``None`` makes a block act as zero); a . x is realized as
    matrix(a) @ embed(x).  Cross-orthogonal isometries keep the embedding
    multiplicative and *-preserving.
    """

    domain: QuasiStarAlgebra
    codomain: CStarAlgebra
    isometries: tuple[np.ndarray | None, ...]

    def __post_init__(self):
        m = self.domain.ambient_dim
        mats = []
        for J, n in zip(self.isometries, self.codomain.block_dims, strict=True):
            if J is None:
                mats.append(None)
                continue
            J = np.array(J, dtype=complex)
            if J.shape != (m, n):
                raise StructureError(f"isometry of shape {J.shape}, expected {(m, n)}")
            J.setflags(write=False)
            mats.append(J)
        object.__setattr__(self, "isometries", tuple(mats))
        live = [J for J in mats if J is not None]
        for a in range(len(live)):
            for b in range(len(live)):
                gram = live[a].conj().T @ live[b]
                want = np.eye(gram.shape[0]) if a == b else 0.0
                if gram.shape[0] == gram.shape[1] or a != b:
                    target = want if a == b else np.zeros_like(gram)
                    if np.abs(gram - target).max(initial=0.0) > 1e-10:
                        raise StructureError(
                            "action isometries are not cross-orthonormal"
                        )

    def embed(self, z: AlgebraElement) -> np.ndarray:
        m = self.domain.ambient_dim
        out = np.zeros((m, m), dtype=complex)
        for J, block in zip(self.isometries, z.blocks):
            if J is not None:
                out += J @ block @ J.conj().T
        return out

    def act(self, a: QuasiElement, z: AlgebraElement, tol: float = DEFAULT_TOL) -> QuasiElement:
        prod = a.matrix() @ self.embed(z)
        c, _ = self.domain.coeffs_of(prod, tol=tol, require=True)
        return self.domain.element(c)

    def act_coeffs(self, coeffs: np.ndarray, z: AlgebraElement, tol: float = DEFAULT_TOL) -> np.ndarray:
        prod = self.domain.matrix(coeffs) @ self.embed(z)
        c, _ = self.domain.coeffs_of(prod, tol=tol, require=True)
        return c


def canonical_right_action(Q: QuasiStarAlgebra, C: CStarAlgebra) -> RightAction:
    """Block-diagonal embedding when the ambient size equals sum n_k."""
    if Q.ambient_dim != C.realization_dim:
        raise PreconditionError(
            "canonical action needs ambient dim == codomain realization dim"
        )
    isometries, off = [], 0
    m = Q.ambient_dim
    for n in C.block_dims:
        J = np.zeros((m, n), dtype=complex)
        J[off : off + n, :] = np.eye(n)
        isometries.append(J)
        off += n
    return RightAction(domain=Q, codomain=C, isometries=tuple(isometries))


def check_c_linearity(
    phi: SesquiMap,
    action: RightAction,
    n_samples: int = 64,
    rng=None,
    tol: float = DEFAULT_TOL,
) -> CheckResult:
    """Module linearity Phi(a x, b) = Phi(a, b) x on basis triples.

    The convention follows the canonical inner-product example b* a with
    right multiplication (action in the slot the map is linear in).  When
    the identity holds, the module Cauchy-Schwarz inequality
    Phi(a,b) Phi(b,a) <= ||Phi(a,a)|| Phi(b,b) is asserted on samples.
    """
    Q = phi.require_domain()
    if rng is None:
        rng = np.random.default_rng(0)
    scale = max(phi.scale, 1e-300)
    worst, witness = 0.0, None
    cod_basis = phi.codomain.basis()
    for i in range(Q.dim):
        a = Q.basis_element(i)
        for j in range(Q.dim):
            ej = _unit(Q.dim, j)
            base = evaluate(phi, _unit(Q.dim, i), ej)
            for x in cod_basis:
                try:
                    ax = action.act(a, x, tol=tol)
                except ClosureError as exc:
                    raise PreconditionError(
                        f"action does not close on the model: {exc}"
                    ) from exc
                lhs = evaluate(phi, ax.coeffs, ej)
                rhs = base * x
                gap = op_norm(lhs - rhs)
                if gap > worst:
                    worst, witness = gap, (i, j)
    rel = worst / scale
    if rel > tol:
        return failing("c_linearity", residual=rel, witness={"pair": witness})

    for _ in range(n_samples):
        a = unit_vectors(rng, 1, Q.dim)[0]
        b = unit_vectors(rng, 1, Q.dim)[0]
        pab = evaluate(phi, a, b)
        pba = evaluate(phi, b, a)
        bound = op_norm(evaluate(phi, a, a)) * evaluate(phi, b, b)
        diff = bound - pab * pba
        if not is_positive(diff, tol=tol, scale=scale):
            low = min(
                float(np.linalg.eigvalsh(0.5 * (blk + blk.conj().T)).min())
                for blk in diff.blocks
            )
            return failing(
                "c_linearity",
                residual=-low / scale,
                witness={"a": a, "b": b},
                details={"reason": "module Cauchy-Schwarz violated"},
            )
    return passing("c_linearity", residual=rel, details={"module_cs": "verified"})


def _unit(d: int, i: int) -> np.ndarray:
    e = np.zeros(d, dtype=complex)
    e[i] = 1.0
    return e


def check_module_bound(
    phi: SesquiMap,
    action: RightAction,
    n_samples: int = DEFAULT_SAMPLES,
    rng=None,
    tol: float = DEFAULT_TOL,
) -> CheckResult:
    """||Phi(ax, ax)|| <= ||Phi(a,a)|| ||x||^2 on samples.

    When the bound holds, additionally asserts that the null space is
    action-invariant and that the induced coset bound
    ||Lambda(ax)|| <= ||Lambda(a)|| ||x|| holds; a violation means the map
    does not induce a module quotient and is reported with its witness.
    """
    Q = phi.require_domain()
    if rng is None:
        rng = np.random.default_rng(0)
    scale = max(phi.scale, 1e-300)
    worst = 0.0
    elements = [phi.codomain.unit()] + [
        phi.codomain.random_element(rng) for _ in range(max(n_samples // 8, 4))
    ]
    coeffs = unit_vectors(rng, n_samples, Q.dim)
    for x in elements:
        xnorm = op_norm(x)
        for row in range(min(n_samples, coeffs.shape[0])):
            a = coeffs[row]
            ax = action.act_coeffs(a, x, tol=tol)
            lhs = op_norm(evaluate(phi, ax, ax))
            rhs = op_norm(evaluate(phi, a, a)) * xnorm**2
            if lhs > rhs * (1.0 + tol) + tol * scale:
                return failing(
                    "module_bound",
                    worst_ratio=lhs / max(rhs, 1e-300),
                    witness={"a": a, "x_norm": xnorm},
                )
            worst = max(worst, lhs / max(rhs, 1e-300))

    qs = null_space(phi, tol=tol)
    null_worst = 0.0
    for col in range(qs.null_dim):
        v = qs.null_basis[:, col]
        for x in elements:
            vx = action.act_coeffs(v, x, tol=tol)
            null_worst = max(null_worst, op_norm(evaluate(phi, vx, vx)) / scale)
    if null_worst > 10.0 * tol:
        return failing(
            "module_bound",
            residual=null_worst,
            details={"reason": "null space not action-invariant"},
        )
    return passing(
        "module_bound", worst_ratio=worst, residual=null_worst
    )


def admissibility_constant(
    phi: SesquiMap,
    a_coeffs: np.ndarray,
    n_samples: int = 256,
    rng=None,
    tol: float = DEFAULT_TOL,
) -> float:
    """gamma_a: observed sup of ||Phi(ac, ac)|| / ||Phi(c, c)|| over the core.

    Swept over the core basis, the unit, and seeded random core directions;
    candidates inside the null space are excluded (the ratio is not defined
    there).  Finite for every a at finite dimension.
    """
    Q = phi.require_domain()
    if rng is None:
        rng = np.random.default_rng(0)
    P = Q.left_mult_tensor
    a = np.asarray(a_coeffs, dtype=complex)
    candidates = [
        _unit(Q.a0_dim, pos) for pos in range(Q.a0_dim)
    ]
    if Q.unit_coeffs is not None:
        core_unit, residual = Q.core_expansion(Q.matrix(Q.unit_coeffs))
        if residual <= tol * max(Q.basis_scale, 1.0):
            candidates.append(core_unit)
    candidates += list(unit_vectors(rng, n_samples, Q.a0_dim))
    floor = tol * max(phi.scale, 1e-300)
    gamma = 0.0
    for core_c in candidates:
        c_full = np.zeros(Q.dim, dtype=complex)
        c_full[list(Q.a0_indices)] = core_c
        denom = op_norm(evaluate(phi, c_full, c_full))
        if denom <= floor:
            continue
        ac = np.einsum("i,ixl,x->l", a, P, core_c)
        gamma = max(gamma, op_norm(evaluate(phi, ac, ac)) / denom)
    return gamma


def check_admissibility(
    phi: SesquiMap,
    n_samples: int = 256,
    rng=None,
    tol: float = DEFAULT_TOL,
) -> tuple[dict[int, float], CheckResult]:
    """Per-basis admissibility constants; finiteness makes the map admissible.

    These constants bound the representation operators downstream:
    ||Pi(a)|| <= sqrt(gamma_a).
    """
    Q = phi.require_domain()
    if rng is None:
        rng = np.random.default_rng(0)
    gammas = {}
    for i in range(Q.dim):
        gammas[i] = admissibility_constant(
            phi, _unit(Q.dim, i), n_samples=n_samples, rng=rng, tol=tol
        )
    phi.flags.gammas = gammas
    finite = all(np.isfinite(g) for g in gammas.values())
    result = passing("admissibility", details={"gammas": {str(k): v for k, v in gammas.items()}})
    if not finite:
        result = failing("admissibility")
    return gammas, result


def density_ranks(phi: SesquiMap, tol: float = DEFAULT_TOL) -> tuple[int, int]:
    """(dim Lambda(span A0), dim Lambda(span A)) by rank tests."""
    Q = phi.require_domain()
    qs = null_space(phi, tol=tol)
    if qs.rep_dim == 0:
        return 0, 0
    repH = qs.rep_basis.conj().T
    full_rank = qs.rep_dim
    if not Q.a0_indices:
        return 0, full_rank
    core_cols = repH[:, list(Q.a0_indices)]
    sv = np.linalg.svd(core_cols, compute_uv=False)
    core_rank = int(np.sum(sv > tol * max(sv[0] if sv.size else 0.0, 1e-300)))
    return core_rank, full_rank


def density_check(phi: SesquiMap, tol: float = DEFAULT_TOL) -> bool:
    """Lambda(A0) dense in the quotient; at finite dimension a rank equality.

    True classifies the map into the representable class.
    """
    core_rank, full_rank = density_ranks(phi, tol=tol)
    return core_rank == full_rank


# -- standard check suite -------------------------------------------------------


def run_suite(
    phi: SesquiMap,
    suite: list[str],
    rng,
    n_samples: int = DEFAULT_SAMPLES,
    tol: float = DEFAULT_TOL,
) -> Report:
    """Run the named checks; unknown structure downgrades a check to skip."""
    report = Report()
    for name in suite:
        if name == "symmetry":
            report.add(check_hermitian_symmetry(phi))
        elif name == "positivity":
            report.add(
                check_positivity(phi, n_samples=n_samples, rng=rng, tol=tol)
            )
        elif name == "cs":
            report.extend(check_cs(phi, n_samples=n_samples, rng=rng, tol=tol).checks)
        elif name == "invariance":
            if phi.domain is None:
                report.add(skipped("invariance", "map has no quasi *-algebra domain"))
            else:
                report.add(check_invariance(phi, tol=tol))
        elif name == "module_bound":
            # The module bound is a hypothesis about maps that declare
            # compatibility with the canonical right action, not a theorem
            # for arbitrary maps; undeclared maps skip instead of failing.
            if not phi.flags.c_linear:
                report.add(
                    skipped("module_bound", "map does not declare module compatibility")
                )
            else:
                try:
                    action = canonical_right_action(phi.require_domain(), phi.codomain)
                    report.add(
                        check_module_bound(
                            phi, action, n_samples=min(n_samples, 256), rng=rng, tol=tol
                        )
                    )
                except (PreconditionError, ClosureError) as exc:
                    report.add(skipped("module_bound", str(exc)))
        elif name == "admissibility":
            if phi.domain is None:
                report.add(skipped("admissibility", "map has no quasi *-algebra domain"))
            else:
                _, result = check_admissibility(
                    phi, n_samples=min(n_samples, 256), rng=rng, tol=tol
                )
                report.add(result)
        elif name == "density":
            if phi.domain is None:
                report.add(skipped("density", "map has no quasi *-algebra domain"))
            else:
                core_rank, full_rank = density_ranks(phi, tol=tol)
                ok = core_rank == full_rank
                report.add(
                    CheckResult(
                        "density",
                        "pass" if ok else "fail",
                        details={"core_rank": core_rank, "full_rank": full_rank},
                    )
                )
        else:
            raise PreconditionError(f"unknown check {name!r}")
    return report


STANDARD_SUITE = (
    "positivity",
    "symmetry",
    "cs",
    "invariance",
    "module_bound",
    "admissibility",
    "density",
)


# -- random map generators (fuzzing and sweeps) ----------------------------------


def random_certificate_map(
    rng,
    dim: int,
    codomain: CStarAlgebra,
    domain: QuasiStarAlgebra | None = None,
) -> SesquiMap:
    """Certified-positive map: each block certificate matrix is F* F."""
    gram = []
    for n in codomain.block_dims:
        k = dim * n
        f = complex_normal(rng, (k, k))
        big = f.conj().T @ f / k
        # big[(i), (j)] = Phi(e_j, e_i); unpack to G[i][j].
        blocks = big.reshape(dim, n, dim, n).transpose(0, 2, 1, 3)
        gram.append(blocks.transpose(1, 0, 2, 3).copy())
    return SesquiMap(
        codomain=codomain,
        gram=tuple(gram),
        domain=domain,
        flags=MapFlags(positivity=CERT_BLOCK_PSD),
    )


def random_kraus_linear_map(
    rng,
    Q: QuasiStarAlgebra,
    codomain: CStarAlgebra,
    n_kraus: int = 2,
) -> PositiveLinearMap:
    """omega(a) = sum_r V_r* a V_r blockwise: positive by construction."""
    m = Q.ambient_dim
    factors = [
        [complex_normal(rng, (m, n)) / np.sqrt(m * n_kraus) for _ in range(n_kraus)]
        for n in codomain.block_dims
    ]
    values = []
    for b in Q.basis:
        blocks = [
            sum(V.conj().T @ b @ V for V in per_block) for per_block in factors
        ]
        values.append(codomain.element(blocks))
    return PositiveLinearMap(domain=Q, codomain=codomain, values=tuple(values))


def random_invariant_map(
    rng,
    Q: QuasiStarAlgebra,
    codomain: CStarAlgebra,
    n_kraus: int = 2,
) -> SesquiMap:
    """Invariant positive map of the form Phi(a, b) = omega(b* a)."""
    omega = random_kraus_linear_map(rng, Q, codomain, n_kraus=n_kraus)
    phi = phi_from_linear_map(omega)
    phi.flags.invariant = True
    return phi


def compression_map(
    Q: QuasiStarAlgebra, isometry: np.ndarray
) -> tuple[SesquiMap, RightAction]:
    """Phi(a, b) = J* b* a J into M_n with the compressed right action.

    The flagship module-linear family: positivity is Gram-structural and
    module linearity holds exactly.
    """
    m, n = isometry.shape
    if m != Q.ambient_dim:
        raise StructureError("isometry rows must match the ambient dimension")
    codomain = CStarAlgebra((n,))
    J = np.asarray(isometry, dtype=complex)
    elements = []
    for i in range(Q.dim):
        row = []
        for j in range(Q.dim):
            row.append(
                codomain.element([J.conj().T @ Q.basis[j].conj().T @ Q.basis[i] @ J])
            )
        elements.append(row)
    phi = SesquiMap.from_elements(codomain, elements, domain=Q)
    phi.flags.positivity = CERT_BLOCK_PSD
    phi.flags.invariant = True
    phi.flags.c_linear = True
    action = RightAction(domain=Q, codomain=codomain, isometries=(J,))
    return phi, action
