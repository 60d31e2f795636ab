"""Desk-scale models from noncommutative integration.

The ambient space is M_m with the normalized trace rho = tr/m (a faithful
finite trace), carrying the Schatten-p norm against rho while the core
keeps the operator norm: the standard two-norm picture of an L^p space
over its bounded part.  On top of it:

* the inner-product map b* a on a matrix algebra,
* trace maps (X, Y) -> rho(X f_t(W) Y*) into a grid algebra, where
  f_t(s) = min(s, t) runs over cutoffs in [0, ||W||],
* weak operator-valued integrals of the same family against a PSD curve
  A_t, discretized by composite trapezoid quadrature,
* series sum_n x_n Phi_n(., .) x_n* of such maps, and
* the associated positive linear maps feeding the bounded-functional
  construction.

Each factory asserts the inequalities that make its map continuous and
representable (Lipschitz in the cutoff, the operator bounds, positivity),
evaluated at the discretized objects; the check functions are exposed for
heavier sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .cstar import (
    AlgebraElement,
    CStarAlgebra,
    make_grid_algebra,
    op_norm,
)
from .errors import DomainError, GnslabError, PreconditionError, StructureError
from .quasi import QuasiStarAlgebra, schatten_model
from .reporting import CheckResult, failing, passing
from .sampling import complex_normal, random_psd
from .sesq import (
    CERT_BLOCK_PSD,
    CERT_STRUCTURAL,
    MapFlags,
    PositiveLinearMap,
    SesquiMap,
)

DEFAULT_TOL = 1e-9
SUPPORTED_EXPONENTS = (2.0, 4.0)


@dataclass(frozen=True, eq=False)
class TraceAlgebra:
    """M_m with the normalized trace and a Schatten-p ambient norm.

    rho = tr/m is a normal faithful finite trace with rho(I) = 1; the
    ambient norm is ||X||_p = rho(|X|^p)^(1/p) and the core norm is the
    operator norm.
    """

    m: int
    p: float = 2.0

    def __post_init__(self):
        if self.m < 1:
            raise DomainError("matrix size must be positive")
        if float(self.p) not in SUPPORTED_EXPONENTS:
            raise DomainError(f"exponent p={self.p} not supported; use one of {SUPPORTED_EXPONENTS}")
        object.__setattr__(self, "p", float(self.p))

    def rho(self, X: np.ndarray) -> complex:
        return complex(np.trace(X) / self.m)

    def norm_p(self, X: np.ndarray) -> float:
        sv = np.linalg.svd(X, compute_uv=False)
        return float(np.mean(sv**self.p) ** (1.0 / self.p))

    def norm_op(self, X: np.ndarray) -> float:
        sv = np.linalg.svd(X, compute_uv=False)
        return float(sv[0]) if sv.size else 0.0

    @cached_property
    def quasi(self) -> QuasiStarAlgebra:
        return schatten_model(self.m, p=self.p)

    def coeffs(self, X: np.ndarray) -> np.ndarray:
        """Coefficients over the matrix-unit basis (row-major ravel)."""
        X = np.asarray(X, dtype=complex)
        if X.shape != (self.m, self.m):
            raise StructureError(f"expected {self.m}x{self.m} matrix")
        return X.ravel()


def _require_psd(W: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    W = np.asarray(W, dtype=complex)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise StructureError("weight must be a square matrix")
    herm_gap = np.abs(W - W.conj().T).max(initial=0.0)
    scale = max(np.abs(W).max(initial=0.0), 1.0)
    if herm_gap > tol * scale:
        raise PreconditionError("weight matrix is not hermitian")
    if W.size and float(np.linalg.eigvalsh(0.5 * (W + W.conj().T)).min()) < -tol * scale:
        raise PreconditionError("weight matrix is not PSD")
    return 0.5 * (W + W.conj().T)


def min_cutoff_family(W: np.ndarray, n_grid: int) -> tuple[np.ndarray, np.ndarray]:
    """Grid t_0..t_{N-1} on [0, ||W||] and the PSD family f_{t_k}(W).

    f_t applies s -> min(s, t) on the spectrum; the family is 1-Lipschitz
    in t uniformly on the spectrum.
    """
    if n_grid < 2:
        raise DomainError("need at least 2 grid points")
    W = _require_psd(W)
    vals, vecs = np.linalg.eigh(W)
    norm_w = float(max(vals.max(initial=0.0), 0.0))
    grid = np.linspace(0.0, norm_w, n_grid)
    family = np.stack(
        [(vecs * np.minimum(vals, t)) @ vecs.conj().T for t in grid], axis=0
    )
    return grid, family


def trapezoid_weights(grid: np.ndarray) -> np.ndarray:
    if len(grid) < 2:
        raise DomainError("quadrature needs at least 2 points")
    dt = float(grid[1] - grid[0])
    w = np.full(len(grid), dt)
    w[0] = w[-1] = dt / 2.0
    return w


# -- the inner-product map -------------------------------------------------------


def right_mult_domain(C: CStarAlgebra) -> QuasiStarAlgebra:
    """Block-diagonal matrix model of the algebra acting on itself."""
    m = C.realization_dim
    basis = tuple(b.block_diag() for b in C.basis())
    unit = np.zeros(len(basis), dtype=complex)
    for i, (k, p, q) in enumerate(C.basis_labels()):
        if p == q:
            unit[i] = 1.0
    from .quasi import OPERATOR, NormSpec

    return QuasiStarAlgebra(
        ambient_dim=m,
        basis=basis,
        a0_indices=tuple(range(len(basis))),
        unit_coeffs=unit,
        norm_a=NormSpec(OPERATOR),
        norm_a0=NormSpec(OPERATOR),
    )


def phi_right_mult(C: CStarAlgebra) -> SesquiMap:
    """Phi(a, b) = b* a on the algebra itself: the canonical C*-valued
    inner product.  Positive with a Gram certificate, faithful, invariant,
    and module-linear for right multiplication; satisfies the factor-1
    Cauchy-Schwarz inequality.
    """
    basis = C.basis()
    elements = [[basis[j].star() * basis[i] for j in range(len(basis))] for i in range(len(basis))]
    phi = SesquiMap.from_elements(
        C,
        elements,
        domain=right_mult_domain(C),
        flags=MapFlags(
            positivity=CERT_BLOCK_PSD, invariant=True, c_linear=True, faithful=True
        ),
    )
    return phi


# -- trace maps into a grid algebra ----------------------------------------------


def _scalar_grams(TA: TraceAlgebra, family: np.ndarray) -> np.ndarray:
    """stack_k of the d x d scalar Grams rho(e_i f_k e_j*) = kron(I, f_k)/m."""
    eye = np.eye(TA.m)
    return np.stack([np.kron(eye, F) / TA.m for F in family], axis=0)


def schatten_trace_map(
    TA: TraceAlgebra,
    W: np.ndarray,
    n_grid: int,
    verify: bool = True,
    rng=None,
    tol: float = DEFAULT_TOL,
) -> SesquiMap:
    """Phi(X, Y)(t) = rho(X f_t(W) Y*) sampled on the cutoff grid.

    Positivity is structural: every f_t(W) is PSD, so each grid value of
    Phi(X, X) is rho of a product of PSDs.  Lipschitz continuity in t and
    the density bound are asserted at construction on a few samples; use
    ``schatten_lipschitz_check`` for heavier sweeps.
    """
    grid, family = min_cutoff_family(W, n_grid)
    scalars = _scalar_grams(TA, family)
    codomain = make_grid_algebra(n_grid)
    gram = tuple(scalars[k][:, :, None, None] for k in range(n_grid))
    faithful = bool(
        np.linalg.eigvalsh(_require_psd(W)).min() > tol * max(np.abs(W).max(initial=0.0), 1.0)
    )
    phi = SesquiMap(
        codomain=codomain,
        gram=gram,
        domain=TA.quasi,
        flags=MapFlags(positivity=CERT_STRUCTURAL, invariant=True, faithful=faithful),
    )
    if verify:
        rng = np.random.default_rng(0) if rng is None else rng
        for check in (
            schatten_lipschitz_check(TA, W, n_grid, n_samples=16, rng=rng, tol=tol),
            schatten_density_bound_check(TA, W, n_grid, n_samples=16, rng=rng, tol=tol),
        ):
            if not check.passed:
                raise GnslabError(f"construction-time assertion failed: {check.name}")
    return phi


def _sample_matrices(TA: TraceAlgebra, n: int, rng) -> np.ndarray:
    return complex_normal(rng, (n, TA.m, TA.m))


def schatten_lipschitz_check(
    TA: TraceAlgebra,
    W: np.ndarray,
    n_grid: int,
    n_samples: int = 256,
    rng=None,
    tol: float = DEFAULT_TOL,
) -> CheckResult:
    """|Phi(X,Y)(t2) - Phi(X,Y)(t1)| <= ||X||_p ||Y||_p rho(I) |t2 - t1|
    across all adjacent grid pairs; rho(I) = 1 here.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    grid, family = min_cutoff_family(W, n_grid)
    dt = grid[1] - grid[0]
    if dt <= 0:
        return passing("schatten_lipschitz", worst_ratio=0.0, details={"degenerate": True})
    worst = 0.0
    for X, Y in zip(_sample_matrices(TA, n_samples, rng), _sample_matrices(TA, n_samples, rng)):
        cap = TA.norm_p(X) * TA.norm_p(Y)
        vals = np.array([TA.rho(X @ F @ Y.conj().T) for F in family])
        steps = np.abs(np.diff(vals)) / dt
        worst = max(worst, float(steps.max(initial=0.0)) / max(cap, 1e-300))
    if worst > 1.0 + tol:
        return failing("schatten_lipschitz", worst_ratio=worst)
    return passing("schatten_lipschitz", worst_ratio=worst)


def schatten_density_bound_check(
    TA: TraceAlgebra,
    W: np.ndarray,
    n_grid: int,
    n_samples: int = 256,
    rng=None,
    tol: float = DEFAULT_TOL,
) -> CheckResult:
    """|Phi(Z, Z)(t)| <= ||Z||_p^2 ||W|| rho(I) on samples: the estimate
    behind density of the core image in the quotient."""
    rng = np.random.default_rng(0) if rng is None else rng
    grid, family = min_cutoff_family(W, n_grid)
    norm_w = float(grid[-1])
    worst = 0.0
    for Z in _sample_matrices(TA, n_samples, rng):
        cap = TA.norm_p(Z) ** 2 * norm_w
        if cap <= 1e-300:
            continue
        vals = np.array([abs(TA.rho(Z @ F @ Z.conj().T)) for F in family])
        worst = max(worst, float(vals.max(initial=0.0)) / cap)
    if worst > 1.0 + tol:
        return failing("schatten_density_bound", worst_ratio=worst)
    return passing("schatten_density_bound", worst_ratio=worst)


# -- weak operator-valued integrals ----------------------------------------------


@dataclass(frozen=True, eq=False)
class OperatorValuedCurve:
    """PSD matrix samples A_t on a uniform grid with trapezoid weights."""

    grid: np.ndarray
    samples: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        samples = np.asarray(self.samples, dtype=complex)
        if samples.ndim != 3 or samples.shape[0] != len(grid):
            raise StructureError("need one square sample per grid point")
        scale = max(np.abs(samples).max(initial=0.0), 1.0)
        for A in samples:
            if np.abs(A - A.conj().T).max(initial=0.0) > 1e-9 * scale:
                raise PreconditionError("curve sample is not hermitian")
            if A.size and float(np.linalg.eigvalsh(0.5 * (A + A.conj().T)).min()) < -1e-9 * scale:
                raise PreconditionError("curve sample is not PSD")
        weights = np.asarray(self.weights, dtype=float)
        if weights.shape != grid.shape:
            raise StructureError("one quadrature weight per grid point")
        for arr in (grid, samples, weights):
            arr.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "weights", weights)

    @property
    def h(self) -> int:
        return self.samples.shape[1]

    @cached_property
    def l2_norm(self) -> float:
        """Quadrature version of ||integral A_t* A_t dt||^(1/2)."""
        acc = np.einsum("k,kpq,kqr->pr", self.weights, np.conj(np.swapaxes(self.samples, 1, 2)), self.samples)
        sv = np.linalg.svd(acc, compute_uv=False)
        return float(np.sqrt(max(sv[0] if sv.size else 0.0, 0.0)))

    @staticmethod
    def from_samples(grid, samples) -> "OperatorValuedCurve":
        grid = np.asarray(grid, dtype=float)
        return OperatorValuedCurve(grid=grid, samples=np.asarray(samples, complex), weights=trapezoid_weights(grid))

    @staticmethod
    def random(rng, h: int, grid) -> "OperatorValuedCurve":
        grid = np.asarray(grid, dtype=float)
        samples = np.stack([random_psd(rng, h) / max(h, 1) for _ in grid], axis=0)
        return OperatorValuedCurve.from_samples(grid, samples)


def pettis_integral_map(
    TA: TraceAlgebra,
    W: np.ndarray,
    curve: OperatorValuedCurve,
    verify: bool = True,
    rng=None,
    tol: float = DEFAULT_TOL,
) -> SesquiMap:
    """Phi(X, Y) = integral of rho(X f_t(W) Y*) A_t dt by trapezoid rule.

    The curve grid must coincide with the cutoff grid (no interpolation).
    Positivity is structural: a nonnegative combination of PSD samples.
    """
    grid, family = min_cutoff_family(W, len(curve.grid))
    if curve.grid.shape != grid.shape or np.abs(curve.grid - grid).max(initial=0.0) > 1e-12 * max(
        grid[-1], 1.0
    ):
        raise StructureError("curve grid does not match the cutoff grid")
    scalars = _scalar_grams(TA, family)
    gram = np.einsum("k,kij,kpq->ijpq", curve.weights, scalars, curve.samples)
    codomain = CStarAlgebra((curve.h,))
    phi = SesquiMap(
        codomain=codomain,
        gram=(gram,),
        domain=TA.quasi,
        flags=MapFlags(positivity=CERT_STRUCTURAL, invariant=True),
    )
    if verify:
        rng = np.random.default_rng(0) if rng is None else rng
        check = pettis_bound_check(TA, W, curve, n_samples=16, rng=rng, tol=tol)
        if not check.passed:
            raise GnslabError("construction-time assertion failed: pettis_bound")
    return phi


def pettis_bound_check(
    TA: TraceAlgebra,
    W: np.ndarray,
    curve: OperatorValuedCurve,
    n_samples: int = 256,
    rng=None,
    tol: float = DEFAULT_TOL,
) -> CheckResult:
    """||Phi(X, Y)|| <= ||X||_p ||Y||_p ||W||^(3/2) rho(I) |||A|||_2.

    The discrete mirror of the weak-integral estimate: Cauchy-Schwarz over
    the quadrature measure, then the trace Hoelder bound on the scalar
    factor.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    grid, family = min_cutoff_family(W, len(curve.grid))
    norm_w = float(grid[-1])
    cap_const = norm_w**1.5 * curve.l2_norm
    worst = 0.0
    observed = 0.0
    for X, Y in zip(_sample_matrices(TA, n_samples, rng), _sample_matrices(TA, n_samples, rng)):
        cap = TA.norm_p(X) * TA.norm_p(Y) * cap_const
        scalars = np.array([TA.rho(X @ F @ Y.conj().T) for F in family])
        total = np.einsum("k,k,kpq->pq", curve.weights, scalars, curve.samples)
        value = float(np.linalg.svd(total, compute_uv=False)[0]) if total.size else 0.0
        observed = max(observed, value)
        if cap > 1e-300:
            worst = max(worst, value / cap)
    if worst > 1.0 + tol:
        return failing("pettis_bound", worst_ratio=worst)
    return passing("pettis_bound", worst_ratio=worst, details={"observed_norm": observed})


# -- series of maps ---------------------------------------------------------------


def series_map(
    maps: list[SesquiMap],
    coeffs: list[AlgebraElement],
    n_terms: int | None = None,
    tol: float = DEFAULT_TOL,
) -> SesquiMap:
    """Congruence series sum_n x_n Phi_n(., .) x_n* over a common shape.

    Positivity of each term is preserved by the congruence, invariance is
    inherited, and the total is bounded by sum ||x_n||^2 times the common
    bound of the terms.
    """
    if not maps:
        raise StructureError("series needs at least one map")
    if n_terms is not None:
        maps, coeffs = maps[:n_terms], coeffs[:n_terms]
    if len(maps) != len(coeffs):
        raise StructureError("one coefficient per map required")
    first = maps[0]
    for phi in maps[1:]:
        if phi.codomain.block_dims != first.codomain.block_dims or phi.dim != first.dim:
            raise StructureError("series terms must share domain and codomain shapes")
    gram = []
    for k, n in enumerate(first.codomain.block_dims):
        acc = np.zeros((first.dim, first.dim, n, n), dtype=complex)
        for phi, x in zip(maps, coeffs):
            xk = x.blocks[k]
            acc += np.einsum("pr,ijrs,qs->ijpq", xk, phi.gram[k], xk.conj())
        gram.append(acc)
    invariant = all(phi.flags.invariant for phi in maps)
    positive = all(phi.flags.positivity is not None for phi in maps)
    return SesquiMap(
        codomain=first.codomain,
        gram=tuple(gram),
        domain=first.domain,
        flags=MapFlags(
            positivity=CERT_STRUCTURAL if positive else None,
            invariant=invariant if invariant else None,
        ),
    )


def series_bound_check(
    phi: SesquiMap,
    TA: TraceAlgebra,
    coeffs: list[AlgebraElement],
    term_bound: float,
    n_samples: int = 256,
    rng=None,
    tol: float = DEFAULT_TOL,
) -> CheckResult:
    """||Phi(X, Y)|| <= M ||X||_p ||Y||_p sum ||x_n||^2 given each term is
    bounded by M against the ambient norms."""
    rng = np.random.default_rng(0) if rng is None else rng
    total_sq = sum(float(x.norm()) ** 2 for x in coeffs)
    worst = 0.0
    for X, Y in zip(_sample_matrices(TA, n_samples, rng), _sample_matrices(TA, n_samples, rng)):
        cap = term_bound * TA.norm_p(X) * TA.norm_p(Y) * total_sq
        if cap <= 1e-300:
            continue
        value = op_norm(phi(TA.coeffs(X), TA.coeffs(Y)))
        worst = max(worst, value / cap)
    if worst > 1.0 + tol:
        return failing("series_bound", worst_ratio=worst)
    return passing("series_bound", worst_ratio=worst)


# -- positive linear maps ----------------------------------------------------------


def omega_trace_functional(
    TA: TraceAlgebra,
    W: np.ndarray,
    n_grid: int,
    verify: bool = True,
    rng=None,
    tol: float = DEFAULT_TOL,
) -> PositiveLinearMap:
    """omega(A)(t) = rho(A f_t(W)) into the grid algebra.

    Linear, positive on squares, and bounded:
    ||omega(X* Y)|| <= ||X||_p ||Y||_p ||W|| rho(I); feeds the
    bounded-functional construction with that constant.
    """
    grid, family = min_cutoff_family(W, n_grid)
    codomain = make_grid_algebra(n_grid)
    m = TA.m
    values = []
    for i in range(m * m):
        p, q = divmod(i, m)
        vals = family[:, q, p] / m
        values.append(codomain.element([v.reshape(1, 1) for v in vals]))
    omega = PositiveLinearMap(domain=TA.quasi, codomain=codomain, values=tuple(values))
    if verify:
        rng = np.random.default_rng(0) if rng is None else rng
        check = omega_trace_bound_check(TA, W, n_grid, n_samples=16, rng=rng, tol=tol)
        if not check.passed:
            raise GnslabError("construction-time assertion failed: omega_trace_bound")
    return omega


def omega_trace_bound_check(
    TA: TraceAlgebra,
    W: np.ndarray,
    n_grid: int,
    n_samples: int = 256,
    rng=None,
    tol: float = DEFAULT_TOL,
) -> CheckResult:
    """||omega(X* Y)|| <= ||X||_p ||Y||_p ||W|| rho(I) on samples."""
    rng = np.random.default_rng(0) if rng is None else rng
    grid, family = min_cutoff_family(W, n_grid)
    norm_w = float(grid[-1])
    worst = 0.0
    for X, Y in zip(_sample_matrices(TA, n_samples, rng), _sample_matrices(TA, n_samples, rng)):
        cap = TA.norm_p(X) * TA.norm_p(Y) * norm_w
        if cap <= 1e-300:
            continue
        vals = np.array([abs(TA.rho(X.conj().T @ Y @ F)) for F in family])
        worst = max(worst, float(vals.max(initial=0.0)) / cap)
    if worst > 1.0 + tol:
        return failing("omega_trace_bound", worst_ratio=worst)
    return passing("omega_trace_bound", worst_ratio=worst)


def omega_pettis(
    TA: TraceAlgebra,
    W: np.ndarray,
    curve: OperatorValuedCurve,
    verify: bool = True,
    rng=None,
    tol: float = DEFAULT_TOL,
) -> PositiveLinearMap:
    """Omega(X) = integral of rho(X f_t(W)) A_t dt into M_h.

    Satisfies the bounded-positive hypotheses of the normed construction:
    positivity on squares comes from rho(c* c f_t(W)) >= 0 against PSD
    samples, and the bilinear bound mirrors the weak-integral estimate
    with constant ||W||^(3/2) rho(I) |||A|||_2.
    """
    grid, family = min_cutoff_family(W, len(curve.grid))
    if curve.grid.shape != grid.shape or np.abs(curve.grid - grid).max(initial=0.0) > 1e-12 * max(
        grid[-1], 1.0
    ):
        raise StructureError("curve grid does not match the cutoff grid")
    codomain = CStarAlgebra((curve.h,))
    m = TA.m
    values = []
    for i in range(m * m):
        p, q = divmod(i, m)
        scalars = family[:, q, p] / m
        total = np.einsum("k,k,kpq->pq", curve.weights, scalars, curve.samples)
        values.append(codomain.element([total]))
    omega = PositiveLinearMap(domain=TA.quasi, codomain=codomain, values=tuple(values))
    if verify:
        rng = np.random.default_rng(0) if rng is None else rng
        check = omega_pettis_bound_check(TA, W, curve, n_samples=16, rng=rng, tol=tol)
        if not check.passed:
            raise GnslabError("construction-time assertion failed: omega_pettis_bound")
    return omega


def omega_pettis_bound_check(
    TA: TraceAlgebra,
    W: np.ndarray,
    curve: OperatorValuedCurve,
    n_samples: int = 256,
    rng=None,
    tol: float = DEFAULT_TOL,
) -> CheckResult:
    """||Omega(X* Y)|| <= ||X||_p ||Y||_p ||W||^(3/2) rho(I) |||A|||_2.

    The linear-map reading of the estimate is ambiguous (it mixes the two
    Schatten factors), so the bound is asserted in its bilinear form with
    X* Y inside, exactly as the chain that proves it.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    grid, family = min_cutoff_family(W, len(curve.grid))
    norm_w = float(grid[-1])
    cap_const = norm_w**1.5 * curve.l2_norm
    worst = 0.0
    for X, Y in zip(_sample_matrices(TA, n_samples, rng), _sample_matrices(TA, n_samples, rng)):
        cap = TA.norm_p(X) * TA.norm_p(Y) * cap_const
        if cap <= 1e-300:
            continue
        Z = X.conj().T @ Y
        scalars = np.array([TA.rho(Z @ F) for F in family])
        total = np.einsum("k,k,kpq->pq", curve.weights, scalars, curve.samples)
        value = float(np.linalg.svd(total, compute_uv=False)[0]) if total.size else 0.0
        worst = max(worst, value / cap)
    if worst > 1.0 + tol:
        return failing("omega_pettis_bound", worst_ratio=worst)
    return passing("omega_pettis_bound", worst_ratio=worst)
