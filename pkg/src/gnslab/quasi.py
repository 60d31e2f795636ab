"""Matrix-realized quasi *-algebras.

A model is a pair (A, A0): the ambient space A is a span of complex m x m
matrices closed under conjugate transpose, and A0 is a *-subalgebra picked
out by a sub-list of the basis.  Module products and the involution are
literal matrix operations; all closure questions reduce to least-squares
expansions against the basis with an SVD-grade residual threshold.

Elements carry coefficient vectors over the ambient basis, so the same
model supports two different norms on A and A0 (the two-norm trace models
keep the quasi-structure meaningful even when the underlying sets agree).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ClosureError, PreconditionError, StructureError
from .reporting import PASS, CheckResult, Report, failing, passing
from .sampling import complex_normal

DEFAULT_TOL = 1e-9

OPERATOR = "operator"
SCHATTEN = "schatten"


@dataclass(frozen=True)
class NormSpec:
    """Named matrix norm: operator norm or Schatten-p.

    Schatten norms are taken against the normalized trace tr/m, so the
    ambient identity always has norm one; this matches the normalized-trace
    models the package is built around.
    """

    kind: str
    p: float | None = None

    def __post_init__(self):
        if self.kind not in (OPERATOR, SCHATTEN):
            raise StructureError(f"unknown norm kind {self.kind!r}")
        if self.kind == SCHATTEN:
            if self.p is None or self.p < 1:
                raise StructureError("schatten norm needs parameter p >= 1")

    def of(self, matrix: np.ndarray) -> float:
        sv = np.linalg.svd(matrix, compute_uv=False)
        if self.kind == OPERATOR:
            return float(sv[0]) if sv.size else 0.0
        m = matrix.shape[0]
        return float(np.mean(sv**self.p) ** (1.0 / self.p)) if m else 0.0


@dataclass(frozen=True, eq=False)
class QuasiStarAlgebra:
    """Span of m x m matrices with a distinguished *-subalgebra."""

    ambient_dim: int
    basis: tuple[np.ndarray, ...]
    a0_indices: tuple[int, ...]
    unit_coeffs: np.ndarray | None = None
    norm_a: NormSpec | None = None
    norm_a0: NormSpec | None = None

    def __post_init__(self):
        m = int(self.ambient_dim)
        mats = tuple(np.array(b, dtype=complex) for b in self.basis)
        for b in mats:
            if b.shape != (m, m):
                raise StructureError(f"basis matrix of shape {b.shape}, expected {m}x{m}")
            b.setflags(write=False)
        if not mats:
            raise StructureError("empty basis")
        object.__setattr__(self, "ambient_dim", m)
        object.__setattr__(self, "basis", mats)
        idx = tuple(int(i) for i in self.a0_indices)
        if len(set(idx)) != len(idx) or any(i < 0 or i >= len(mats) for i in idx):
            raise StructureError("a0_indices must be distinct indices into the basis")
        object.__setattr__(self, "a0_indices", idx)
        if self.unit_coeffs is not None:
            u = np.asarray(self.unit_coeffs, dtype=complex).ravel()
            if u.shape != (len(mats),):
                raise StructureError("unit_coeffs length must match basis size")
            u.setflags(write=False)
            object.__setattr__(self, "unit_coeffs", u)
        sv = np.linalg.svd(self._flat, compute_uv=False)
        if sv.size and sv[-1] <= 1e-12 * sv[0]:
            raise StructureError("basis matrices are not linearly independent")

    # -- linear algebra plumbing ------------------------------------------

    @cached_property
    def _flat(self) -> np.ndarray:
        """Column-stacked basis, shape (m*m, d)."""
        return np.stack([b.ravel() for b in self.basis], axis=1)

    @cached_property
    def _pinv(self) -> np.ndarray:
        return np.linalg.pinv(self._flat)

    @cached_property
    def _core_flat(self) -> np.ndarray:
        if not self.a0_indices:
            return np.zeros((self.ambient_dim**2, 0), dtype=complex)
        return self._flat[:, list(self.a0_indices)]

    @cached_property
    def _core_pinv(self) -> np.ndarray:
        return np.linalg.pinv(self._core_flat)

    @cached_property
    def basis_scale(self) -> float:
        return max(float(np.linalg.norm(b)) for b in self.basis)

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def a0_dim(self) -> int:
        return len(self.a0_indices)

    # -- elements -----------------------------------------------------------

    def element(self, coeffs) -> "QuasiElement":
        c = np.asarray(coeffs, dtype=complex).ravel()
        if c.shape != (self.dim,):
            raise StructureError(f"coefficient length {c.shape[0]}, expected {self.dim}")
        return QuasiElement(self, c)

    def basis_element(self, index: int) -> "QuasiElement":
        c = np.zeros(self.dim, dtype=complex)
        c[index] = 1.0
        return QuasiElement(self, c)

    def unit(self) -> "QuasiElement":
        if self.unit_coeffs is None:
            raise PreconditionError("model has no declared unit")
        return QuasiElement(self, np.array(self.unit_coeffs))

    def matrix(self, coeffs: np.ndarray) -> np.ndarray:
        return (self._flat @ np.asarray(coeffs, dtype=complex)).reshape(
            self.ambient_dim, self.ambient_dim
        )

    def coeffs_of(self, matrix: np.ndarray, tol: float = DEFAULT_TOL, require: bool = True):
        """Least-squares expansion in the ambient basis.

        Returns (coeffs, residual); raises ClosureError when ``require`` and
        the residual exceeds tol relative to max(input size, basis scale).
        """
        vec = np.asarray(matrix, dtype=complex).ravel()
        c = self._pinv @ vec
        residual = float(np.linalg.norm(self._flat @ c - vec))
        scale = max(float(np.linalg.norm(vec)), self.basis_scale)
        if require and residual > tol * scale:
            raise ClosureError(
                f"matrix lies outside span(A): residual {residual:.3e}",
                residual=residual,
            )
        return c, residual

    def from_matrix(self, matrix: np.ndarray, tol: float = DEFAULT_TOL) -> "QuasiElement":
        c, _ = self.coeffs_of(matrix, tol=tol, require=True)
        return QuasiElement(self, c)

    def core_expansion(self, matrix: np.ndarray):
        """Expansion in the A0 sub-basis; returns (core coeffs, residual)."""
        vec = np.asarray(matrix, dtype=complex).ravel()
        c = self._core_pinv @ vec
        residual = float(np.linalg.norm(self._core_flat @ c - vec))
        return c, residual

    def in_core_span(self, a: "QuasiElement", tol: float = DEFAULT_TOL) -> bool:
        _, residual = self.core_expansion(a.matrix())
        scale = max(float(np.linalg.norm(a.matrix())), self.basis_scale)
        return residual <= tol * scale

    def random_element(self, rng, core_only: bool = False) -> "QuasiElement":
        c = np.zeros(self.dim, dtype=complex)
        if core_only:
            if not self.a0_indices:
                raise PreconditionError("model has empty A0")
            c[list(self.a0_indices)] = complex_normal(rng, self.a0_dim)
        else:
            c = complex_normal(rng, self.dim)
        return QuasiElement(self, c)

    # -- norms ---------------------------------------------------------------

    def norm(self, a: "QuasiElement") -> float:
        if self.norm_a is None:
            raise PreconditionError("no ambient norm declared")
        return self.norm_a.of(a.matrix())

    def core_norm(self, x: "QuasiElement") -> float:
        if self.norm_a0 is None:
            raise PreconditionError("no core norm declared")
        return self.norm_a0.of(x.matrix())

    # -- structure tensors (cached for the representation builders) ----------

    @cached_property
    def involution_coeffs(self) -> np.ndarray:
        """S[i, :] = coefficients of basis[i]^*; shape (d, d)."""
        rows = []
        for b in self.basis:
            c, _ = self.coeffs_of(b.conj().T, require=True)
            rows.append(c)
        return np.array(rows)

    @cached_property
    def left_mult_tensor(self) -> np.ndarray:
        """P[i, x, :] = coefficients of basis[i] @ core_basis[x]; (d, d0, d)."""
        d, d0 = self.dim, self.a0_dim
        out = np.zeros((d, d0, d), dtype=complex)
        for i, b in enumerate(self.basis):
            for xpos, xi in enumerate(self.a0_indices):
                c, _ = self.coeffs_of(b @ self.basis[xi], require=True)
                out[i, xpos] = c
        return out


@dataclass(frozen=True, eq=False)
class QuasiElement:
    """Coefficient vector over the ambient basis."""

    algebra: QuasiStarAlgebra
    coeffs: np.ndarray

    def matrix(self) -> np.ndarray:
        return self.algebra.matrix(self.coeffs)

    def star(self) -> "QuasiElement":
        return involution(self)

    def __add__(self, other: "QuasiElement") -> "QuasiElement":
        return self.algebra.element(self.coeffs + other.coeffs)

    def __sub__(self, other: "QuasiElement") -> "QuasiElement":
        return self.algebra.element(self.coeffs - other.coeffs)

    def __neg__(self) -> "QuasiElement":
        return self.algebra.element(-self.coeffs)

    def __mul__(self, scalar) -> "QuasiElement":
        return self.algebra.element(scalar * self.coeffs)

    __rmul__ = __mul__


def involution(a: QuasiElement, tol: float = DEFAULT_TOL) -> QuasiElement:
    """Antilinear involution a -> a*; conjugate transpose in the realization."""
    c, _ = a.algebra.coeffs_of(a.matrix().conj().T, tol=tol, require=True)
    return a.algebra.element(c)


def mod_mult(
    a: QuasiElement, x: QuasiElement, side: str = "right", tol: float = DEFAULT_TOL
) -> QuasiElement:
    """Module product with x in A0: ``a x`` (side="right") or ``x a`` (side="left")."""
    alg = a.algebra
    if side not in ("left", "right"):
        raise PreconditionError(f"side must be 'left' or 'right', got {side!r}")
    if not alg.in_core_span(x, tol=tol):
        raise PreconditionError("module factor lies outside span(A0)")
    prod = a.matrix() @ x.matrix() if side == "right" else x.matrix() @ a.matrix()
    c, _ = alg.coeffs_of(prod, tol=tol, require=True)
    return alg.element(c)


# -- model validation ---------------------------------------------------------


def _closure_check(name, pairs, expand, tol, scale) -> CheckResult:
    worst, witness = 0.0, None
    for label, matrix in pairs:
        residual = expand(matrix)
        if residual > worst:
            worst, witness = residual, label
    if worst > tol * scale:
        return failing(name, residual=worst, witness={"pair": witness})
    return passing(name, residual=worst)


def validate(
    Q: QuasiStarAlgebra,
    tol: float = DEFAULT_TOL,
    rng=None,
    n_samples: int = 16,
) -> Report:
    """Check every structural invariant of the model; failures carry witnesses."""
    report = Report(environment={"tol": tol})
    scale = max(Q.basis_scale**2, Q.basis_scale)
    ambient_resid = lambda m: Q.coeffs_of(m, require=False)[1]
    core_resid = lambda m: Q.core_expansion(m)[1]

    report.add(
        _closure_check(
            "involution_closure_A",
            [(i, b.conj().T) for i, b in enumerate(Q.basis)],
            ambient_resid,
            tol,
            scale,
        )
    )
    report.add(
        _closure_check(
            "involution_closure_A0",
            [(i, Q.basis[i].conj().T) for i in Q.a0_indices],
            core_resid,
            tol,
            scale,
        )
    )
    report.add(
        _closure_check(
            "product_closure_A0",
            [
                ((x, y), Q.basis[x] @ Q.basis[y])
                for x in Q.a0_indices
                for y in Q.a0_indices
            ],
            core_resid,
            tol,
            scale,
        )
    )
    report.add(
        _closure_check(
            "module_action_closure",
            [
                ((i, x, side), Q.basis[i] @ Q.basis[x] if side == "r" else Q.basis[x] @ Q.basis[i])
                for i in range(Q.dim)
                for x in Q.a0_indices
                for side in ("r", "l")
            ],
            ambient_resid,
            tol,
            scale,
        )
    )

    # Matrix products are associative; this is a sanity check of the model
    # arithmetic, not of the data.
    worst, witness = 0.0, None
    for x in Q.a0_indices:
        for i in range(Q.dim):
            for y in Q.a0_indices:
                X, A, Y = Q.basis[x], Q.basis[i], Q.basis[y]
                r = max(
                    float(np.abs((X @ A) @ Y - X @ (A @ Y)).max(initial=0.0)),
                    float(np.abs(A @ (X @ Y) - (A @ X) @ Y).max(initial=0.0)),
                )
                if r > worst:
                    worst, witness = r, (x, i, y)
    if worst > 1e-12 * max(scale * Q.basis_scale, 1.0):
        report.add(failing("associativity", residual=worst, witness={"triple": witness}))
    else:
        report.add(passing("associativity", residual=worst))

    if Q.unit_coeffs is not None:
        E = Q.matrix(Q.unit_coeffs)
        worst, witness = 0.0, None
        for i, b in enumerate(Q.basis):
            r = max(
                float(np.abs(b @ E - b).max(initial=0.0)),
                float(np.abs(E @ b - b).max(initial=0.0)),
            )
            if r > worst:
                worst, witness = r, i
        _, e_core = Q.core_expansion(E)
        worst = max(worst, e_core)
        if worst > tol * scale:
            report.add(failing("unit", residual=worst, witness={"basis": witness}))
        else:
            report.add(passing("unit", residual=worst))

    if Q.norm_a is not None:
        samples = [Q.basis_element(i) for i in range(Q.dim)]
        if rng is not None:
            samples += [Q.random_element(rng) for _ in range(n_samples)]
        worst = 0.0
        for a in samples:
            na = Q.norm(a)
            worst = max(worst, abs(Q.norm(a.star()) - na) / max(na, 1e-300))
        status = PASS if worst <= tol else "fail"
        report.add(CheckResult("involution_isometry", status, residual=worst))

    if Q.norm_a is not None and Q.norm_a0 is not None and Q.a0_indices:
        observed = 0.0
        samples = []
        for i in range(Q.dim):
            for x in Q.a0_indices:
                samples.append((Q.basis_element(i), Q.basis_element(x)))
        if rng is not None:
            samples += [
                (Q.random_element(rng), Q.random_element(rng, core_only=True))
                for _ in range(n_samples)
            ]
        for a, x in samples:
            denom = Q.norm(a) * Q.core_norm(x)
            if denom <= 1e-300:
                continue
            prod = Q.norm_a.of(a.matrix() @ x.matrix())
            observed = max(observed, prod / denom)
        # The axioms only require separate continuity; the observed constant
        # is recorded, never asserted against a universal bound.
        report.add(passing("module_continuity", details={"observed_bound": observed}))

    return report


def nondegeneracy_check(Q: QuasiStarAlgebra, tol: float = DEFAULT_TOL) -> tuple[bool, bool]:
    """(left, right): injectivity of a -> (a x)_x on A and x -> (a x)_a on A0."""
    if not Q.a0_indices:
        return (False, False)
    left_rows = []
    for x in Q.a0_indices:
        cols = [(b @ Q.basis[x]).ravel() for b in Q.basis]
        left_rows.append(np.stack(cols, axis=1))
    left_map = np.concatenate(left_rows, axis=0)
    sv = np.linalg.svd(left_map, compute_uv=False)
    left_ok = bool(len(sv) >= Q.dim and sv[Q.dim - 1] > tol * max(sv[0], 1e-300))

    right_rows = []
    for b in Q.basis:
        cols = [(b @ Q.basis[x]).ravel() for x in Q.a0_indices]
        right_rows.append(np.stack(cols, axis=1))
    right_map = np.concatenate(right_rows, axis=0)
    sv = np.linalg.svd(right_map, compute_uv=False)
    right_ok = bool(len(sv) >= Q.a0_dim and sv[Q.a0_dim - 1] > tol * max(sv[0], 1e-300))
    return left_ok, right_ok


# -- stock models --------------------------------------------------------------


def full_matrix_model(
    m: int,
    ambient_norm: NormSpec | None = NormSpec(OPERATOR),
    core_norm: NormSpec | None = NormSpec(OPERATOR),
) -> QuasiStarAlgebra:
    """A = A0 = M_m with matrix-unit basis and the identity as unit."""
    basis = []
    for p in range(m):
        for q in range(m):
            b = np.zeros((m, m), dtype=complex)
            b[p, q] = 1.0
            basis.append(b)
    unit = np.zeros(m * m, dtype=complex)
    for p in range(m):
        unit[p * m + p] = 1.0
    return QuasiStarAlgebra(
        ambient_dim=m,
        basis=tuple(basis),
        a0_indices=tuple(range(m * m)),
        unit_coeffs=unit,
        norm_a=ambient_norm,
        norm_a0=core_norm,
    )


def schatten_model(m: int, p: float = 2.0) -> QuasiStarAlgebra:
    """Two-norm model (A, ||.||_p; A0, operator norm) on M_m."""
    return full_matrix_model(
        m, ambient_norm=NormSpec(SCHATTEN, p=p), core_norm=NormSpec(OPERATOR)
    )


def restricted_core_model(m: int, a0_indices) -> QuasiStarAlgebra:
    """Full matrix ambient space with a chosen (possibly non-dense) core."""
    full = full_matrix_model(m)
    return QuasiStarAlgebra(
        ambient_dim=m,
        basis=full.basis,
        a0_indices=tuple(a0_indices),
        unit_coeffs=full.unit_coeffs,
        norm_a=full.norm_a,
        norm_a0=full.norm_a0,
    )


def scalar_core_model(m: int) -> QuasiStarAlgebra:
    """A = M_m with A0 = C.1: the stock non-dense core.

    The identity is appended to the matrix-unit basis so the core can be a
    single basis element.
    """
    units = full_matrix_model(m)
    # Drop E_{00} and append the identity: the span is unchanged, the basis
    # stays independent, and the core can be the single last element.
    basis = [b for i, b in enumerate(units.basis) if i != 0]
    basis.append(np.eye(m, dtype=complex))
    unit = np.zeros(len(basis), dtype=complex)
    unit[-1] = 1.0
    return QuasiStarAlgebra(
        ambient_dim=m,
        basis=tuple(basis),
        a0_indices=(len(basis) - 1,),
        unit_coeffs=unit,
        norm_a=NormSpec(OPERATOR),
        norm_a0=NormSpec(OPERATOR),
    )
