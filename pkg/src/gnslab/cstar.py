"""Finite-dimensional C*-algebras as direct sums of full matrix blocks.

An algebra is described by its block dimensions ``[n_1, ..., n_K]``; an
element is one complex ``n_k x n_k`` matrix per block.  The operator norm,
positivity, states and the min-functional calculus are all exact
eigenvalue/singular-value computations, which is the point of working at
finite dimension: every inequality downstream is decidable.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError, PreconditionError, StructureError
from .sampling import complex_normal

DEFAULT_TOL = 1e-9


def _frozen(matrix, shape=None) -> np.ndarray:
    arr = np.array(matrix, dtype=complex)
    if shape is not None and arr.shape != shape:
        raise StructureError(f"expected block of shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class CStarAlgebra:
    """Direct sum of full matrix algebras M_{n_1} + ... + M_{n_K}."""

    block_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(n) for n in self.block_dims)
        if not dims or any(n <= 0 for n in dims):
            raise StructureError("block_dims must be a nonempty list of positive ints")
        object.__setattr__(self, "block_dims", dims)

    @property
    def commutative(self) -> bool:
        return all(n == 1 for n in self.block_dims)

    @property
    def dim(self) -> int:
        """Linear dimension sum n_k^2."""
        return sum(n * n for n in self.block_dims)

    @property
    def realization_dim(self) -> int:
        """Size of the block-diagonal matrix realization, sum n_k."""
        return sum(self.block_dims)

    def element(self, blocks) -> "AlgebraElement":
        blocks = tuple(
            _frozen(b, (n, n)) for b, n in zip(blocks, self.block_dims, strict=True)
        )
        return AlgebraElement(self, blocks)

    def zero(self) -> "AlgebraElement":
        return self.element([np.zeros((n, n), dtype=complex) for n in self.block_dims])

    def unit(self) -> "AlgebraElement":
        return self.element([np.eye(n, dtype=complex) for n in self.block_dims])

    def scalar(self, value: complex) -> "AlgebraElement":
        return self.element(
            [value * np.eye(n, dtype=complex) for n in self.block_dims]
        )

    def basis(self) -> list["AlgebraElement"]:
        """Standard matrix units, block-major then row-major inside a block."""
        out = []
        for k, n in enumerate(self.block_dims):
            for p in range(n):
                for q in range(n):
                    blocks = [np.zeros((m, m), dtype=complex) for m in self.block_dims]
                    blocks[k][p, q] = 1.0
                    out.append(self.element(blocks))
        return out

    def basis_labels(self) -> list[tuple[int, int, int]]:
        return [
            (k, p, q)
            for k, n in enumerate(self.block_dims)
            for p in range(n)
            for q in range(n)
        ]

    def from_block_diag(self, matrix: np.ndarray) -> "AlgebraElement":
        matrix = np.asarray(matrix, dtype=complex)
        m = self.realization_dim
        if matrix.shape != (m, m):
            raise StructureError(f"expected {m}x{m} block-diagonal matrix")
        blocks, off = [], 0
        for n in self.block_dims:
            blocks.append(matrix[off : off + n, off : off + n])
            off += n
        return self.element(blocks)

    def random_element(self, rng, hermitian: bool = False) -> "AlgebraElement":
        blocks = []
        for n in self.block_dims:
            b = complex_normal(rng, (n, n))
            if hermitian:
                b = 0.5 * (b + b.conj().T)
            blocks.append(b)
        return self.element(blocks)


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    """One matrix per block of the parent algebra."""

    algebra: CStarAlgebra
    blocks: tuple[np.ndarray, ...]

    def _check_same(self, other: "AlgebraElement") -> None:
        if self.algebra.block_dims != other.algebra.block_dims:
            raise StructureError(
                f"block shape mismatch: {self.algebra.block_dims} vs "
                f"{other.algebra.block_dims}"
            )

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        self._check_same(other)
        return self.algebra.element([a + b for a, b in zip(self.blocks, other.blocks)])

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        self._check_same(other)
        return self.algebra.element([a - b for a, b in zip(self.blocks, other.blocks)])

    def __neg__(self) -> "AlgebraElement":
        return self.algebra.element([-a for a in self.blocks])

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            self._check_same(other)
            return self.algebra.element(
                [a @ b for a, b in zip(self.blocks, other.blocks)]
            )
        return self.algebra.element([other * a for a in self.blocks])

    def __rmul__(self, scalar) -> "AlgebraElement":
        return self.algebra.element([scalar * a for a in self.blocks])

    def star(self) -> "AlgebraElement":
        return self.algebra.element([a.conj().T for a in self.blocks])

    def norm(self) -> float:
        return op_norm(self)

    def block_diag(self) -> np.ndarray:
        m = self.algebra.realization_dim
        out = np.zeros((m, m), dtype=complex)
        off = 0
        for b, n in zip(self.blocks, self.algebra.block_dims):
            out[off : off + n, off : off + n] = b
            off += n
        return out

    def is_zero(self, tol: float = DEFAULT_TOL) -> bool:
        return all(np.abs(b).max(initial=0.0) <= tol for b in self.blocks)


def op_norm(z: AlgebraElement) -> float:
    """C*-norm: max over blocks of the largest singular value."""
    return max(
        (float(np.linalg.svd(b, compute_uv=False)[0]) if b.size else 0.0)
        for b in z.blocks
    )


def is_positive(z: AlgebraElement, tol: float = DEFAULT_TOL, scale: float | None = None) -> bool:
    """Cone membership: hermitian within tolerance and min eigenvalue >= -tol*scale.

    ``scale`` defaults to the norm of ``z`` itself; callers comparing against
    a family of elements pass the family scale so numerically-zero elements
    do not fail on roundoff noise.
    """
    znorm = op_norm(z)
    scale = znorm if scale is None else max(scale, znorm)
    for b in z.blocks:
        herm = 0.5 * (b + b.conj().T)
        if np.abs(b - herm).max(initial=0.0) > tol * max(scale, 1e-300):
            return False
        if b.size and float(np.linalg.eigvalsh(herm).min()) < -tol * scale:
            return False
    return True


@dataclass(frozen=True, eq=False)
class State:
    """Positive normalized functional, represented by one density per block."""

    algebra: CStarAlgebra
    densities: tuple[np.ndarray, ...]

    def __post_init__(self):
        blocks = tuple(
            _frozen(d, (n, n))
            for d, n in zip(self.densities, self.algebra.block_dims, strict=True)
        )
        object.__setattr__(self, "densities", blocks)
        total = 0.0
        for rho in blocks:
            herm_gap = np.abs(rho - rho.conj().T).max(initial=0.0)
            if herm_gap > 1e-9 * max(1.0, np.abs(rho).max(initial=0.0)):
                raise PreconditionError("state density is not hermitian")
            if rho.size and float(np.linalg.eigvalsh(rho).min()) < -1e-9:
                raise PreconditionError("state density is not PSD")
            total += float(np.trace(rho).real)
        if abs(total - 1.0) > 1e-9:
            raise PreconditionError(f"state densities have total trace {total}, not 1")

    def __call__(self, z: AlgebraElement) -> complex:
        return state_eval(self, z)


def state_eval(omega: State, z: AlgebraElement) -> complex:
    if omega.algebra.block_dims != z.algebra.block_dims:
        raise StructureError("state and element live on different algebras")
    return complex(
        sum(np.trace(rho @ b) for rho, b in zip(omega.densities, z.blocks))
    )


def pure_state(algebra: CStarAlgebra, block: int, vector: np.ndarray) -> State:
    """Vector state concentrated on one block."""
    v = np.asarray(vector, dtype=complex)
    v = v / np.linalg.norm(v)
    densities = [np.zeros((n, n), dtype=complex) for n in algebra.block_dims]
    densities[block] = np.outer(v, v.conj())
    return State(algebra, tuple(densities))


def point_state(algebra: CStarAlgebra, index: int) -> State:
    """Evaluation at one block of a commutative algebra (or any 1-dim block)."""
    if algebra.block_dims[index] != 1:
        raise PreconditionError("point evaluation needs a 1x1 block")
    return pure_state(algebra, index, np.ones(1))


def random_state(algebra: CStarAlgebra, rng, pure: bool = True) -> State:
    """Haar-like random state; pure states pick a block weighted by its size."""
    dims = algebra.block_dims
    if pure:
        weights = np.array(dims, dtype=float)
        block = int(rng.choice(len(dims), p=weights / weights.sum()))
        v = complex_normal(rng, dims[block])
        return pure_state(algebra, block, v)
    densities = []
    for n in dims:
        f = complex_normal(rng, (n, n))
        densities.append(f @ f.conj().T)
    total = sum(float(np.trace(d).real) for d in densities)
    return State(algebra, tuple(d / total for d in densities))


def spectral_states(z: AlgebraElement) -> list[State]:
    """Eigenvector states of the hermitian part of ``z``, one per block.

    For hermitian ``z`` one of these attains sup |omega(z)| = ||z|| exactly,
    which is the analytic anchor the random sweep is checked against.
    """
    out = []
    for k, b in enumerate(z.blocks):
        herm = 0.5 * (b + b.conj().T)
        vals, vecs = np.linalg.eigh(herm)
        idx = int(np.abs(vals).argmax())
        out.append(pure_state(z.algebra, k, vecs[:, idx]))
    return out


def norm_via_states(
    z: AlgebraElement,
    n_samples: int,
    rng,
    include_spectral: bool = True,
) -> dict:
    """Cross-check of the norm formula over states.

    Returns the sup of |omega(z)| over ``n_samples`` random pure states
    (plus the spectral anchor states when requested) together with the
    analytic norm.  The analytic value is authoritative; the sampled value
    is a lower bound that must stay below the norm.
    """
    states = [random_state(z.algebra, rng) for _ in range(n_samples)]
    if include_spectral:
        states.extend(spectral_states(z))
    sampled = max(abs(state_eval(w, z)) for w in states) if states else 0.0
    return {"sampled_sup": float(sampled), "analytic": op_norm(z)}


def functional_calculus_min(
    W: AlgebraElement, t: float, tol: float = DEFAULT_TOL
) -> AlgebraElement:
    """Apply s -> min(s, t) to a PSD element via per-block eigendecomposition."""
    if not is_positive(W, tol):
        raise PreconditionError("functional calculus needs a PSD argument")
    upper = op_norm(W)
    slack = tol * max(1.0, upper)
    if t < -slack or t > upper + slack:
        raise DomainError(f"cutoff t={t} outside [0, {upper}]")
    t = min(max(t, 0.0), upper)
    blocks = []
    for b in W.blocks:
        herm = 0.5 * (b + b.conj().T)
        vals, vecs = np.linalg.eigh(herm)
        blocks.append((vecs * np.minimum(vals, t)) @ vecs.conj().T)
    return W.algebra.element(blocks)


def make_grid_algebra(n_points: int) -> CStarAlgebra:
    """Commutative algebra of functions on a grid: n_points 1x1 blocks.

    Models continuous functions on an interval by their values at grid
    points; the norm becomes the max of |values|.
    """
    if n_points < 2:
        raise DomainError("grid algebra needs at least 2 points")
    return CStarAlgebra((1,) * int(n_points))


def grid_element(algebra: CStarAlgebra, values) -> AlgebraElement:
    """Element of a grid algebra from a flat list of values."""
    values = np.asarray(values, dtype=complex).ravel()
    if len(values) != len(algebra.block_dims) or not algebra.commutative:
        raise StructureError("grid_element needs one value per 1x1 block")
    return algebra.element([v.reshape(1, 1) for v in values])
