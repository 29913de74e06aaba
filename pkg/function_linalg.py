"""
Riesz-CG Function Linear Algebra
Vectors and matrices over the sampled Riesz algebra: A-inner products,
A-norms, positive definiteness, ordered eigenfunctions and the orthogonal
decomposition of symmetric bilinear forms
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from config import ToleranceConfig
from errors import (
    DimensionMismatch,
    EigenNoConvergence,
    NotPositiveDefinite,
    NotSymmetric,
    SpaceMismatch,
)
from riesz_algebra import (
    DEFAULT_TOLERANCE,
    AlgebraElement,
    MeasureSpace,
    absolute,
    ae_equal,
    in_S,
    inf_over_space,
    invert,
    is_ae_zero,
    is_strictly_positive,
    sqrt_strict,
    sup_over_space,
)

logger = logging.getLogger(__name__)

JACOBI_MAX_SWEEPS = 50
JACOBI_REL_TOL = 1e-14


def _frozen(values: np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FunctionVector:
    """n entries of the algebra on one measure space; values has shape (n, m)"""
    space: MeasureSpace
    values: np.ndarray

    __array_ufunc__ = None

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 2 or values.shape[1] != self.space.m or values.shape[0] < 1:
            raise DimensionMismatch(f"vector values must have shape (n, {self.space.m}), got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("sample values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def entries(self) -> List[AlgebraElement]:
        return [AlgebraElement(self.space, row) for row in self.values]

    def __getitem__(self, i: int) -> AlgebraElement:
        return AlgebraElement(self.space, self.values[i])

    def __len__(self) -> int:
        return self.n

    def at(self, sample: int) -> np.ndarray:
        """Numeric vector x(sample)"""
        return np.array(self.values[:, sample])

    def __add__(self, other: "FunctionVector") -> "FunctionVector":
        _check_vectors(self, other)
        return FunctionVector(self.space, self.values + other.values)

    def __sub__(self, other: "FunctionVector") -> "FunctionVector":
        _check_vectors(self, other)
        return FunctionVector(self.space, self.values - other.values)

    def __neg__(self) -> "FunctionVector":
        return FunctionVector(self.space, -self.values)

    def __mul__(self, c) -> "FunctionVector":
        return scale(c, self)

    __rmul__ = __mul__

    @classmethod
    def from_elements(cls, elements: Sequence[AlgebraElement]) -> "FunctionVector":
        if not elements:
            raise DimensionMismatch("vector needs at least one entry")
        space = elements[0].space
        for e in elements[1:]:
            if not e.space.same_as(space):
                raise SpaceMismatch("vector entries live on different spaces")
        return cls(space, np.stack([e.values for e in elements]))

    @classmethod
    def zeros(cls, space: MeasureSpace, n: int) -> "FunctionVector":
        return cls(space, np.zeros((int(n), space.m)))

    @classmethod
    def constant(cls, space: MeasureSpace, entries: Sequence[float]) -> "FunctionVector":
        entries = np.asarray(entries, dtype=float).reshape(-1)
        return cls(space, np.repeat(entries[:, None], space.m, axis=1))

    @classmethod
    def basis(cls, space: MeasureSpace, n: int, i: int) -> "FunctionVector":
        """Standard basis vector e_i of R^n"""
        values = np.zeros((int(n), space.m))
        values[i] = 1.0
        return cls(space, values)


@dataclass(frozen=True, eq=False)
class FunctionMatrix:
    """n x n entries of the algebra on one measure space; values has shape (n, n, m)"""
    space: MeasureSpace
    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        if (values.ndim != 3 or values.shape[0] != values.shape[1]
                or values.shape[2] != self.space.m or values.shape[0] < 1):
            raise DimensionMismatch(f"matrix values must have shape (n, n, {self.space.m}), got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("sample values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    def entry(self, i: int, j: int) -> AlgebraElement:
        return AlgebraElement(self.space, self.values[i, j])

    @property
    def entries(self) -> List[List[AlgebraElement]]:
        return [[self.entry(i, j) for j in range(self.n)] for i in range(self.n)]

    def at(self, sample: int) -> np.ndarray:
        """Numeric matrix A(sample)"""
        return np.array(self.values[:, :, sample])

    def stacked(self) -> np.ndarray:
        """Per-sample matrices as an (m, n, n) array"""
        return np.moveaxis(self.values, 2, 0).copy()

    @classmethod
    def from_elements(cls, rows: Sequence[Sequence[AlgebraElement]]) -> "FunctionMatrix":
        space = rows[0][0].space
        for row in rows:
            if len(row) != len(rows):
                raise DimensionMismatch("matrix must be square")
            for e in row:
                if not e.space.same_as(space):
                    raise SpaceMismatch("matrix entries live on different spaces")
        return cls(space, np.array([[e.values for e in row] for row in rows]))

    @classmethod
    def from_stacked(cls, space: MeasureSpace, mats: np.ndarray) -> "FunctionMatrix":
        """Build from per-sample matrices of shape (m, n, n)"""
        return cls(space, np.moveaxis(np.asarray(mats, dtype=float), 0, 2))

    @classmethod
    def constant(cls, space: MeasureSpace, matrix: Sequence[Sequence[float]]) -> "FunctionMatrix":
        matrix = np.asarray(matrix, dtype=float)
        return cls(space, np.repeat(matrix[:, :, None], space.m, axis=2))

    @classmethod
    def identity(cls, space: MeasureSpace, n: int) -> "FunctionMatrix":
        return cls.constant(space, np.eye(int(n)))

    @classmethod
    def diagonal(cls, elements: Sequence[AlgebraElement]) -> "FunctionMatrix":
        space = elements[0].space
        n = len(elements)
        values = np.zeros((n, n, space.m))
        for i, e in enumerate(elements):
            if not e.space.same_as(space):
                raise SpaceMismatch("diagonal entries live on different spaces")
            values[i, i] = e.values
        return cls(space, values)


@dataclass
class SpectralSummary:
    """Ordered eigenfunctions of a symmetric function matrix"""
    lambdas: List[AlgebraElement]  # lambda_1 <= ... <= lambda_n pointwise
    eigvecs: List[FunctionVector]  # pointwise orthonormal
    lambda_under: float
    lambda_over: float
    kappa: float

    def pointwise_kappa(self) -> AlgebraElement:
        """kappa(x) = lambda_n(x) / lambda_1(x); 0 where lambda_1(x) <= 0"""
        low = self.lambdas[0].values
        high = self.lambdas[-1].values
        ratio = np.divide(high, low, out=np.zeros_like(low), where=low > 0)
        return AlgebraElement(self.lambdas[0].space, ratio)


@dataclass
class FormDecomposition:
    """M = R x_1 (+) ... (+) R x_k (+) N for a symmetric bilinear form"""
    ortho_basis: List[FunctionVector] = field(default_factory=list)
    radical_basis: List[FunctionVector] = field(default_factory=list)
    pivots: List[int] = field(default_factory=list)  # generator index chosen at each step

    @property
    def rank(self) -> int:
        return len(self.ortho_basis)

    def gram_matrix(self, B: FunctionMatrix) -> np.ndarray:
        """b(x_i, x_j) over the orthogonal basis, shape (rank, rank, m); empty at rank 0"""
        k = len(self.ortho_basis)
        values = np.zeros((k, k, B.space.m))
        for i, xi in enumerate(self.ortho_basis):
            for j, xj in enumerate(self.ortho_basis):
                values[i, j] = dot_A(xi, xj, B).values
        return values


# === checks ===

def _check_vectors(x: FunctionVector, y: FunctionVector):
    if not x.space.same_as(y.space):
        raise SpaceMismatch("vectors live on different spaces")
    if x.n != y.n:
        raise DimensionMismatch(f"vector lengths differ ({x.n} vs {y.n})")


def _check_matvec(A: FunctionMatrix, x: FunctionVector):
    if not A.space.same_as(x.space):
        raise SpaceMismatch("matrix and vector live on different spaces")
    if A.n != x.n:
        raise DimensionMismatch(f"matrix is {A.n}x{A.n} but vector has {x.n} entries")


# === module operations ===

def scale(c: Union[AlgebraElement, float], x: FunctionVector) -> FunctionVector:
    """c * x for an algebra element or real c"""
    if isinstance(c, AlgebraElement):
        if not c.space.same_as(x.space):
            raise SpaceMismatch("scalar and vector live on different spaces")
        return FunctionVector(x.space, x.values * c.values[None, :])
    return FunctionVector(x.space, float(c) * x.values)


def matvec(A: FunctionMatrix, x: FunctionVector) -> FunctionVector:
    """(A x)_i = sum_j A_ij x_j in the algebra, summed in order of j"""
    _check_matvec(A, x)
    values = A.values[:, 0, :] * x.values[0]
    for j in range(1, A.n):
        values = values + A.values[:, j, :] * x.values[j]
    return FunctionVector(x.space, values)


def dot(x: FunctionVector, y: FunctionVector) -> AlgebraElement:
    """x^T y in the algebra, summed in order of i"""
    _check_vectors(x, y)
    values = x.values[0] * y.values[0]
    for i in range(1, x.n):
        values = values + x.values[i] * y.values[i]
    return AlgebraElement(x.space, values)


def dot_A(x: FunctionVector, y: FunctionVector, A: FunctionMatrix) -> AlgebraElement:
    """<x, y>_A = x^T A y"""
    _check_vectors(x, y)
    return dot(x, matvec(A, y))


def is_zero_vector(x: FunctionVector, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> bool:
    return all(is_ae_zero(e, tol) for e in x.entries)


def norm_A(x: FunctionVector, A: FunctionMatrix,
           tol: ToleranceConfig = DEFAULT_TOLERANCE) -> AlgebraElement:
    """
    ||x||_A = sqrt(<x, x>_A), with ||0||_A = 0.

    Raises:
        NotPositiveDefinite: <x, x>_A is not strictly positive for a nonzero x
    """
    if is_zero_vector(x, tol):
        return AlgebraElement(x.space, np.zeros(x.space.m))
    square = dot_A(x, x, A)
    if not is_strictly_positive(square, tol):
        raise NotPositiveDefinite("<x, x>_A is not strictly positive")
    return sqrt_strict(square, tol)


def norm_A_pointwise(x: FunctionVector, A: FunctionMatrix) -> AlgebraElement:
    """sqrt(max(<x, x>_A, 0)) sample by sample; total on vectors that vanish on part of X"""
    square = dot_A(x, x, A)
    return AlgebraElement(x.space, np.sqrt(np.maximum(square.values, 0.0)))


def is_symmetric(A: FunctionMatrix, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> bool:
    for i in range(A.n):
        for j in range(i + 1, A.n):
            if not ae_equal(A.entry(i, j), A.entry(j, i), tol):
                return False
    return True


def is_positive_definite(A: FunctionMatrix, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> bool:
    """Symmetric a.e. with minimum eigenvalue > tau at every positive-weight sample"""
    if not is_symmetric(A, tol):
        return False
    support = A.space.support
    mats = A.stacked()[support]
    mats = 0.5 * (mats + np.swapaxes(mats, 1, 2))
    tau = tol.threshold(A.values, A.space.weights)
    lowest = np.linalg.eigvalsh(mats)[:, 0]
    return bool(np.all(lowest > tau))


# === eigenfunctions ===

def _off_diagonal_norm(a: np.ndarray) -> np.ndarray:
    off = a * (1.0 - np.eye(a.shape[1]))
    return np.sqrt(np.sum(off * off, axis=(1, 2)))


def _rotate(a: np.ndarray, v: np.ndarray, p: int, q: int):
    """One Jacobi rotation annihilating a[:, p, q] in every sample at once"""
    apq = a[:, p, q]
    active = apq != 0.0
    if not np.any(active):
        return
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        theta = np.where(active, (a[:, q, q] - a[:, p, p]) / (2.0 * np.where(active, apq, 1.0)), 0.0)
        t = np.where(active, 1.0 / (theta + np.copysign(np.hypot(theta, 1.0), theta)), 0.0)
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c
    c_, s_ = c[:, None], s[:, None]

    col_p, col_q = a[:, :, p].copy(), a[:, :, q].copy()
    a[:, :, p] = c_ * col_p - s_ * col_q
    a[:, :, q] = s_ * col_p + c_ * col_q
    row_p, row_q = a[:, p, :].copy(), a[:, q, :].copy()
    a[:, p, :] = c_ * row_p - s_ * row_q
    a[:, q, :] = s_ * row_p + c_ * row_q
    a[:, p, q] = 0.0
    a[:, q, p] = 0.0

    vp, vq = v[:, :, p].copy(), v[:, :, q].copy()
    v[:, :, p] = c_ * vp - s_ * vq
    v[:, :, q] = s_ * vp + c_ * vq


def jacobi_eigh(mats: np.ndarray, max_sweeps: int = JACOBI_MAX_SWEEPS,
                rel_tol: float = JACOBI_REL_TOL) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Cyclic Jacobi diagonalization of a stack of symmetric matrices.

    Args:
        mats: (m, n, n) symmetric matrices
        max_sweeps: Sweep limit
        rel_tol: Stop when off-diagonal Frobenius norm <= rel_tol * Frobenius norm

    Returns:
        (eigenvalues (m, n) ascending, eigenvectors (m, n, n) as columns, converged (m,))
    """
    a = np.array(mats, dtype=float, copy=True)
    m, n, _ = a.shape
    v = np.broadcast_to(np.eye(n), (m, n, n)).copy()
    fro = np.sqrt(np.sum(a * a, axis=(1, 2)))

    converged = _off_diagonal_norm(a) <= rel_tol * fro
    sweeps = 0
    while not np.all(converged) and sweeps < max_sweeps:
        for p in range(n - 1):
            for q in range(p + 1, n):
                _rotate(a, v, p, q)
        sweeps += 1
        converged = _off_diagonal_norm(a) <= rel_tol * fro
    logger.debug("Jacobi finished after %d sweeps (%d/%d samples converged)",
                 sweeps, int(converged.sum()), m)

    evals = np.einsum("mii->mi", a).copy()
    order = np.argsort(evals, axis=1, kind="stable")
    evals = np.take_along_axis(evals, order, axis=1)
    v = np.take_along_axis(v, order[:, None, :], axis=2)

    # largest-magnitude component positive; argmax picks the lowest index on ties
    big = np.argmax(np.abs(v), axis=1)
    lead = np.take_along_axis(v, big[:, None, :], axis=1)[:, 0, :]
    v = v * np.where(lead < 0, -1.0, 1.0)[:, None, :]
    return evals, v, converged


def eigen_functions(A: FunctionMatrix, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> SpectralSummary:
    """
    Ordered eigenvalue functions and eigenvector functions of a symmetric matrix.

    Raises:
        NotSymmetric: A is not symmetric a.e.
        EigenNoConvergence: Jacobi failed at a positive-weight sample
    """
    if not is_symmetric(A, tol):
        raise NotSymmetric("eigen_functions requires a symmetric matrix")
    space = A.space
    mats = A.stacked()
    mats = 0.5 * (mats + np.swapaxes(mats, 1, 2))
    evals, evecs, converged = jacobi_eigh(mats)

    failed = np.flatnonzero(space.support & ~converged)
    if failed.size:
        raise EigenNoConvergence(int(failed[0]), JACOBI_MAX_SWEEPS)

    lambdas = [AlgebraElement(space, evals[:, j]) for j in range(A.n)]
    eigvecs = [FunctionVector(space, evecs[:, :, j].T) for j in range(A.n)]
    lambda_under = inf_over_space(lambdas[0])
    lambda_over = sup_over_space(lambdas[-1])
    kappa = lambda_over / lambda_under if lambda_under > 0 else float("inf")
    return SpectralSummary(lambdas, eigvecs, lambda_under, lambda_over, kappa)


# === polynomials in A ===

def poly_apply(q, A: FunctionMatrix, x: FunctionVector) -> FunctionVector:
    """q(A) x by Horner's rule, q an AlgebraPolynomial"""
    _check_matvec(A, x)
    coeffs = q.coeffs
    y = scale(coeffs[-1], x)
    for c in reversed(coeffs[:-1]):
        y = matvec(A, y) + scale(c, x)
    return y


def poly_apply_bound_check(q, A: FunctionMatrix, x: FunctionVector, grid: int = 257,
                           tol: ToleranceConfig = DEFAULT_TOLERANCE) -> Tuple[AlgebraElement, float]:
    """
    Both sides of ||q(A) x||_A <= M^A(q) ||x||_A.

    Returns:
        (||q(A) x||_A, M^A(q) over [lambda_under, lambda_over])
    """
    from rate_bounds import M_sup_A

    spectrum = eigen_functions(A, tol)
    if not spectrum.lambda_under > 0:
        raise NotPositiveDefinite("smallest eigenfunction is not bounded away from zero")
    lhs = norm_A_pointwise(poly_apply(q, A, x), A)
    rhs = M_sup_A(q, spectrum.lambda_under, spectrum.lambda_over, grid)
    return lhs, rhs


# === bilinear forms ===

def orthogonal_decompose(B: FunctionMatrix,
                         tol: ToleranceConfig = DEFAULT_TOLERANCE) -> FormDecomposition:
    """
    Gram-Schmidt over the algebra for the form b(u, v) = u^T B v.

    Starting from the standard basis, repeatedly pivot on the remaining
    generator whose self-pairing lies in S with the largest inf |b(v, v)|,
    and project it out of the others. Generators never reaching S form the
    radical part.

    Raises:
        NotSymmetric: B is not symmetric a.e.
    """
    if not is_symmetric(B, tol):
        raise NotSymmetric("orthogonal_decompose requires a symmetric form")
    space = B.space
    remaining = [(i, FunctionVector.basis(space, B.n, i)) for i in range(B.n)]
    result = FormDecomposition()

    while remaining:
        best = None
        for pos, (index, v) in enumerate(remaining):
            self_pair = dot_A(v, v, B)
            if not in_S(self_pair, tol):
                continue
            score = inf_over_space(absolute(self_pair))
            if best is None or score > best[0]:
                best = (score, pos, self_pair)
        if best is None:
            break

        _, pos, pivot_pair = best
        index, pivot = remaining.pop(pos)
        pivot_inverse = invert(pivot_pair, tol)
        result.ortho_basis.append(pivot)
        result.pivots.append(index)
        logger.debug("pivot on generator %d (inf |b(v,v)| = %.3e)", index, best[0])

        remaining = [
            (i, w - scale(dot_A(w, pivot, B) * pivot_inverse, pivot))
            for i, w in remaining
        ]

    result.radical_basis = [v for _, v in remaining]
    return result
