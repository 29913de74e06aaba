"""
Riesz-CG Function Algebra
Sampled measurable functions on a finite measure space, with the order,
lattice, square-root and S-inversion structure of a real Riesz algebra
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from config import ToleranceConfig
from errors import (
    EmptySpace,
    NegativeWeight,
    NotInvertible,
    NotStrictlyPositive,
    SpaceMismatch,
)

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = ToleranceConfig()

Real = Union[int, float, np.floating]


def _frozen(values: np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MeasureSpace:
    """Finite set of sample points with nonnegative measure weights"""
    weights: np.ndarray
    labels: Optional[Tuple] = None  # reporting only

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen(self.weights))
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def m(self) -> int:
        return int(self.weights.shape[0])

    @property
    def total_measure(self) -> float:
        return float(np.sum(self.weights))

    @property
    def support(self) -> np.ndarray:
        """Boolean mask of positive-weight samples"""
        return self.weights > 0

    def positive_indices(self) -> np.ndarray:
        return np.flatnonzero(self.support)

    def same_as(self, other: "MeasureSpace") -> bool:
        """Structural equality (weights and labels)"""
        if self is other:
            return True
        return (
            self.m == other.m
            and np.array_equal(self.weights, other.weights)
            and self.labels == other.labels
        )

    @classmethod
    def uniform(cls, m: int) -> "MeasureSpace":
        """m samples of unit weight"""
        return make_space(np.ones(int(m)))

    @classmethod
    def gauss_legendre(cls, m: int, lo: float = 0.0, hi: float = 1.0) -> "MeasureSpace":
        """Gauss-Legendre nodes and weights on [lo, hi]; labels are the nodes"""
        if not hi > lo:
            raise EmptySpace(f"interval [{lo}, {hi}] has no length")
        nodes, weights = np.polynomial.legendre.leggauss(int(m))
        half = 0.5 * (hi - lo)
        points = lo + half * (nodes + 1.0)
        return make_space(weights * half, labels=[float(p) for p in points])


def make_space(weights: Sequence[float], labels: Optional[Sequence] = None) -> MeasureSpace:
    """
    Build a measure space from sample weights.

    Raises:
        NegativeWeight: a weight is negative or not finite
        EmptySpace: no weight is strictly positive
    """
    w = np.asarray(weights, dtype=float).reshape(-1)
    for i, value in enumerate(w):
        if not np.isfinite(value) or value < 0:
            raise NegativeWeight(i, float(value))
    if w.size == 0 or not np.any(w > 0):
        raise EmptySpace("measure space needs at least one sample of positive weight")
    if labels is not None and len(labels) != w.size:
        raise ValueError(f"expected {w.size} labels, got {len(labels)}")
    return MeasureSpace(weights=w, labels=tuple(labels) if labels is not None else None)


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    """One sampled measurable function (a canonical representative of its class)"""
    space: MeasureSpace
    values: np.ndarray

    # let numpy scalars defer to our reflected operators
    __array_ufunc__ = None

    def __post_init__(self):
        values = _frozen(np.asarray(self.values, dtype=float).reshape(-1))
        if values.shape[0] != self.space.m:
            raise ValueError(f"expected {self.space.m} sample values, got {values.shape[0]}")
        if not np.all(np.isfinite(values)):
            raise ValueError("sample values must be finite")
        object.__setattr__(self, "values", values)

    def __add__(self, other):
        return add(self, _lift(self.space, other))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, _lift(self.space, other))

    def __rsub__(self, other):
        return sub(_lift(self.space, other), self)

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            return mul(self, other)
        return scalar_mul(other, self)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __abs__(self):
        return absolute(self)

    def __repr__(self) -> str:
        return f"AlgebraElement(m={self.space.m}, values={self.values.tolist()})"


def _lift(space: MeasureSpace, value) -> AlgebraElement:
    if isinstance(value, AlgebraElement):
        return value
    return constant(space, float(value))


def _check_same(a: AlgebraElement, b: AlgebraElement):
    if not a.space.same_as(b.space):
        raise SpaceMismatch(f"spaces differ (m={a.space.m} vs m={b.space.m})")


def element(space: MeasureSpace, values: Sequence[float]) -> AlgebraElement:
    return AlgebraElement(space, np.asarray(values, dtype=float))


def constant(space: MeasureSpace, r: Real) -> AlgebraElement:
    """Embed the real r as r*1"""
    return AlgebraElement(space, np.full(space.m, float(r)))


def zero(space: MeasureSpace) -> AlgebraElement:
    return constant(space, 0.0)


# === ring structure ===

def add(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    _check_same(a, b)
    return AlgebraElement(a.space, a.values + b.values)


def sub(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    _check_same(a, b)
    return AlgebraElement(a.space, a.values - b.values)


def mul(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    _check_same(a, b)
    return AlgebraElement(a.space, a.values * b.values)


def neg(a: AlgebraElement) -> AlgebraElement:
    return AlgebraElement(a.space, -a.values)


def scalar_mul(r: Real, a: AlgebraElement) -> AlgebraElement:
    return AlgebraElement(a.space, float(r) * a.values)


# === order ===

def _support_values(a: AlgebraElement) -> np.ndarray:
    return a.values[a.space.support]


def _tau(a: AlgebraElement, tol: ToleranceConfig) -> float:
    return tol.threshold(a.values, a.space.weights)


def is_geq_zero(a: AlgebraElement, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> bool:
    """a >= 0: no value below -tau on a set of positive measure"""
    return bool(np.all(_support_values(a) >= -_tau(a, tol)))


def leq(a: AlgebraElement, b: AlgebraElement, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> bool:
    """a <= b iff b - a >= 0"""
    return is_geq_zero(sub(b, a), tol)


def is_ae_zero(a: AlgebraElement, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> bool:
    return bool(np.all(np.abs(_support_values(a)) <= _tau(a, tol)))


def is_positive(a: AlgebraElement, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> bool:
    """a > 0: a >= 0 and a is not zero a.e."""
    return is_geq_zero(a, tol) and not is_ae_zero(a, tol)


def is_strictly_positive(a: AlgebraElement, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> bool:
    """a strictly positive: value > tau at every positive-weight sample"""
    return bool(np.all(_support_values(a) > _tau(a, tol)))


def in_S(a: AlgebraElement, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> bool:
    """Membership in the one-signed multiplicative set S"""
    return is_strictly_positive(a, tol) or is_strictly_positive(neg(a), tol)


def s_violations(a: AlgebraElement, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> List[int]:
    """
    Positive-weight samples that keep a out of S.

    The dominant sign is the one carrying more measure (ties go to positive);
    every positive-weight sample not strictly of that sign is reported.
    """
    tau = _tau(a, tol)
    weights = a.space.weights
    support = a.space.support
    pos = support & (a.values > tau)
    negs = support & (a.values < -tau)
    dominant = pos if weights[pos].sum() >= weights[negs].sum() else negs
    return [int(i) for i in np.flatnonzero(support & ~dominant)]


def ae_equal(a: AlgebraElement, b: AlgebraElement,
             tol: ToleranceConfig = DEFAULT_TOLERANCE) -> bool:
    """|a - b| <= tau at every positive-weight sample; tau scales with both operands"""
    _check_same(a, b)
    tau = tol.threshold(np.stack([a.values, b.values]), a.space.weights)
    return bool(np.all(np.abs(_support_values(sub(a, b))) <= tau))


# === localization ===

def invert(a: AlgebraElement, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> AlgebraElement:
    """
    Inverse of an element of S.

    Zero-weight samples get the value 0.

    Raises:
        NotInvertible: a is not one-signed a.e.
    """
    bad = s_violations(a, tol)
    if bad:
        raise NotInvertible(bad)
    support = a.space.support
    out = np.zeros(a.space.m)
    out[support] = 1.0 / a.values[support]
    return AlgebraElement(a.space, out)


def partial_inverse(a: AlgebraElement, tol: ToleranceConfig = DEFAULT_TOLERANCE,
                    floor: Optional[Union[float, np.ndarray]] = None) -> Tuple[AlgebraElement, List[int]]:
    """
    Representative h with h = 1/a where |a| > tau and h = 0 elsewhere.

    Args:
        a: Element to invert where possible
        tol: Tolerance resolving tau
        floor: Cutoff used instead of tau, scalar or per sample

    Returns:
        (h, positive-weight sample indices where h was set to 0)
    """
    cutoff = _tau(a, tol) if floor is None else np.asarray(floor, dtype=float)
    usable = np.abs(a.values) > cutoff
    out = np.zeros(a.space.m)
    out[usable] = 1.0 / a.values[usable]
    zeroed = np.flatnonzero(a.space.support & ~usable)
    return AlgebraElement(a.space, out), [int(i) for i in zeroed]


# === lattice ===

def sup(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    _check_same(a, b)
    return AlgebraElement(a.space, np.maximum(a.values, b.values))


def inf(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    _check_same(a, b)
    return AlgebraElement(a.space, np.minimum(a.values, b.values))


def absolute(a: AlgebraElement) -> AlgebraElement:
    """|a| = sup{a, -a}"""
    return sup(a, neg(a))


def positive_part(a: AlgebraElement) -> AlgebraElement:
    return sup(a, zero(a.space))


def negative_part(a: AlgebraElement) -> AlgebraElement:
    return sup(neg(a), zero(a.space))


def sqrt_strict(a: AlgebraElement, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> AlgebraElement:
    """
    The strictly positive square root of a strictly positive element.

    Raises:
        NotStrictlyPositive: a is not > tau on a set of positive measure
    """
    tau = _tau(a, tol)
    bad = np.flatnonzero(a.space.support & ~(a.values > tau))
    if bad.size:
        raise NotStrictlyPositive(bad)
    return AlgebraElement(a.space, np.sqrt(np.maximum(a.values, 0.0)))


# === reductions over X ===

def sup_over_space(a: AlgebraElement) -> float:
    """max over positive-weight samples"""
    return float(np.max(_support_values(a)))


def inf_over_space(a: AlgebraElement) -> float:
    """min over positive-weight samples"""
    return float(np.min(_support_values(a)))


def integral(a: AlgebraElement) -> float:
    """Weighted sum of sample values"""
    return float(np.dot(a.space.weights, a.values))
