"""
Riesz-CG Rate Bounds
Chebyshev polynomials, the normalized min-max polynomial, the sup-functionals
m(p) and M^A(q), and the convergence-rate verifier for CG traces
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from numpy.polynomial import chebyshev as chebyshev_basis
from numpy.polynomial import polynomial as power_basis

from config import ToleranceConfig
from errors import BadInterval, BadKappa, SingularSpectrum, SpaceMismatch
from function_linalg import FunctionMatrix, FunctionVector, eigen_functions, norm_A_pointwise
from riesz_algebra import DEFAULT_TOLERANCE, AlgebraElement

logger = logging.getLogger(__name__)

DEFAULT_GRID = 257


@dataclass
class RealPolynomial:
    """Real polynomial, coefficients in ascending degree"""
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("polynomial coefficients must be finite")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, t):
        return power_basis.polyval(t, self.coeffs)


@dataclass
class AlgebraPolynomial:
    """Polynomial in T with coefficients in the algebra, ascending degree"""
    coeffs: List[AlgebraElement]

    def __post_init__(self):
        if not self.coeffs:
            raise ValueError("polynomial needs at least one coefficient")
        space = self.coeffs[0].space
        for c in self.coeffs[1:]:
            if not c.space.same_as(space):
                raise SpaceMismatch("coefficients live on different spaces")

    @property
    def space(self):
        return self.coeffs[0].space

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def from_real(cls, space, p: RealPolynomial) -> "AlgebraPolynomial":
        """Embed a real polynomial with X-independent coefficients"""
        return cls([AlgebraElement(space, np.full(space.m, c)) for c in p.coeffs])

    def coefficient_array(self) -> np.ndarray:
        """(degree + 1, m) array of coefficient values"""
        return np.stack([c.values for c in self.coeffs])


@dataclass
class BoundStep:
    """Rate check at one iteration"""
    k: int
    lhs_sup: float  # sup_X ||x* - x_k||_A
    rhs: float      # error_bound(kappa, k) * sup_X ||x* - x_0||_A
    holds: bool     # pointwise check at every positive-weight sample
    margin: float   # worst pointwise (bound - error)
    sup_holds: bool = True


@dataclass
class BoundReport:
    """Convergence-rate report for a CG trace"""
    kappa: float
    lambda_under: float
    lambda_over: float
    per_k: List[BoundStep] = field(default_factory=list)
    pointwise_kappa: List[float] = field(default_factory=list)  # kappa(x) per sample

    @property
    def holds(self) -> bool:
        return all(step.holds for step in self.per_k)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kappa": self.kappa,
            "lambda_under": self.lambda_under,
            "lambda_over": self.lambda_over,
            "holds": self.holds,
            "pointwise_kappa": list(self.pointwise_kappa),
            "per_k": [
                {
                    "k": s.k,
                    "lhs_sup": s.lhs_sup,
                    "rhs": s.rhs,
                    "holds": s.holds,
                    "sup_holds": s.sup_holds,
                    "margin": s.margin,
                }
                for s in self.per_k
            ],
        }

    def to_csv_rows(self) -> List[List[Any]]:
        rows: List[List[Any]] = [["k", "lhs_sup", "rhs", "margin"]]
        rows.extend([s.k, s.lhs_sup, s.rhs, s.margin] for s in self.per_k)
        return rows


# === Chebyshev polynomials ===

def chebyshev(k: int, t: float) -> float:
    """
    C_k(t): cos(k arccos t) on [-1, 1], sign^k cosh(k arccosh |t|) outside.

    The cosh branch is accumulated in the log domain; it overflows to inf only
    when the true value does.
    """
    k = int(k)
    if abs(t) <= 1.0:
        return math.cos(k * math.acos(t))
    sign = -1.0 if (t < 0 and k % 2 == 1) else 1.0
    log_growth = k * math.acosh(abs(t))
    if log_growth > 709.0:
        return sign * math.inf
    return sign * 0.5 * (math.exp(log_growth) + math.exp(-log_growth))


def chebyshev_closed_form(k: int, t: float) -> float:
    """C_k(t) = ((t + sqrt(t^2 - 1))^k + (t + sqrt(t^2 - 1))^-k) / 2 in complex arithmetic"""
    z = complex(t) + np.sqrt(complex(t * t - 1.0))
    return float((0.5 * (z ** k + z ** (-k))).real)


def chebyshev_recurrence(k: int, t: float) -> float:
    """C_k(t) from C_{j+1} = 2 t C_j - C_{j-1}"""
    prev, cur = 1.0, float(t)
    if k == 0:
        return prev
    for _ in range(int(k) - 1):
        prev, cur = cur, 2.0 * t * cur - prev
    return cur


def _check_interval(a: float, b: float):
    if not (0 < a < b):
        raise BadInterval(f"need 0 < a < b, got a={a}, b={b}")


def ch_scaled(k: int, t: float, a: float, b: float) -> float:
    """C_k((b + a - 2t)/(b - a)) / C_k((b + a)/(b - a)); equals 1 at t = 0"""
    _check_interval(a, b)
    if k == 0:
        return 1.0
    denominator = chebyshev(k, (b + a) / (b - a))
    if math.isinf(denominator):
        return 0.0
    return chebyshev(k, (b + a - 2.0 * t) / (b - a)) / denominator


def ch_polynomial(k: int, a: float, b: float) -> RealPolynomial:
    """Coefficients of the normalized Chebyshev polynomial on [a, b]"""
    _check_interval(a, b)
    base = chebyshev_basis.cheb2poly([0.0] * int(k) + [1.0])
    inner = np.array([(b + a) / (b - a), -2.0 / (b - a)])
    coef = np.zeros(1)
    for c in reversed(base):
        coef = power_basis.polyadd(power_basis.polymul(coef, inner), [c])
    normalizer = chebyshev(k, (b + a) / (b - a))
    return RealPolynomial(coef / normalizer)


def error_bound(kappa: float, k: int) -> float:
    """2 ((sqrt(kappa) - 1)/(sqrt(kappa) + 1))^k"""
    if not kappa >= 1:
        raise BadKappa(f"kappa must be >= 1, got {kappa}")
    if k == 0:
        return 2.0
    if math.isinf(kappa):
        return 2.0
    root = math.sqrt(kappa)
    return 2.0 * ((root - 1.0) / (root + 1.0)) ** int(k)


# === sup-functionals ===

def chebyshev_grid(a: float, b: float, grid: int = DEFAULT_GRID) -> np.ndarray:
    """Chebyshev-Lobatto points on [a, b], endpoints included"""
    if not a <= b:
        raise BadInterval(f"need a <= b, got a={a}, b={b}")
    if grid < 2:
        raise BadInterval(f"grid needs at least 2 points, got {grid}")
    nodes = np.cos(np.pi * np.arange(grid) / (grid - 1))
    return 0.5 * (a + b) + 0.5 * (b - a) * nodes


def m_sup(p: RealPolynomial, a: float, b: float, grid: int = DEFAULT_GRID) -> float:
    """Grid estimate (from below) of sup_{a <= t <= b} |p(t)|"""
    t = chebyshev_grid(a, b, grid)
    return float(np.max(np.abs(p(t))))


def M_sup_A(q: AlgebraPolynomial, a: float, b: float, grid: int = DEFAULT_GRID) -> float:
    """Grid estimate of sup over positive-weight x and t in [a, b] of |q(x, t)|"""
    t = chebyshev_grid(a, b, grid)
    coeffs = q.coefficient_array()[:, q.space.support]  # (d + 1, m+)
    powers = np.vander(t, N=coeffs.shape[0], increasing=True)  # (grid, d + 1)
    values = powers @ coeffs
    return float(np.max(np.abs(values)))


@dataclass
class MinMaxChain:
    """inf over candidates of M(q) <= m(ch) <= error_bound"""
    kappa: float
    k: int
    candidates_inf: float
    ch_sup: float
    bound: float

    def holds(self, slack: float = 1e-10) -> bool:
        return self.candidates_inf <= self.ch_sup + slack and self.ch_sup <= self.bound + slack


def min_max_chain(kappa: float, k: int, candidates: Sequence[AlgebraPolynomial] = (),
                  grid: int = DEFAULT_GRID, a: float = 1.0) -> MinMaxChain:
    """
    Evaluate the min-max chain on [a, kappa * a].

    The normalized Chebyshev polynomial is always among the candidates, so
    the first link holds by construction; extra candidates (constant term 1,
    degree <= k) can only lower the infimum.
    """
    b = kappa * a
    ch = ch_polynomial(k, a, b) if k > 0 else RealPolynomial([1.0])
    ch_sup = m_sup(ch, a, b, grid)
    values = [ch_sup] + [M_sup_A(q, a, b, grid) for q in candidates]
    return MinMaxChain(kappa, k, min(values), ch_sup, error_bound(kappa, k))


# === rate verification ===

def verify_rate(outcome, A: FunctionMatrix, x_star: FunctionVector,
                tol: ToleranceConfig = DEFAULT_TOLERANCE, slack: float = 0.0) -> BoundReport:
    """
    Check ||x* - x_k||_A <= error_bound(kappa, k) ||x* - x_0||_A for every record.

    kappa comes from the global extrema of the eigenfunctions; kappa(x) per
    sample is reported alongside. The check runs pointwise at each
    positive-weight sample and again after taking sups.

    Raises:
        SingularSpectrum: lambda_under <= tau
    """
    spectrum = eigen_functions(A, tol)
    tau_spectrum = tol.threshold(np.array([spectrum.lambda_over]))
    if spectrum.lambda_under <= tau_spectrum:
        raise SingularSpectrum(f"lambda_under = {spectrum.lambda_under:.3e}")
    kappa = max(1.0, spectrum.kappa)
    report = BoundReport(kappa, spectrum.lambda_under, spectrum.lambda_over,
                         pointwise_kappa=spectrum.pointwise_kappa().values.tolist())

    support = A.space.support
    x0 = outcome.records[0].x
    initial = norm_A_pointwise(x_star - x0, A).values[support]
    tau = tol.threshold(initial) + slack
    initial_sup = float(np.max(initial))

    for record in outcome.records:
        factor = error_bound(kappa, record.k)
        error = norm_A_pointwise(x_star - record.x, A).values[support]
        pointwise_gap = factor * initial - error
        lhs_sup = float(np.max(error))
        rhs = factor * initial_sup
        step = BoundStep(
            k=record.k,
            lhs_sup=lhs_sup,
            rhs=rhs,
            holds=bool(np.all(pointwise_gap >= -tau)),
            margin=float(np.min(pointwise_gap)),
            sup_holds=lhs_sup <= rhs + tau,
        )
        report.per_k.append(step)
        logger.debug("k=%d lhs_sup=%.3e rhs=%.3e holds=%s", step.k, lhs_sup, rhs, step.holds)

    logger.info("rate bound with kappa=%.4g: %s", kappa, "holds" if report.holds else "violated")
    return report
