"""
Riesz-CG Verifier
Rule-based checks of a finished CG trace: orthogonality, Krylov membership,
minimality and the beta identity
"""
import logging
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

from cg_solver import CgOutcome, krylov_basis
from config import ToleranceConfig
from function_linalg import FunctionMatrix, FunctionVector, matvec, norm_A_pointwise, scale
from riesz_algebra import DEFAULT_TOLERANCE, AlgebraElement

logger = logging.getLogger(__name__)


class CheckType(str, Enum):
    """Types of verification"""
    ORTHOGONALITY = "orthogonality"
    KRYLOV = "krylov"
    MINIMALITY = "minimality"
    BETA_FORM = "beta_form"
    EQUIVALENCE = "equivalence"


class ErrorSeverity(str, Enum):
    """Severity levels for errors"""
    HARD = "hard"  # property violated beyond tolerance
    SOFT = "soft"  # suspicious but within the looser tolerance


class VerificationResult:
    """Result of verification"""

    def __init__(self, valid: bool = True):
        self.valid = valid
        self.errors: List[Dict[str, Any]] = []
        self.warnings: List[Dict[str, Any]] = []
        self.metrics: Dict[str, float] = {}

    def add_error(self, error_type, message: str, severity: ErrorSeverity = ErrorSeverity.HARD):
        """Add an error"""
        # Handle enum types
        if hasattr(error_type, 'value'):
            error_type = error_type.value
        self.errors.append({
            "type": error_type,
            "message": message,
            "severity": severity.value
        })
        self.valid = False

    def add_warning(self, warning_type, message: str):
        """Add a warning"""
        if hasattr(warning_type, 'value'):
            warning_type = warning_type.value
        self.warnings.append({
            "type": warning_type,
            "message": message
        })

    def set_metric(self, name: str, value: float):
        self.metrics[name] = float(value)

    def is_hard_error(self) -> bool:
        """Check if any hard errors exist"""
        return any(e["severity"] == ErrorSeverity.HARD.value for e in self.errors)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "valid": self.valid,
            "errors": list(self.errors),
            "warnings": list(self.warnings),
            "metrics": dict(self.metrics),
        }

    def summary(self) -> str:
        """Get verification summary"""
        lines = [f"Valid: {self.valid}"]
        for name, value in self.metrics.items():
            lines.append(f"  {name}: {value:.3e}")
        if self.errors:
            lines.append(f"Errors: {len(self.errors)}")
            lines.extend(f"  - [{e['type']}] {e['message']}" for e in self.errors)
        if self.warnings:
            lines.append(f"Warnings: {len(self.warnings)}")
            lines.extend(f"  - [{w['type']}] {w['message']}" for w in self.warnings)
        return "\n".join(lines)


def problem_scale(A: FunctionMatrix, b: FunctionVector) -> float:
    """sup_X ||b||_2 * sup_X ||A||_F over positive-weight samples"""
    support = A.space.support
    b_norm = np.sqrt(np.sum(b.values[:, support] ** 2, axis=0))
    a_norm = np.sqrt(np.sum(A.values[:, :, support] ** 2, axis=(0, 1)))
    return float(np.max(b_norm) * np.max(a_norm))


def _pair_sup(left: np.ndarray, right: np.ndarray, mask: np.ndarray, support: np.ndarray) -> float:
    """max over masked (i, j) and positive-weight samples of |left_i^T right_j|"""
    pairs = np.abs(np.einsum("inm,jnm->ijm", left, right))[:, :, support]
    if not np.any(mask):
        return 0.0
    return float(np.max(pairs[mask]))


def _krylov_residual(A: FunctionMatrix, r0: FunctionVector, target: FunctionVector, j: int,
                     support: np.ndarray) -> float:
    """Worst relative lstsq residual of target(x) in span{r0, ..., A^j r0}(x)"""
    basis = np.stack([v.values for v in krylov_basis(A, r0, j)], axis=1)  # (n, j + 1, m)
    worst = 0.0
    for sample in np.flatnonzero(support):
        K = basis[:, :, sample]
        y = target.values[:, sample]
        reference = np.linalg.norm(r0.values[:, sample])
        if reference == 0.0:
            continue
        norms = np.linalg.norm(K, axis=0)
        norms[norms == 0.0] = 1.0
        coeffs, *_ = np.linalg.lstsq(K / norms, y, rcond=None)
        residual = np.linalg.norm((K / norms) @ coeffs - y) / reference
        worst = max(worst, float(residual))
    return worst


def verify_orthogonality(outcome: CgOutcome, A: FunctionMatrix,
                         tol: ToleranceConfig = DEFAULT_TOLERANCE,
                         factor: float = 1e-8, krylov_tol: float = 1e-6) -> VerificationResult:
    """
    Measure the conjugacy relations of a CG trace.

    Computes sup_X |p_i^T r_j| (i < j), sup_X |r_i^T r_j| (i != j) and
    sup_X |<p_i, p_j>_A| (i != j); each must stay below factor times the
    problem scale. Krylov membership residuals of r_j and p_j are reported
    as warnings when they exceed krylov_tol.

    Args:
        outcome: CG outcome with its records
        A: System matrix
        tol: Tolerance (absolute slack added to the limit)
        factor: Relative limit for the three maxima
        krylov_tol: Relative limit for the Krylov residuals

    Returns:
        VerificationResult with the measured maxima in metrics
    """
    result = VerificationResult()
    records = outcome.records
    first = records[0]
    b = first.r + matvec(A, first.x)
    limit = factor * problem_scale(A, b) + tol.tau_zero
    result.set_metric("limit", limit)

    support = A.space.support
    R = np.stack([rec.r.values for rec in records])
    P = np.stack([rec.p.values for rec in records])
    AP = np.einsum("nkm,jkm->jnm", A.values, P)
    count = len(records)
    upper = np.triu(np.ones((count, count), dtype=bool), k=1)
    off = ~np.eye(count, dtype=bool)

    maxima = {
        "p_r": _pair_sup(P, R, upper, support),
        "r_r": _pair_sup(R, R, off, support),
        "p_Ap": _pair_sup(P, AP, off, support),
    }
    for name, value in maxima.items():
        result.set_metric(name, value)
        if value > limit:
            result.add_error(CheckType.ORTHOGONALITY, f"sup |{name}| = {value:.3e} exceeds {limit:.3e}")

    krylov_r = krylov_p = 0.0
    for j, rec in enumerate(records[1:], start=1):
        krylov_r = max(krylov_r, _krylov_residual(A, first.r, rec.r, j, support))
        krylov_p = max(krylov_p, _krylov_residual(A, first.r, rec.p, j, support))
    result.set_metric("krylov_r", krylov_r)
    result.set_metric("krylov_p", krylov_p)
    if max(krylov_r, krylov_p) > krylov_tol:
        result.add_warning(CheckType.KRYLOV,
                           f"Krylov residual {max(krylov_r, krylov_p):.3e} exceeds {krylov_tol:.1e}")

    if count < 2:
        result.add_warning(CheckType.ORTHOGONALITY, "single record, no pairs to check")
    logger.info("orthogonality: %s", "ok" if result.valid else "violated")
    return result


def _krylov_candidate(A: FunctionMatrix, r0: FunctionVector, base: FunctionVector, k: int,
                      rng: np.random.Generator) -> FunctionVector:
    """base + sum_i c_i(x) A^i r0 with random small function coefficients"""
    space = A.space
    candidate = base
    magnitude = 10.0 ** rng.uniform(-6.0, 0.0)
    for v in krylov_basis(A, r0, k - 1):
        norms = np.linalg.norm(v.values, axis=0)
        norms[norms == 0.0] = 1.0
        c = AlgebraElement(space, magnitude * rng.standard_normal(space.m) / norms)
        candidate = candidate + scale(c, v)
    return candidate


def verify_minimality(outcome: CgOutcome, A: FunctionMatrix, ell: Optional[int] = None,
                      k: Optional[int] = None, candidates: int = 100,
                      rng: Optional[np.random.Generator] = None,
                      tol: ToleranceConfig = DEFAULT_TOLERANCE) -> VerificationResult:
    """
    ||x_ell - x_k||_A <= ||x_ell - x||_A + tau pointwise, for random x in x_0 + K_{k-1}(A, r_0).

    Candidates are perturbations of x_k inside the Krylov module; every k in
    1..ell-1 is checked unless k is given.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    records = outcome.records
    ell = ell if ell is not None else records[-1].k
    steps = [k] if k is not None else list(range(1, ell))
    result = VerificationResult()
    support = A.space.support
    r0 = records[0].r
    target = records[ell].x

    worst = 0.0
    for step in steps:
        best = norm_A_pointwise(target - records[step].x, A).values[support]
        tau = tol.threshold(best)
        for _ in range(candidates):
            x = _krylov_candidate(A, r0, records[step].x, step, rng)
            other = norm_A_pointwise(target - x, A).values[support]
            excess = float(np.max(best - other))
            worst = max(worst, excess)
            if excess > tau:
                result.add_error(CheckType.MINIMALITY,
                                 f"k={step}: candidate beats x_k by {excess:.3e}")
                break
    result.set_metric("max_excess", worst)
    return result


def verify_beta_form(outcome: CgOutcome, rtol: float = 1e-8,
                     min_residual_ratio: float = 1e-8) -> VerificationResult:
    """
    beta_k versus -(r_k^T r_k) / (r_{k-1}^T r_{k-1}).

    Steps whose residual has dropped below min_residual_ratio times the
    initial one are skipped; cancellation dominates there.
    """
    result = VerificationResult()
    records = outcome.records
    support = records[0].r.space.support
    rr = [np.einsum("nm,nm->m", rec.r.values, rec.r.values)[support] for rec in records]
    floor = min_residual_ratio * float(np.max(rr[0])) if rr[0].size else 0.0

    worst = 0.0
    for k in range(1, len(records)):
        beta = records[k].beta
        if beta is None or float(np.min(rr[k])) < floor or float(np.min(rr[k - 1])) <= 0.0:
            continue
        classical = -rr[k] / rr[k - 1]
        deviation = float(np.max(np.abs(beta.values[support] - classical)))
        deviation /= max(float(np.max(np.abs(classical))), np.finfo(float).tiny)
        worst = max(worst, deviation)
        if deviation > rtol:
            result.add_error(CheckType.BETA_FORM, f"k={k}: relative deviation {deviation:.3e}")
    result.set_metric("max_relative_deviation", worst)
    return result
