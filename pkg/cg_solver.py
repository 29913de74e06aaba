"""
Riesz-CG Solver
Conjugate gradient iteration over the sampled Riesz algebra with residue /
control-term semantics, feasibility verdicts and failure-set tracking
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Union

import numpy as np

from config import ToleranceConfig
from errors import DenominatorNotInvertible, DimensionMismatch, NotPositiveDefinite, SpaceMismatch
from function_linalg import (
    FunctionMatrix,
    FunctionVector,
    dot,
    dot_A,
    is_positive_definite,
    matvec,
    scale,
)
from riesz_algebra import (
    AlgebraElement,
    partial_inverse,
    s_violations,
    sup_over_space,
)

logger = logging.getLogger(__name__)


class CgVerdict(str, Enum):
    """How a CG run ended"""
    SUCCESSFUL = "successful"
    INFEASIBLE = "infeasible"
    MAX_ITER_REACHED = "max_iter_reached"


@dataclass
class CgConfig:
    """CG settings"""
    residual_tol: float = 1e-10  # stop when sup_X r^T r < residual_tol**2
    max_iter: Optional[int] = None  # None: the dimension n
    tol: ToleranceConfig = field(default_factory=ToleranceConfig)

    def __post_init__(self):
        if not self.residual_tol > 0:
            raise ValueError(f"residual_tol must be positive, got {self.residual_tol}")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")

    @property
    def residual_threshold(self) -> float:
        return self.residual_tol ** 2


@dataclass
class CgIterationRecord:
    """State after the k-th step"""
    k: int
    x: FunctionVector
    r: FunctionVector
    p: FunctionVector
    alpha: Optional[AlgebraElement]  # None once the residual has vanished
    beta: Optional[AlgebraElement]   # None at k = 0
    alpha_feasible: bool
    residual_sup: float              # sup_X r_k^T r_k
    failure_set: List[int] = field(default_factory=list)      # samples where p_{k-1}^T A p_{k-1} counts as zero
    alpha_witness: List[int] = field(default_factory=list)    # samples keeping alpha_k out of S
    alpha_negative: List[int] = field(default_factory=list)   # samples where alpha_k < -tau
    converged: bool = False
    curvature_scale: Optional[np.ndarray] = None  # p_0^T A p_0 per sample


@dataclass
class CgOutcome:
    """Verdict plus the full trace"""
    verdict: CgVerdict
    records: List[CgIterationRecord]
    final_x: FunctionVector
    infeasible_step: Optional[int] = None
    witness_samples: List[int] = field(default_factory=list)
    pointwise_solved_samples: List[int] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return self.records[-1].k

    def summary(self) -> str:
        lines = [
            f"Verdict: {self.verdict.value}",
            f"Iterations: {self.iterations}",
            f"Final sup r^T r: {self.records[-1].residual_sup:.3e}",
        ]
        if self.verdict == CgVerdict.INFEASIBLE:
            lines.append(f"Infeasible at k={self.infeasible_step}, witness samples {self.witness_samples}")
            if self.pointwise_solved_samples:
                lines.append(f"Solved only pointwise at samples {self.pointwise_solved_samples}")
        return "\n".join(lines)


ProgressCallback = Callable[[str, float], None]


def _check_system(A: FunctionMatrix, b: FunctionVector, x0: FunctionVector):
    for v in (b, x0):
        if not A.space.same_as(v.space):
            raise SpaceMismatch("system parts live on different spaces")
        if v.n != A.n:
            raise DimensionMismatch(f"matrix is {A.n}x{A.n} but a vector has {v.n} entries")


def _curvature_floor(scale: Optional[np.ndarray], cfg: CgConfig) -> Union[float, np.ndarray]:
    """
    Cutoff below which p_k^T A p_k counts as zero at a sample.

    p^T A p is quadratic in p, so the relative cutoff is tau_zero**2 times
    p_0^T A p_0 at the same sample. Without a scale only exact zeros vanish.
    """
    if not cfg.tol.relative:
        return cfg.tol.tau_zero
    if scale is None:
        return 0.0
    return cfg.tol.tau_zero ** 2 * scale


def _control_term(A: FunctionMatrix, k: int, x: FunctionVector, r: FunctionVector,
                  p: FunctionVector, beta: Optional[AlgebraElement], failure_set: List[int],
                  scale: Optional[np.ndarray], cfg: CgConfig) -> CgIterationRecord:
    """Evaluate the stopping rule, then alpha_k and its acceptability"""
    residual_sup = sup_over_space(dot(r, r))
    record = CgIterationRecord(
        k=k, x=x, r=r, p=p, alpha=None, beta=beta, alpha_feasible=False,
        residual_sup=residual_sup, failure_set=failure_set, curvature_scale=scale,
    )
    if residual_sup < cfg.residual_threshold:
        record.converged = True
        return record

    curvature = dot_A(p, p, A)
    if record.curvature_scale is None:
        record.curvature_scale = np.abs(curvature.values)
    # a vanishing p^T A p gives alpha = 0 there, which the S test then rejects
    denominator_inverse, _ = partial_inverse(
        curvature, cfg.tol, _curvature_floor(record.curvature_scale, cfg)
    )
    alpha = dot(r, p) * denominator_inverse
    record.alpha = alpha
    record.alpha_witness = s_violations(alpha, cfg.tol)
    record.alpha_feasible = not record.alpha_witness
    tau = cfg.tol.threshold(alpha.values, alpha.space.weights)
    record.alpha_negative = [
        int(i) for i in np.flatnonzero(alpha.space.support & (alpha.values < -tau))
    ]
    if record.alpha_negative:
        logger.warning("alpha_%d is negative at samples %s", k, record.alpha_negative)
    return record


def cg_init(A: FunctionMatrix, b: FunctionVector, x0: Optional[FunctionVector] = None,
            cfg: Optional[CgConfig] = None) -> CgIterationRecord:
    """
    r_0 = p_0 = b - A x_0.

    Raises:
        NotPositiveDefinite: A is not symmetric positive definite
        DimensionMismatch / SpaceMismatch: inconsistent system
    """
    cfg = cfg or CgConfig()
    x0 = x0 if x0 is not None else FunctionVector.zeros(A.space, A.n)
    _check_system(A, b, x0)
    if not is_positive_definite(A, cfg.tol):
        raise NotPositiveDefinite("CG requires a symmetric positive definite matrix")
    r0 = b - matvec(A, x0)
    return _control_term(A, 0, x0, r0, r0, None, [], None, cfg)


def cg_step(A: FunctionMatrix, b: FunctionVector, prev: CgIterationRecord,
            cfg: Optional[CgConfig] = None) -> CgIterationRecord:
    """
    One step of the recurrences

        x_k = x_{k-1} + alpha_{k-1} p_{k-1}
        r_k = r_{k-1} - alpha_{k-1} A p_{k-1}   (= b - A x_k)
        p_k = r_k - beta_k p_{k-1},  beta_k = r_k^T A p_{k-1} / p_{k-1}^T A p_{k-1}
        alpha_k = r_k^T p_k / p_k^T A p_k

    The residual is carried by the recurrence; b only fixes the system the
    record belongs to.

    Raises:
        DenominatorNotInvertible: p_{k-1}^T A p_{k-1} vanishes on positive measure, or alpha_{k-1}
            was not acceptable
    """
    cfg = cfg or CgConfig()
    _check_system(A, b, prev.x)
    if prev.alpha is None or not prev.alpha_feasible:
        raise DenominatorNotInvertible(
            prev.alpha_witness, f"step {prev.k} has no acceptable control term"
        )

    p_prev = prev.p
    A_p_prev = matvec(A, p_prev)
    denominator = dot(p_prev, A_p_prev)
    floor = _curvature_floor(prev.curvature_scale, cfg)
    failure_set = [int(i) for i in np.flatnonzero(np.abs(denominator.values) <= floor)]
    denominator_inverse, bad = partial_inverse(denominator, cfg.tol, floor)
    if bad:
        raise DenominatorNotInvertible(bad)

    x = prev.x + scale(prev.alpha, p_prev)
    r = prev.r - scale(prev.alpha, A_p_prev)
    beta = dot(r, A_p_prev) * denominator_inverse
    p = r - scale(beta, p_prev)
    return _control_term(A, prev.k + 1, x, r, p, beta, failure_set, prev.curvature_scale, cfg)


def cg_solve(A: FunctionMatrix, b: FunctionVector, x0: Optional[FunctionVector] = None,
             cfg: Optional[CgConfig] = None,
             progress_callback: Optional[ProgressCallback] = None) -> CgOutcome:
    """
    Run CG until the residual vanishes, the control term leaves S, or max_iter steps.

    Args:
        A: Symmetric positive definite function matrix
        b: Right-hand side
        x0: Starting point (zero vector if None)
        cfg: Solver settings
        progress_callback: Optional callback for progress updates (message: str, progress: float)

    Returns:
        CgOutcome with the verdict and every iteration record
    """
    cfg = cfg or CgConfig()
    max_iter = cfg.max_iter if cfg.max_iter is not None else A.n

    def report(message: str, progress: float):
        if progress_callback:
            progress_callback(message, progress)

    record = cg_init(A, b, x0, cfg)
    records = [record]
    while True:
        report(f"k={record.k} sup r^T r={record.residual_sup:.3e}", min(1.0, record.k / max_iter))
        logger.debug("k=%d residual_sup=%.3e feasible=%s", record.k, record.residual_sup,
                     record.alpha_feasible)
        if record.converged:
            verdict = CgVerdict.SUCCESSFUL
            break
        if not record.alpha_feasible:
            verdict = CgVerdict.INFEASIBLE
            break
        if record.k >= max_iter:
            verdict = CgVerdict.MAX_ITER_REACHED
            break
        record = cg_step(A, b, record, cfg)
        records.append(record)

    outcome = CgOutcome(verdict=verdict, records=records, final_x=record.x)
    if verdict == CgVerdict.INFEASIBLE:
        outcome.infeasible_step = record.k
        outcome.witness_samples = list(record.alpha_witness)
        rr = dot(record.r, record.r).values
        support = A.space.support
        outcome.pointwise_solved_samples = [
            int(i) for i in np.flatnonzero(support & (rr < cfg.residual_threshold))
        ]
    logger.info("CG finished: %s after %d steps", verdict.value, record.k)
    report(f"CG {verdict.value}", 1.0)
    return outcome


def krylov_basis(A: FunctionMatrix, y: FunctionVector, k: int) -> List[FunctionVector]:
    """[y, A y, ..., A^k y]"""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    basis = [y]
    for _ in range(k):
        basis.append(matvec(A, basis[-1]))
    return basis
