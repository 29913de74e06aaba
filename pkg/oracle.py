"""
Riesz-CG Pointwise Oracle
Independent per-sample reference: direct solves and plain scalar CG on the
numeric systems A(x) y = b(x), plus the comparison against a function-valued run
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from errors import ShapeMismatch, SingularSample
from function_linalg import FunctionVector
from problems import Problem
from verifier import CheckType, VerificationResult

logger = logging.getLogger(__name__)

SINGULAR_CONDITION = 1.0 / np.finfo(float).eps


@dataclass
class ScalarTrace:
    """Iterates of scalar CG at one sample; rows are iterations"""
    x: np.ndarray       # (K + 1, n)
    r: np.ndarray       # (K + 1, n)
    p: np.ndarray       # (K + 1, n)
    alpha: np.ndarray   # (J,) with J = K + 1 unless the last residual vanished
    converged: bool = False
    breakdown: bool = False

    @property
    def iterations(self) -> int:
        return self.x.shape[0] - 1


@dataclass
class OracleResult:
    """Per-sample direct solutions and scalar CG traces"""
    per_sample_solutions: FunctionVector
    per_sample_traces: List[Optional[ScalarTrace]] = field(default_factory=list)  # None at zero-weight samples

    @property
    def n(self) -> int:
        return self.per_sample_solutions.n

    @property
    def m(self) -> int:
        return self.per_sample_solutions.space.m


def _dot(u: np.ndarray, v: np.ndarray) -> float:
    total = u[0] * v[0]
    for i in range(1, u.shape[0]):
        total = total + u[i] * v[i]
    return float(total)


def _matvec(M: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = M[:, 0] * v[0]
    for j in range(1, v.shape[0]):
        out = out + M[:, j] * v[j]
    return out


def scalar_cg(M: np.ndarray, rhs: np.ndarray, start: np.ndarray, residual_tol: float = 1e-10,
              max_iter: Optional[int] = None) -> ScalarTrace:
    """
    Textbook CG on one numeric system, in the subtraction form

        x_k = x_{k-1} + alpha_{k-1} p_{k-1},  r_k = r_{k-1} - alpha_{k-1} M p_{k-1},
        p_k = r_k - (r_k . M p_{k-1} / p_{k-1} . M p_{k-1}) p_{k-1},
        alpha_k = r_k . p_k / p_k . M p_k

    Sums run in index order and quotients are formed as products with a
    reciprocal, so the rounding matches an elementwise evaluation of the same
    recurrences.
    """
    max_iter = max_iter if max_iter is not None else M.shape[0]
    x = np.array(start, dtype=float)
    r = rhs - _matvec(M, x)
    p = r.copy()
    xs, rs, ps, alphas = [x], [r], [p], []
    converged = breakdown = False

    k = 0
    while True:
        if _dot(r, r) < residual_tol ** 2:
            converged = True
            break
        Mp = _matvec(M, p)
        curvature = _dot(p, Mp)
        if curvature <= 0.0:
            breakdown = True
            break
        reciprocal = 1.0 / curvature
        alpha = _dot(r, p) * reciprocal
        alphas.append(alpha)
        if k >= max_iter:
            break
        x = x + alpha * p
        r = r - alpha * Mp
        p = r - (_dot(r, Mp) * reciprocal) * p
        xs.append(x)
        rs.append(r)
        ps.append(p)
        k += 1

    return ScalarTrace(np.array(xs), np.array(rs), np.array(ps), np.array(alphas),
                       converged=converged, breakdown=breakdown)


def pointwise_oracle(problem: Problem, residual_tol: float = 1e-10,
                     max_iter: Optional[int] = None) -> OracleResult:
    """
    Solve A(x) y = b(x) at every positive-weight sample by LU and by scalar CG.

    Raises:
        SingularSample: A(x) is numerically singular at a positive-weight sample
    """
    space = problem.space
    n = problem.n
    start = problem.start().values
    solutions = np.zeros((n, space.m))
    traces: List[Optional[ScalarTrace]] = []

    for i in range(space.m):
        if not space.support[i]:
            traces.append(None)
            continue
        M = problem.A.values[:, :, i]
        rhs = problem.b.values[:, i]
        if np.linalg.cond(M) > SINGULAR_CONDITION:
            raise SingularSample(i)
        try:
            solutions[:, i] = np.linalg.solve(M, rhs)
        except np.linalg.LinAlgError:
            raise SingularSample(i)
        traces.append(scalar_cg(M, rhs, start[:, i], residual_tol, max_iter))

    logger.info("oracle solved %d samples", int(space.support.sum()))
    return OracleResult(FunctionVector(space, solutions), traces)


def _relative(algebra_value: np.ndarray, scalar_value: np.ndarray, scale: float) -> float:
    return float(np.max(np.abs(algebra_value - scalar_value))) / max(1.0, scale)


def compare(outcome, oracle: OracleResult, tol: float = 1e-10) -> VerificationResult:
    """
    Max relative deviation between function-valued and scalar iterates.

    Iterations are compared while both runs have them; an Infeasible(k)
    outcome is compared only on iterations before k.

    Raises:
        ShapeMismatch: outcome and oracle describe different problems
    """
    records = outcome.records
    first = records[0]
    if first.x.n != oracle.n or first.x.space.m != oracle.m:
        raise ShapeMismatch(
            f"trace is n={first.x.n}, m={first.x.space.m}; oracle is n={oracle.n}, m={oracle.m}"
        )
    if not np.array_equal(first.x.space.support,
                          np.array([t is not None for t in oracle.per_sample_traces])):
        raise ShapeMismatch("trace and oracle disagree on the positive-weight samples")

    if outcome.infeasible_step is not None:
        records = records[:outcome.infeasible_step]

    result = VerificationResult()
    worst = 0.0
    compared = 0
    for sample, trace in enumerate(oracle.per_sample_traces):
        if trace is None:
            continue
        scales = {name: float(np.max(np.abs(getattr(trace, name)), initial=0.0))
                  for name in ("x", "r", "p", "alpha")}
        for j, record in enumerate(records[:trace.iterations + 1]):
            deviations = [
                _relative(record.x.values[:, sample], trace.x[j], scales["x"]),
                _relative(record.r.values[:, sample], trace.r[j], scales["r"]),
                _relative(record.p.values[:, sample], trace.p[j], scales["p"]),
            ]
            if record.alpha is not None and j < trace.alpha.shape[0]:
                deviations.append(
                    _relative(record.alpha.values[sample], trace.alpha[j], scales["alpha"])
                )
            deviation = max(deviations)
            compared += 1
            if deviation > worst:
                worst = deviation
            if deviation > tol:
                result.add_error(CheckType.EQUIVALENCE,
                                 f"sample {sample}, k={j}: relative deviation {deviation:.3e}")

    result.set_metric("max_relative_deviation", worst)
    result.set_metric("compared_iterates", compared)
    logger.info("comparison: max deviation %.3e over %d iterates", worst, compared)
    return result
