"""
Riesz-CG Problems
Function-valued linear systems A x = b and the seeded C + E generator
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from config import ToleranceConfig
from errors import BadParameters, DimensionMismatch, SpaceMismatch, ValidationError
from function_linalg import FunctionMatrix, FunctionVector, is_positive_definite, is_symmetric
from riesz_algebra import DEFAULT_TOLERANCE, MeasureSpace

logger = logging.getLogger(__name__)

GENERATOR_MODES = ("random", "mirrored")
KAPPA_FIT_ROUNDS = 30


@dataclass
class Problem:
    """A x = b on one measure space"""
    space: MeasureSpace
    A: FunctionMatrix
    b: FunctionVector
    x0: Optional[FunctionVector] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        parts = [self.A, self.b] + ([self.x0] if self.x0 is not None else [])
        for part in parts:
            if not part.space.same_as(self.space):
                raise SpaceMismatch("problem parts live on different spaces")
        if self.b.n != self.A.n:
            raise DimensionMismatch(f"A is {self.A.n}x{self.A.n} but b has {self.b.n} entries")
        if self.x0 is not None and self.x0.n != self.A.n:
            raise DimensionMismatch(f"A is {self.A.n}x{self.A.n} but x0 has {self.x0.n} entries")

    @property
    def n(self) -> int:
        return self.A.n

    def start(self) -> FunctionVector:
        """x0, or the zero vector"""
        return self.x0 if self.x0 is not None else FunctionVector.zeros(self.space, self.n)


def validate_problem(problem: Problem, tol: ToleranceConfig = DEFAULT_TOLERANCE):
    """
    Raises:
        ValidationError: "A.symmetry" or "A.positive_definite"
    """
    if not is_symmetric(problem.A, tol):
        raise ValidationError("A.symmetry", "A is not symmetric on a set of positive measure")
    if not is_positive_definite(problem.A, tol):
        raise ValidationError("A.positive_definite", "A(x) is not positive definite at every sample")


def _check_parameters(n: int, m: int, kappa_target: float, perturbation: float, mode: str):
    if n < 1:
        raise BadParameters(f"n must be >= 1, got {n}")
    if m < 1:
        raise BadParameters(f"samples must be >= 1, got {m}")
    if not (np.isfinite(kappa_target) and kappa_target >= 1):
        raise BadParameters(f"kappa must be >= 1, got {kappa_target}")
    if not (0 <= perturbation < 1):
        raise BadParameters(f"perturbation must lie in [0, 1), got {perturbation}")
    if mode not in GENERATOR_MODES:
        raise BadParameters(f"unknown mode {mode!r}, expected one of {GENERATOR_MODES}")
    if mode == "mirrored" and n < 2:
        raise BadParameters("mirrored mode needs n >= 2")


def _orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.where(np.diag(r) == 0, 1.0, np.diag(r)))


def _spectrum(n: int, spread: float) -> np.ndarray:
    """n values from 1 to spread, geometrically spaced"""
    if n == 1:
        return np.ones(1)
    return spread ** (np.arange(n) / (n - 1))


def _global_kappa(mats: np.ndarray) -> float:
    evals = np.linalg.eigvalsh(mats)
    return float(np.max(evals[:, -1]) / np.min(evals[:, 0]))


def _fit_core(Q: np.ndarray, shape: np.ndarray, perturbation: float, kappa_target: float) -> np.ndarray:
    """
    Stretch the core spectrum until the global kappa of C + E(x) meets the target.

    shape holds E(x) with spectral norm <= 1; the smallest core eigenvalue is 1,
    so E(x) is scaled by perturbation * mu_min = perturbation.
    """
    n = Q.shape[0]
    spread = kappa_target
    mats = None
    for _ in range(KAPPA_FIT_ROUNDS):
        core = (Q * _spectrum(n, spread)) @ Q.T
        mats = core[None, :, :] + perturbation * shape
        achieved = _global_kappa(mats)
        if n == 1 or abs(achieved - kappa_target) <= 1e-6 * kappa_target:
            break
        spread = max(1.0, spread * kappa_target / achieved)
    return mats


def generate_problem(n: int, m: int, kappa_target: float, perturbation: float, seed: int,
                     mode: str = "random") -> Problem:
    """
    Seeded system A(x) = C + E(x) with uniform weights.

    C = Q diag(mu) Q^T has mu spread geometrically from 1, E(x) is a
    symmetric perturbation with spectral norm <= perturbation * mu_min, so
    every A(x) stays SPD. b is uniform in [-1, 1] per sample.

    In mirrored mode the space has two samples sharing one matrix C. The
    first right-hand side is an eigenvector of C, so that sample is solved
    after one step while the second is not; CG then reports Infeasible(1).

    Raises:
        BadParameters: n or m < 1, kappa < 1, perturbation outside [0, 1), unknown mode
    """
    _check_parameters(n, m, kappa_target, perturbation, mode)
    rng = np.random.default_rng(seed)
    Q = _orthogonal(rng, n)

    if mode == "mirrored":
        if m != 2:
            logger.warning("mirrored mode uses two samples (requested %d)", m)
        m = 2
        core = (Q * _spectrum(n, kappa_target)) @ Q.T
        core = 0.5 * (core + core.T)
        mats = np.repeat(core[None, :, :], m, axis=0)
        b = np.empty((n, m))
        b[:, 0] = Q[:, n // 2]
        b[:, 1] = rng.uniform(-1.0, 1.0, size=n)
        perturbation = 0.0
    else:
        raw = rng.standard_normal((m, n, n))
        sym = 0.5 * (raw + np.swapaxes(raw, 1, 2))
        peak = float(np.max(np.abs(np.linalg.eigvalsh(sym))))
        shape = sym / peak if peak > 0 else sym
        mats = _fit_core(Q, shape, perturbation, kappa_target)
        mats = 0.5 * (mats + np.swapaxes(mats, 1, 2))
        b = rng.uniform(-1.0, 1.0, size=(n, m))

    space = MeasureSpace.uniform(m)
    A = FunctionMatrix.from_stacked(space, mats)
    metadata = {
        "generator": mode,
        "seed": int(seed),
        "kappa_target": float(kappa_target),
        "perturbation": float(perturbation),
        "n": int(n),
        "samples": int(m),
        "kappa": _global_kappa(mats),
    }
    logger.info("generated %s problem n=%d m=%d kappa=%.4g", mode, n, m, metadata["kappa"])
    return Problem(space=space, A=A, b=FunctionVector(space, b), metadata=metadata)
