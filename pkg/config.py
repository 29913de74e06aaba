"""
Riesz-CG Configuration Manager
"""
import os
from pathlib import Path
from dotenv import load_dotenv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from errors import ConfigError

# Load .env file
env_path = Path(__file__).parent / ".env"
if env_path.exists():
    load_dotenv(env_path)


@dataclass(frozen=True)
class ToleranceConfig:
    """Finite-precision cutoff standing in for exact a.e. statements"""
    tau_zero: float = 1e-12
    relative: bool = True  # scale by max(1, max|values|)

    def __post_init__(self):
        if not np.isfinite(self.tau_zero) or self.tau_zero < 0:
            raise ConfigError(f"tau_zero must be finite and >= 0, got {self.tau_zero}")

    def threshold(self, values: np.ndarray, weights: Optional[np.ndarray] = None) -> float:
        """
        Resolve tau for the given sample values.

        Args:
            values: Sample values (any shape, last axis indexes samples)
            weights: Measure weights; zero-weight samples are ignored for scaling

        Returns:
            tau_zero * max(1, max|values|) when relative, else tau_zero
        """
        if not self.relative:
            return float(self.tau_zero)
        values = np.asarray(values, dtype=float)
        if weights is not None:
            values = values[..., np.asarray(weights) > 0]
        scale = float(np.max(np.abs(values))) if values.size else 0.0
        return float(self.tau_zero) * max(1.0, scale)


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{name} must be a number, got {raw!r}")


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}")


def _env_bool(name: str, default: bool) -> bool:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    value = raw.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{name} must be a boolean, got {raw!r}")


@dataclass
class SolverSettings:
    """Solver and harness defaults"""
    tau_zero: float = 1e-12
    relative: bool = True

    # CG
    residual_tol: float = 1e-10  # stop when sup_X r^T r < residual_tol**2

    # Verification
    grid: int = 257
    bound_slack: float = 1e-9
    compare_tol: float = 1e-10

    log_level: str = "WARNING"

    def __post_init__(self):
        if self.residual_tol <= 0:
            raise ConfigError("residual_tol must be positive")
        if self.grid < 2:
            raise ConfigError("grid must be at least 2")
        if self.bound_slack < 0 or self.compare_tol < 0:
            raise ConfigError("slack and comparison tolerances must be >= 0")

    @classmethod
    def from_env(cls) -> "SolverSettings":
        """Load configuration from environment variables"""
        return cls(
            tau_zero=_env_float("RIESZ_CG_TAU_ZERO", 1e-12),
            relative=_env_bool("RIESZ_CG_RELATIVE", True),
            residual_tol=_env_float("RIESZ_CG_RESIDUAL_TOL", 1e-10),
            grid=_env_int("RIESZ_CG_GRID", 257),
            bound_slack=_env_float("RIESZ_CG_BOUND_SLACK", 1e-9),
            compare_tol=_env_float("RIESZ_CG_COMPARE_TOL", 1e-10),
            log_level=os.getenv("RIESZ_CG_LOG_LEVEL", "WARNING").upper(),
        )

    def tolerance(self) -> ToleranceConfig:
        return ToleranceConfig(tau_zero=self.tau_zero, relative=self.relative)
