"""Per-entry PID refinement of learning errors across outer epochs."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError


@dataclass(frozen=True)
class PidGains:
    kp: float = 1.5
    ki: float = 0.005
    kd: float = 0.05

    def __post_init__(self):
        if not all(np.isfinite((self.kp, self.ki, self.kd))):
            raise ConfigError(f"PID gains must be finite, got {self}")


@dataclass(eq=False)
class PidState:
    """Running error sum and previous-epoch error, one slot per training entry.

    The previous error starts at zero, so the first refinement is
    ``(kp + ki + kd) * e``.
    """

    integral: np.ndarray
    prev_error: np.ndarray
    epoch: int = 0


def init_pid(num_entries: int) -> PidState:
    if num_entries < 1:
        raise ConfigError("PID state needs at least one entry")
    return PidState(np.zeros(num_entries), np.zeros(num_entries), 0)


def refine_errors(pid: PidState, errors: np.ndarray, gains: PidGains) -> np.ndarray:
    """Advance ``pid`` by one epoch and return the refined errors."""
    errors = np.asarray(errors, dtype=np.float64)
    if errors.shape != pid.integral.shape:
        raise DimensionError(f"errors have shape {errors.shape}, PID state {pid.integral.shape}")
    pid.integral += errors
    refined = gains.kp * errors + gains.ki * pid.integral + gains.kd * (errors - pid.prev_error)
    pid.prev_error = errors.copy()
    pid.epoch += 1
    return refined
