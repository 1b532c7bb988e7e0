from __future__ import annotations

import math

class CoveringError(Exception):
    """Base class for every error raised by the covering package."""

class PmfError(CoveringError, ValueError):
    """Invalid probability table, subset, or query."""

class ZeroConditioningError(PmfError):
    """Conditional probability queried at a zero-mass conditioning tuple."""

class BoundsError(CoveringError, ValueError):
    """A bound or its constants are undefined for the given inputs."""

class DegenerateExponentError(CoveringError, ValueError):
    """Large-deviation exponent is zero or otherwise unusable."""

class ConfigError(CoveringError, ValueError):
    """Experiment configuration is inconsistent."""
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field

class GuardExceeded(CoveringError):
    """Enumeration or materialization would exceed the configured guard."""
    def __init__(self, what: str, size: float, guard: float, *, log_size: float | None = None):
        shown = _magnitude(size) if log_size is None else _log_magnitude(log_size)
        super().__init__(f"{what}: {shown} states exceeds guard {_magnitude(guard)}")
        self.what = what; self.size = size; self.guard = guard

def _magnitude(x: float) -> str:
    try:
        return f"{float(x):.6g}"
    except OverflowError:
        return f"~1e{len(str(int(x))) - 1}"

def _log_magnitude(log_x: float) -> str:
    if log_x < 700:
        return _magnitude(math.exp(log_x))
    return f"~1e{int(log_x / math.log(10))}"
