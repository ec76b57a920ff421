"""
Exception hierarchy
Every failure raised by the library derives from SublevelL2Error
"""

from typing import Optional, Sequence


class SublevelL2Error(Exception):
    """Base class for all library errors"""


class InputError(SublevelL2Error, ValueError):
    """Bad argument: dimension mismatch, out-of-range parameter, malformed object"""


class DivergenceError(SublevelL2Error):
    """A mass that must be finite turned out to be +inf"""


class DivergedNormError(DivergenceError):
    """A Gram diagonal entry diverged"""

    def __init__(self, alpha: Sequence[int]):
        self.alpha = tuple(alpha)
        super().__init__(f"Norm of z^{list(self.alpha)} diverges on the region")


class G0InfiniteError(DivergenceError):
    """G(0) = +inf, so the curve hypothesis fails"""


class ConditioningError(SublevelL2Error):
    """Gram system too ill-conditioned to solve reliably"""

    def __init__(self, condition_number: float, size: int, cap: float):
        self.condition_number = condition_number
        self.size = size
        self.cap = cap
        super().__init__(
            f"Gram system of size {size} has condition number {condition_number:.3e} "
            f"(cap {cap:.1e})"
        )


class DegenerateRegionError(SublevelL2Error):
    """Monte Carlo sampler accepted no points"""


class InternalConsistencyError(SublevelL2Error):
    """A theorem-guaranteed inequality failed numerically"""


class ConfigError(InputError):
    """Configuration validation failure, tagged with the offending field path"""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class NegativeWeightError(ConfigError):
    """Configured weight is not negative on the configured domain"""

    def __init__(self, field: str, sup_value: Optional[float] = None):
        detail = "weight is not negative on the domain"
        if sup_value is not None:
            detail += f" (sup = {sup_value:.6g} > 0)"
        super().__init__(field, detail)
