"""Exception types shared across modules."""


class ScheduleInfeasible(ValueError):
    """Parameters fall outside the regime where an error bound is defined.

    ``channel`` names the offending term, ``value`` its size.
    """

    def __init__(self, message: str, channel: str = "", value: float = float("nan")):
        super().__init__(message)
        self.channel = channel
        self.value = value


class SingularOverlap(ValueError):
    """Overlap matrix too ill-conditioned to invert."""

    def __init__(self, condition: float, limit: float):
        super().__init__(f"overlap matrix condition number {condition:.3e} exceeds {limit:.1e}")
        self.condition = condition


class QuadratureError(RuntimeError):
    """Quadrature refinement stopped before reaching its tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved {achieved:.3e})")
        self.achieved = achieved
