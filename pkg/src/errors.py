"""Exception hierarchy shared by the solver modules and the CLI."""


class SimulationError(Exception):
    """Base class for every error raised by the simulator."""


class ConfigError(SimulationError, ValueError):
    """Invalid model, basis or scenario parameters."""


class NuOutOfRange(ConfigError):
    """Poisson ratio outside (0, 1/2)."""


class InvalidParameter(ConfigError):
    """Nonpositive length, stiffness or thickness, or an out-of-range index."""


class VariantMismatch(ConfigError):
    """Variant and parameter kind (beam vs plate) disagree."""


class SlopeTooLarge(SimulationError, ValueError):
    """Exact beam kinematics evaluated where |w_x| reaches the slope guard."""

    def __init__(self, max_slope: float, guard: float):
        self.max_slope = max_slope
        super().__init__(f"sup|w_x| = {max_slope:.6g} exceeds 1 - {guard:g}")


class UnsupportedMode(SimulationError, ValueError):
    """Variant does not support the requested constraint mode or scheme."""


class SolverError(SimulationError, RuntimeError):
    """A nonlinear solve failed."""


class NewtonDivergence(SolverError):
    """Newton iteration did not reach tolerance."""

    def __init__(self, message: str, trace: list[float]):
        self.trace = list(trace)
        history = ", ".join(f"{r:.3e}" for r in self.trace)
        super().__init__(f"{message} (residual history: [{history}])")


class ProjectionFailure(SolverError):
    """Constraint projection did not reach tolerance."""


class ContinuationStall(SolverError):
    """Load continuation fell below the minimum step."""

    def __init__(self, message: str, last_load_factor: float, last_report=None):
        self.last_load_factor = last_load_factor
        self.last_report = last_report
        super().__init__(f"{message} (last converged load factor {last_load_factor:.6g})")


class SimulationAborted(SolverError):
    """Time integration stopped; carries the step index and the partial trajectory."""

    def __init__(self, step_index: int, cause: Exception, trajectory=None):
        self.step_index = step_index
        self.cause = cause
        self.trajectory = trajectory
        super().__init__(f"step {step_index}: {cause}")


class MissingMultipliers(SimulationError, ValueError):
    """A multiplier-form residual was requested without multiplier fields."""
