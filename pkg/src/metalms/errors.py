"""Error taxonomy shared across the package.

The CLI maps these onto exit codes: contract/spec violations exit with 2,
I/O failures with 1.
"""


class ContractViolation(RuntimeError):
    """A declared bound or interface contract was breached.

    Carries the step index when the breach happened inside a sequential
    simulation or online run.
    """

    def __init__(self, message, step=None):
        if step is not None:
            message = f"{message} (step {step})"
        super().__init__(message)
        self.step = step


class SimulationFault(ContractViolation):
    """A simulated path violated an invariant of its own system family."""


class EnumerationCapExceeded(ValueError):
    """An exact enumeration would exceed the configured event cap.

    Raised instead of silently approximating; callers can rerun with the
    atoms-only flag to get a labelled lower bound.
    """
