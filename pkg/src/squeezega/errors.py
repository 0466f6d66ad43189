"""Exception types raised by the simulator and optimizer."""


class NumericalError(ArithmeticError):
    """A computed quantity violated a consistency bound."""


class IntegrationAccuracyError(NumericalError):
    """Trace drift during a segment exceeded the tolerance; raise the substep count."""


class DegenerateSpinError(ValueError):
    """Mean spin too short to define a frame."""


class CostGuardError(ValueError):
    """Requested dense computation exceeds the size guard."""


class EvaluationError(RuntimeError):
    """An individual's simulation failed during a GA run."""

    def __init__(self, generation: int, index: int, cause: Exception):
        super().__init__(f"generation {generation}, individual {index}: {cause}")
        self.generation = generation
        self.index = index
        self.cause = cause
