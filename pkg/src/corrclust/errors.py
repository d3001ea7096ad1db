class InvalidInputError(ValueError):
    """Malformed graph, clustering, stream or parameter input."""


class CapacityError(RuntimeError):
    """A simulated machine exceeded its word budget."""

    def __init__(self, message, *, trial=None, machine=None, load=None, budget=None):
        super().__init__(message)
        self.trial = trial
        self.machine = machine
        self.load = load
        self.budget = budget


class InvalidTopologyError(InvalidInputError):
    """An MPC topology cannot host the input (e.g. a shard does not fit)."""


class SpecError(InvalidInputError):
    """Invalid experiment specification."""


class StreamConsumedError(RuntimeError):
    """A single-pass edge stream was read a second time."""
