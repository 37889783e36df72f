"""Exception types shared across the package."""


class IMC2Error(Exception):
    """Base class for all errors raised by imc2."""


class ValidationError(IMC2Error):
    """An instance or parameter bundle violates its invariants."""


class NoObservationError(IMC2Error):
    """A task has no submitted values, so no truth can be estimated."""

    def __init__(self, task_id):
        super().__init__(f"task {task_id!r} has no observations")
        self.task_id = task_id


class UndefinedAccuracyError(IMC2Error):
    """A worker's accuracy was requested for a task it did not answer."""


class DomainError(IMC2Error, ValueError):
    """A probability argument is outside its admissible range."""


class EnumerationTooLarge(IMC2Error):
    """The ED baseline would have to enumerate too many orderings."""


class InfeasibleCoverage(IMC2Error):
    """The accuracy requirement of some tasks cannot be covered."""

    def __init__(self, tasks):
        self.tasks = list(tasks)
        super().__init__(f"accuracy requirement not coverable for tasks {self.tasks!r}")


class InsufficientCompetition(IMC2Error):
    """Removing a winner leaves the instance infeasible, so no critical payment exists."""

    def __init__(self, worker_id, tasks):
        self.worker_id = worker_id
        self.tasks = list(tasks)
        super().__init__(
            f"without worker {worker_id!r} tasks {self.tasks!r} cannot be covered; "
            "critical payment undefined"
        )


class OracleTooLarge(IMC2Error):
    """Brute-force search was requested above its size guard."""
