class HybridGridError(Exception):
    pass


class CaseFormatError(HybridGridError):
    """The case file cannot be parsed."""


class ValidationError(HybridGridError):
    def __init__(self, message, entity=None, entity_id=None):
        super().__init__(message)
        self.entity = entity
        self.entity_id = entity_id


class PreprocessError(HybridGridError):
    pass


class InfeasibleError(HybridGridError):
    pass


class UnboundedError(HybridGridError):
    "Raised when the LP objective is unbounded below."


class SolverError(HybridGridError):
    pass


class PlanningError(HybridGridError):
    pass
