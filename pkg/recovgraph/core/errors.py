class RecovGraphError(ValueError):
    """Base class for every error raised by recovgraph."""


class SessionParseError(RecovGraphError):
    pass


class DataError(RecovGraphError):
    pass


class SessionTooShortError(RecovGraphError):
    pass


class NumericalError(RecovGraphError):
    pass


class ContractError(RecovGraphError):
    pass


class SpecError(RecovGraphError):
    pass


class UndefinedRecoveryError(RecovGraphError):
    pass
