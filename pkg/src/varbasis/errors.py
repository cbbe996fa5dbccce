"""Exception hierarchy shared by the package."""


class VarBasisError(Exception):
    """Base class for all errors raised by varbasis."""


class DomainError(VarBasisError, ValueError):
    """A label lies outside the configured universe."""


class ContractError(VarBasisError, ValueError):
    """An operation was called in violation of its precondition."""


class ConfigError(VarBasisError, ValueError):
    """Parameters or jump configuration are inconsistent."""


class ParseError(VarBasisError, ValueError):
    """A parameter or scenario document is malformed.

    Attributes:
        source: name of the document (usually a path), or None.
        line: 1-based line number of the offending line, or None.
    """

    def __init__(self, message, source=None, line=None):
        self.source = source
        self.line = line
        where = ""
        if source is not None:
            where = str(source)
        if line is not None:
            where = f"{where}:{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class StepSizeError(VarBasisError, ArithmeticError):
    """The semi-implicit step is singular for the current dt."""


class DivergenceError(VarBasisError, ArithmeticError):
    """Integration produced a non-finite coordinate.

    Attributes:
        last_valid: HybridTime of the last finite state.
    """

    def __init__(self, message, last_valid=None):
        self.last_valid = last_valid
        super().__init__(message)
