"""Exception hierarchy shared by all cilab modules."""


class CilabError(Exception):
    pass


class InvalidInput(CilabError, ValueError):
    """An argument is outside the domain an operation accepts."""


class MalformedMachine(CilabError, ValueError):
    """A machine definition violates one of its structural invariants."""


class MalformedConfiguration(CilabError, ValueError):
    pass


class SpecificationGap(CilabError):
    """A transition function is undefined on a state the dynamics reached."""


class PredictorInapplicable(CilabError, ValueError):
    pass


class ConfigError(CilabError):
    """Config file problem, located by field name and (when known) line."""

    def __init__(self, message, field=None, line=None, path=None):
        self.field = field
        self.line = line
        self.path = path
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
