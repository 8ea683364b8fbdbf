"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid argument or malformed input data."""

    category = "input"


class ParseError(InputError):
    def __init__(self, path, lineno: int, detail: str):
        self.path = path
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {detail}")


class CapacityError(RuntimeError):
    """A batch cannot be made to fit the memory budget."""

    category = "capacity"

    def __init__(self, message: str, vertex: int | None = None):
        self.vertex = vertex
        super().__init__(message)


class ContractError(RuntimeError):
    category = "contract"


class ConsistencyError(AssertionError):
    """Raised by audits when two independent counts disagree."""

    category = "internal"
