"""Exception types shared across the package."""


class QiteError(Exception):
    """Base class for all package errors."""


class ParseError(QiteError, ValueError):
    """Malformed Pauli string, Hamiltonian file or QUBO file."""

    def __init__(self, message, *, line=None, position=None):
        self.line = line
        self.position = position
        where = []
        if line is not None:
            where.append(f"line {line}")
        if position is not None:
            where.append(f"position {position}")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)


class DimensionError(QiteError, ValueError):
    """Qubit counts of two operands do not match."""


class ResourceError(QiteError, RuntimeError):
    """Requested size exceeds a dense or statevector cap."""


class NonHermitianError(QiteError, ValueError):
    """An operator that must be Hermitian is not."""


class StateError(QiteError, ValueError):
    """Invalid state vector (zero norm, unnormalized where a unit vector is required)."""


class DomainError(QiteError, ValueError):
    """Argument outside the domain of a formula."""


class OrderBoundError(QiteError, ValueError):
    """A term exceeds the declared order bound."""


class SingularJacobianError(QiteError, ArithmeticError):
    """Newton corrector met a numerically singular Jacobian."""


class PathFailure(QiteError, RuntimeError):
    """Path tracking hit the minimum sub-step without converging."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class CompilationError(QiteError, RuntimeError):
    """Compilation aborted; ``partial`` holds the steps compiled so far."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
