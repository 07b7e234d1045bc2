"""Exception hierarchy shared by all modules."""


class DarbouxError(Exception):
    """Base class for every error raised by this package."""


class GridMismatchError(DarbouxError, ValueError):
    """Two fields that must share a grid do not."""


class PreconditionError(DarbouxError, ValueError):
    """An operation was called outside its domain."""


class NodeError(DarbouxError):
    """A seed solution vanishes on the grid, so its log-derivative does not exist."""

    def __init__(self, x, message=None):
        self.x = float(x)
        super().__init__(message or f"seed solution has a node at x = {self.x:.6g}")


class SingularThetaError(DarbouxError):
    """The Wronskian kernel vanishes somewhere; the two-step potential would be singular."""

    def __init__(self, report):
        self.report = report
        super().__init__(
            f"|theta| = {report.min_abs_theta:.3e} at x = {report.argmin_x:.6g} "
            f"is below tolerance {report.tolerance:.3e}"
        )


class ConvergenceError(DarbouxError):
    """Root iteration did not converge."""


class DuplicateEigenvalueError(ConvergenceError):
    """Shooting converged onto an eigenvalue that was already deflated."""

    def __init__(self, energy):
        self.energy = complex(energy)
        super().__init__(f"converged onto already-found eigenvalue {self.energy:.10g}")


class IntegrationOverflowError(DarbouxError):
    """Integrated solution exceeded the overflow guard."""

    def __init__(self, x):
        self.x = float(x)
        super().__init__(
            f"solution magnitude exceeded 1e300 near x = {self.x:.6g}; "
            "restart with a renormalized initial condition or a shorter grid"
        )
