"""Exception types shared by the solvers."""


class DomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


class PositivityError(RuntimeError):
    """A density became non-positive during time integration."""

    def __init__(self, cell, value, time=None):
        self.cell = int(cell)
        self.value = float(value)
        self.time = time
        where = "" if time is None else f" at t={time:.6g}"
        super().__init__(f"non-positive density {self.value:.6g} in cell {self.cell}{where}")


class NewtonError(RuntimeError):
    """Newton iteration failed to reach the requested residual."""

    def __init__(self, residual, iterations):
        self.residual = float(residual)
        self.iterations = int(iterations)
        super().__init__(
            f"Newton did not converge after {self.iterations} iterations "
            f"(last residual {self.residual:.3e})"
        )


class SegmentVacuumError(DomainError):
    """The straight path between two entropy-variable states leaves rho > 0."""


class InsufficientViscosityError(RuntimeError):
    """No positive time step satisfies the entropy CFL condition."""
