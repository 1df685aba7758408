"""Exception types shared across the package."""


class EntroflowError(Exception):
    """Base class for all library errors."""


class NotHermitian(EntroflowError):
    """Operator deviates from H = H-dagger beyond tolerance."""


class ConvergenceFailure(EntroflowError):
    """Eigensolver did not converge."""


class DimensionMismatch(EntroflowError):
    """Matrix shape inconsistent with the declared subsystem dimensions."""


class NonpositiveBeta(EntroflowError):
    """Inverse temperature must be strictly positive."""


class InvalidState(EntroflowError):
    """Matrix is not a valid density operator (hermiticity, positivity, trace)."""


class SupportViolation(EntroflowError):
    """Relative entropy undefined: rho carries weight outside sigma's support."""


class TooFewFactors(EntroflowError):
    """The average-correlation bound needs at least three subsystems."""


class InvalidSpec(EntroflowError):
    """Physical parameters violate their declared constraints."""


class NotDegenerate(EntroflowError):
    """Requested rotation plane is not energy-degenerate."""


class OverlappingPlanes(EntroflowError):
    """Rotation planes share a basis state."""


class NotUnitary(EntroflowError):
    """Matrix is not unitary within tolerance."""


class NoConvergence(EntroflowError):
    """Cycle iteration did not reach a fixed point within max_cycles."""


class BadCycle(EntroflowError):
    """Quench strokes do not restore the initial Hamiltonian."""


class ConfigError(EntroflowError):
    """Run configuration violates the documented schema."""
