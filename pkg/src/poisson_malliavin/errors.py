"""Exception hierarchy shared across the package."""


class PoissonMalliavinError(Exception):
    """Base class for all library errors."""


class AtomOutOfWindow(PoissonMalliavinError):
    """An atom (or a time argument) lies outside the observation window [0, T]."""


class DuplicateAtom(PoissonMalliavinError):
    """Configurations are simple: the same (t, x) pair may appear at most once."""


class OrderTooLarge(PoissonMalliavinError):
    """Requested order exceeds the combinatorial ceiling (2^n or n! blow-up)."""


class BudgetExceeded(PoissonMalliavinError):
    """Factorial-tuple enumeration would exceed the configured term budget."""


class IntegrationUnavailable(PoissonMalliavinError):
    """A kernel marginal cannot be integrated with the allowed methods."""


class UnsupportedDimension(PoissonMalliavinError):
    """Quadrature beyond 3 coupled coordinates with no closed form and MC disabled."""


class KernelsUnavailable(PoissonMalliavinError):
    """A chaotic expansion was requested without kernels (no annotation, no MC)."""


class ProjectionUnavailable(PoissonMalliavinError):
    """The functional carries no closed-form predictable projection."""


class ConfigError(PoissonMalliavinError):
    """Invalid run configuration (schema violation, unknown key, bad value)."""
