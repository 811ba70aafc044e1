"""Exception and warning types raised across the package."""


class WebLabError(Exception):
    """Base class for all errors raised by weblab."""


class SingularPointError(WebLabError, ValueError):
    """A point lies on a singular set of the formula being evaluated."""


class DomainError(WebLabError, ValueError):
    """Input lies outside the region where an operation is defined."""


class FlowError(WebLabError, RuntimeError):
    """Leaf-following or transport integration failed."""


class FrameDegeneracyError(WebLabError, RuntimeError):
    """The transported Abelian-relation frame became (numerically) singular."""


class RankError(WebLabError, RuntimeError):
    """Collocation rank estimation produced an inconsistent answer."""


class FitError(WebLabError, ValueError):
    """Projective component fitting failed."""


class ConfigError(WebLabError, ValueError):
    """Invalid experiment configuration."""


class DegenerateWarning(UserWarning):
    """Result returned at a degenerate configuration (double root, axis point)."""
