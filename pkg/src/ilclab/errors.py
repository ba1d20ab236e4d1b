"""Exception taxonomy shared by the whole package.

Three failure classes map one-to-one onto the CLI exit codes: bad
configuration (2), numerical trouble such as singular or indefinite
systems and unstable loops (3), and runaway trial costs (4).
"""


class IlcError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(IlcError):
    """Invalid configuration or model description supplied by the user."""


class NumericalError(IlcError):
    """A linear-algebra or model-construction step failed numerically."""


class DivergenceError(IlcError):
    """A trial run produced costs beyond the divergence guard."""
