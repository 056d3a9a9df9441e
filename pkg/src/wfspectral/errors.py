"""Error types shared across the package.

Two failure families matter to callers: bad inputs (domain/config) and
numerical breakdowns detected at run time. The CLI maps them to distinct
exit codes, so library code must raise the right one.
"""


class ParameterError(ValueError):
    """Invalid parameter or configuration value (CLI exit code 2)."""


class NumericalError(RuntimeError):
    """Numerical failure: non-finite values, broken symmetry, failed solve
    (CLI exit code 3)."""
