"""Exception hierarchy; the CLI maps these onto exit codes."""


class TonerecError(Exception):
    """Base class for all library errors."""


class InputError(TonerecError):
    """Bad or missing input data (CLI exit code 2)."""


class ConfigError(TonerecError):
    """Invalid configuration or an unsatisfiable experiment setup (CLI exit code 3)."""
