"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class SqueezeError(Exception):
    exit_code = 1
    kind = "error"


class ValidationError(SqueezeError, ValueError):
    """Invalid parameters or configuration."""

    exit_code = 1
    kind = "validation"

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class ConfigError(ValidationError):
    kind = "config"

    def __init__(self, message, key=None, line=None):
        self.reason = message
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if key is not None:
            loc.append(f"key '{key}'")
        if loc:
            message = f"{', '.join(loc)}: {message}"
        super().__init__(message, field=key)
        self.key = key
        self.line = line


class SingularityError(ValidationError):
    kind = "singularity"


class ConvergenceError(SqueezeError, RuntimeError):
    exit_code = 2
    kind = "convergence"

    def __init__(self, message, last_change=None):
        super().__init__(message)
        self.last_change = last_change


class InstabilityError(SqueezeError, RuntimeError):
    exit_code = 3
    kind = "instability"

    def __init__(self, message, eigenvalues=None):
        super().__init__(message)
        self.eigenvalues = eigenvalues
