from __future__ import annotations


class ThermxError(RuntimeError):
    pass


class InvalidInputError(ThermxError, ValueError):
    pass


class ConfigError(InvalidInputError):
    def __init__(self, message: str, *, line: int | None = None, key: str | None = None) -> None:
        location = []
        if line is not None:
            location.append(f"line {line}")
        if key is not None:
            location.append(f"key '{key}'")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(prefix + message)
        self.line = line
        self.key = key


class SolverError(ThermxError):
    pass


class FrictionClosureError(SolverError):
    pass


class SteadyIntegrationError(SolverError):
    def __init__(self, message: str, *, rho: float) -> None:
        super().__init__(f"{message} (at rho={rho:.6g})")
        self.rho = rho


class AtCriticalityError(SolverError):
    """The requested lambda sits on the fold within tolerance; carries the u0 bracket."""

    def __init__(self, message: str, *, bracket: tuple[float, float]) -> None:
        super().__init__(f"{message} (u0 bracket [{bracket[0]:.6g}, {bracket[1]:.6g}])")
        self.bracket = bracket


class EnvelopeError(SolverError):
    pass


class TooSupercriticalError(SolverError):
    def __init__(self, message: str, *, lambda_: float, zeta0: float) -> None:
        super().__init__(f"{message} (lambda={lambda_:.6g}, zeta0={zeta0:.3g})")
        self.lambda_ = lambda_
        self.zeta0 = zeta0


class CriticalityError(SolverError):
    pass


__all__ = [
    "AtCriticalityError",
    "ConfigError",
    "CriticalityError",
    "EnvelopeError",
    "FrictionClosureError",
    "InvalidInputError",
    "SolverError",
    "SteadyIntegrationError",
    "ThermxError",
    "TooSupercriticalError",
]
