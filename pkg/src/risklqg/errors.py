"""Exception types shared across the package."""


class RiskLqgError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(RiskLqgError):
    pass


class NonSymmetricPenalty(RiskLqgError):
    pass


class IndefinitePenalty(RiskLqgError):
    pass


class InfeasibleTarget(RiskLqgError):
    pass


class UnsupportedSource(RiskLqgError):
    pass


class NonPsdWeight(RiskLqgError):
    pass


class InsufficientSamples(RiskLqgError):
    pass


class MomentMismatch(RiskLqgError):
    pass


class SingularInnerMatrix(RiskLqgError):
    pass


class NonFiniteRecursion(RiskLqgError):
    pass


class NotStabilizable(RiskLqgError):
    pass


class NotDetectable(RiskLqgError):
    pass


class NoConvergence(RiskLqgError):
    pass


class SingularInnovation(RiskLqgError):
    pass


class PlanExhausted(RiskLqgError):
    pass


class ConfigError(RiskLqgError):
    """Invalid experiment configuration; carries the offending field name."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message
