"""Exception hierarchy shared by every warpgeo module."""


class WarpGeoError(Exception):
    """Base class for all library errors."""


class EmptyDomain(WarpGeoError):
    pass


class NonFiniteEvaluation(WarpGeoError):
    pass


class PoleSingularity(WarpGeoError):
    pass


class QuadratureFailure(WarpGeoError):
    pass


class NotMonotone(WarpGeoError):
    pass


class ResolutionLimit(WarpGeoError):
    pass


class ShootingDivergence(WarpGeoError):
    def __init__(self, msg, oracle_value=None):
        super().__init__(msg)
        self.oracle_value = oracle_value


class DiameterViolation(WarpGeoError):
    pass


class NotUniqueMinimal(WarpGeoError):
    pass


class ChartsDontCover(WarpGeoError):
    pass


class AllEtaFailed(WarpGeoError):
    pass


class BadEps(WarpGeoError, ValueError):
    pass


class DomainError(WarpGeoError, ValueError):
    pass


class ThresholdViolation(WarpGeoError, ValueError):
    pass


class NotHemisphere(WarpGeoError):
    pass


class DerivativeUnavailable(WarpGeoError):
    pass


class NoClosure(WarpGeoError):
    pass


class NegativeV(WarpGeoError):
    pass


class HypothesisViolated(WarpGeoError):
    def __init__(self, msg, check=None):
        super().__init__(msg)
        self.check = check


class GluingFailure(WarpGeoError):
    pass


class ConfigError(WarpGeoError):
    pass


class ShootingWarning(UserWarning):
    """Shooting did not converge and the through-pole candidate was used."""
