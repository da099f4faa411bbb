"""Typed errors shared across the package."""


class ProfileError(Exception):
    """Base class for every error raised by this package."""


class SigmaOutOfRange(ProfileError, ValueError):
    pass


class CriticalRegime(ProfileError, ValueError):
    pass


class RegimeMismatch(ProfileError, ValueError):
    pass


class DegenerateInput(ProfileError, ValueError):
    pass


class NotACriticalPoint(ProfileError, ValueError):
    pass


class NoProfileBehavior(ProfileError, ValueError):
    pass


class AsymmetricTensor(ProfileError, ValueError):
    pass


class DegenerateSigns(ProfileError, ValueError):
    pass


class StepLimitExceeded(ProfileError, RuntimeError):
    pass


class BlowupInPhaseVariables(ProfileError, RuntimeError):
    pass


class NonInvertibleOrbit(ProfileError, ValueError):
    pass


class NoInterface(ProfileError, ValueError):
    pass


class WrongInterfaceType(ProfileError, ValueError):
    pass


class NegativeF(ProfileError, RuntimeError):
    def __init__(self, message, xi_cross=None):
        super().__init__(message)
        self.xi_cross = xi_cross


class IntegrationFailure(ProfileError, RuntimeError):
    pass


class BracketInvalid(ProfileError, ValueError):
    pass
