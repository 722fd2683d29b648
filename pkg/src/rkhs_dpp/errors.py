"""Exception hierarchy shared by every module of the package."""


class RkhsDppError(Exception):
    """Base class for all library errors."""


class NotPositiveDefinite(RkhsDppError, ValueError):
    """A matrix failed its Cholesky factorization (some pivot <= 0)."""


class NotSymmetric(RkhsDppError, ValueError):
    pass


class FamilyEvaluation(RkhsDppError, ValueError):
    """An operator rule produced a NaN, an infinity or an out-of-domain value."""


class SiteNotInWindow(RkhsDppError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class SiteInConfiguration(RkhsDppError, ValueError):
    pass


class OverlappingSets(RkhsDppError, ValueError):
    pass


class ScheduleNotNested(RkhsDppError, ValueError):
    pass


class SpectrumAtOne(RkhsDppError, ValueError):
    """The restricted correlation kernel has an eigenvalue numerically equal to one."""


class WindowTooLarge(RkhsDppError, ValueError):
    pass


class ConfigParse(RkhsDppError, ValueError):
    pass


class InvariantViolation(RkhsDppError):
    """A hard numerical invariant failed; ``check`` names the failing check."""

    def __init__(self, check, message=""):
        self.check = check
        super().__init__(f"{check}: {message}" if message else check)
