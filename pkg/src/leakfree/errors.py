"""Exception hierarchy. Class names double as the error names the CLI prints."""


class LeakfreeError(Exception):
    """Base class for all structured errors raised by this package."""


class NotHermitian(LeakfreeError, ValueError):
    pass


class NotNormalized(LeakfreeError, ValueError):
    pass


class DegenerateAxis(LeakfreeError):
    pass


class ResidualTooLarge(LeakfreeError):
    pass


class NoBranch(LeakfreeError):
    pass


class ZetaNotOne(LeakfreeError, ValueError):
    pass


class ZeroEpsQ(LeakfreeError, ValueError):
    pass


class ZeroCoupling(LeakfreeError, ValueError):
    pass


class NoRoot(LeakfreeError):
    pass
