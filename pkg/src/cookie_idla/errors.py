"""Exception types shared across the package."""


class CookieIdlaError(Exception):
    """Base class for package-specific errors."""


class MaxStepsExceeded(CookieIdlaError):
    """A walk did not reach either barrier within its step/event budget.

    This signals a budget misconfiguration, not a mathematical problem:
    exit from a finite interval is almost surely finite because every
    one-step probability is bounded away from 0 and 1.
    """


class TimeBudgetExceeded(CookieIdlaError):
    """A perturbed-BM path did not exit within t_max (dt/t_max misconfigured)."""


class DegenerateBarrier(CookieIdlaError):
    """A rounded hitting target coincides with the start site."""


class HypothesisViolation(CookieIdlaError):
    """Operation requires sign-consistent cookie stacks but got mixed signs."""
