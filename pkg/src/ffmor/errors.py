"""Exception and warning types shared across the package."""


class FfmorError(Exception):
    """Base class for every error raised by ffmor."""


class ParseError(FfmorError):
    """A model file could not be parsed.

    ``line`` and ``offset`` are 1-based when known.
    """

    def __init__(self, message, path=None, line=None, offset=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
                if offset is not None:
                    where += f":{offset}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line
        self.offset = offset


class DimensionMismatch(FfmorError):
    def __init__(self, message, matrix=None):
        super().__init__(message)
        self.matrix = matrix


class SingularShift(FfmorError):
    """``(s I - A)`` is numerically singular at the requested point."""

    def __init__(self, point, rcond=None):
        msg = f"shifted matrix is singular at {point!r}"
        if rcond is not None:
            msg += f" (rcond={rcond:.3e})"
        super().__init__(msg)
        self.point = point
        self.rcond = rcond


class NotStable(FfmorError):
    pass


class NoConvergence(FfmorError):
    pass


class NotPsd(FfmorError):
    pass


class DegenerateSpectrum(FfmorError):
    pass


class NotAdmissible(FfmorError):
    def __init__(self, rho, rho_star=None, detail=""):
        msg = f"rho={rho!r} is not admissible"
        if rho_star is not None:
            msg += f" (threshold {rho_star!r})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.rho = rho
        self.rho_star = rho_star


class SingularInversion(FfmorError):
    pass


class RoundTripFailure(FfmorError):
    def __init__(self, residual):
        super().__init__(f"inverse mapping does not reproduce the mapped system (residual {residual:.3e})")
        self.residual = residual


class BadOrder(FfmorError):
    pass


class SingularResidualization(FfmorError):
    pass


class NoAdmissiblePoint(FfmorError):
    def __init__(self, reasons):
        super().__init__("no admissible rho in grid: " + "; ".join(f"{r!r}: {why}" for r, why in reasons))
        self.reasons = reasons


class NotAchievable(FfmorError):
    def __init__(self, tol, best_bound):
        super().__init__(f"tolerance {tol!r} not reachable; bound at r=n-1 is {best_bound!r}")
        self.tol = tol
        self.best_bound = best_bound


class NearlyNonMinimal(UserWarning):
    """Hankel singular values span more than the balancing transform can resolve."""


class StabilityLost(UserWarning):
    """A reduced model returned by a finite-frequency method is not Hurwitz."""
