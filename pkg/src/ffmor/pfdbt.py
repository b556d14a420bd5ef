"""Finite-frequency balanced truncation through PFD mappings.

The model is mapped to a stable discrete-time system, reduced there by
standard balanced truncation, and mapped back. The entire-range bound of the
discrete reduction, multiplied by the mapping's gain factor, bounds the
in-band error of the returned model.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bt import ReductionResult, balance, truncate
from .errors import (BadOrder, FfmorError, NotAchievable, NoAdmissiblePoint, StabilityLost)
from .mapping import PfdMapKind, Variant, admissible_side, invert_map, pfd_map
from .model import FrequencyRange, StateSpaceModel

ROUTINGS = {"r1": "upper", "r2": "lower"}


def _routing_flavor(routing: str) -> str:
    try:
        return ROUTINGS[routing.lower()]
    except (KeyError, AttributeError):
        raise ValueError(f"routing must be 'r1' or 'r2', got {routing!r}") from None


def _kind(band: FrequencyRange, rho: float, routing: str, variant: Variant) -> PfdMapKind:
    if band.kind == "ef":
        raise ValueError("PFDBT needs a finite band; use bt.lyabt for the entire range")
    return PfdMapKind(_routing_flavor(routing), band, rho, variant)


def mapped_hankel_sv(model: StateSpaceModel, band: FrequencyRange, rho: float,
                     routing: str = "r1", variant: Variant = "consistent"):
    """Hankel singular values of the mapped system and the mapping's gain factor."""
    mapped = pfd_map(model, _kind(band, rho, routing, variant))
    return balance(mapped.model).hankel_sv, mapped.kind.scale


def pfdbt(model: StateSpaceModel, band: FrequencyRange, rho: float, r: int,
          routing: str = "r1", variant: Variant = "consistent") -> ReductionResult:
    """Reduce ``model`` to order ``r`` with an a priori bound on the in-band error.

    ``routing="r1"`` goes through the upper map, ``"r2"`` through the lower
    one. The returned ``bound`` is ``2 * scale * sum(tail_sv)`` where
    ``tail_sv`` are the trailing Hankel singular values of the mapped system.
    Middle-frequency bands give complex reduced models. A :class:`StabilityLost`
    warning is issued when the reduced model is not Hurwitz.
    """
    if not model.is_continuous:
        raise ValueError("PFDBT applies to continuous-time models")
    if not isinstance(r, (int, np.integer)) or not 1 <= r < model.n:
        raise BadOrder(f"reduced order must satisfy 1 <= r < n={model.n}, got {r!r}")
    kind = _kind(band, rho, routing, variant)
    mapped = pfd_map(model, kind)
    bal = balance(mapped.model)
    disc = truncate(bal, r)
    reduced = invert_map(disc.reduced, kind)
    tail = disc.tail_sv
    scale = kind.scale
    result = ReductionResult(
        reduced=reduced, tail_sv=tail, bound=2.0 * scale * float(np.sum(tail)),
        bound_kind=band.kind.upper(), method=f"PFDBT-{routing.upper()}", band=band,
        scale=scale, rho=float(rho), routing=routing.lower(), hankel_sv=bal.hankel_sv,
        mapped=mapped.model, mapped_reduced=disc.reduced, kind=kind,
    )
    if not reduced.is_stable():
        warnings.warn(f"reduced model (r={r}, rho={rho!r}) is not Hurwitz", StabilityLost,
                      stacklevel=2)
    return result


def pfdbt_lf(model, band: FrequencyRange, rho, r, routing="r1") -> ReductionResult:
    if band.kind != "lf":
        raise ValueError("pfdbt_lf needs a low-frequency band")
    return pfdbt(model, band, rho, r, routing)


def pfdbt_hf(model, band: FrequencyRange, rho, r, routing="r1",
             variant: Variant = "consistent") -> ReductionResult:
    if band.kind != "hf":
        raise ValueError("pfdbt_hf needs a high-frequency band")
    return pfdbt(model, band, rho, r, routing, variant)


def pfdbt_stable(model, band, rho, r, routing="r1", factor=2.0, max_tries=12):
    """Run :func:`pfdbt`, enlarging ``|rho|`` by ``factor`` until the reduced model is Hurwitz.

    Returns the last result even if stability was never reached.
    """
    result = None
    for _ in range(max_tries):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", StabilityLost)
            result = pfdbt(model, band, rho, r, routing)
        if result.reduced_stable:
            return result
        rho = rho * factor if rho else (1.0 if _routing_flavor(routing) == "upper" else -1.0)
    warnings.warn(f"no Hurwitz reduced model found up to rho={result.rho!r}", StabilityLost,
                  stacklevel=2)
    return result


def default_rho_grid(model, band, routing="r1", eps=1e-3, multipliers=(1, 10, 100)):
    """``{rho* + eps} x multipliers`` on the admissible side of the routing's threshold."""
    side, t = admissible_side(model.A, _routing_flavor(routing), band)
    base = abs(t) + eps * max(1.0, abs(t))
    sign = 1.0 if side == "above" else -1.0
    return [sign * base * k for k in multipliers]


@dataclass(frozen=True)
class RhoPoint:
    rho: float
    bound: float
    reduced_stable: bool


@dataclass(frozen=True)
class RhoSweep:
    points: tuple
    skipped: tuple
    best_rho: float

    @property
    def best(self) -> RhoPoint:
        return next(p for p in self.points if p.rho == self.best_rho)


def _rho_point(model, band, r, routing, rho):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StabilityLost)
        res = pfdbt(model, band, rho, r, routing)
    return RhoPoint(float(rho), res.bound, res.reduced_stable)


def sweep_rho(model, band, r, routing, rho_grid: Sequence[float], map_fn=map) -> RhoSweep:
    """FF bound and reduced-model stability for each admissible ``rho`` in the grid.

    ``map_fn`` may be an executor's ``map``; every grid point is independent.
    Inadmissible points are skipped with the reason recorded.
    """
    grid = sorted(float(x) for x in rho_grid)
    if not grid:
        raise ValueError("rho grid is empty")

    def attempt(rho):
        try:
            return _rho_point(model, band, r, routing, rho)
        except FfmorError as exc:
            return (rho, str(exc))

    points, skipped = [], []
    for out in map_fn(attempt, grid):
        (points if isinstance(out, RhoPoint) else skipped).append(out)
    if not points:
        raise NoAdmissiblePoint(skipped)
    best = min(points, key=lambda p: (p.bound, p.rho))
    return RhoSweep(tuple(points), tuple(skipped), best.rho)


def ff_bounds(model, band, rho, routing="r1", variant: Variant = "consistent") -> np.ndarray:
    """Finite-frequency bound for every order ``r = 1..n``; entry ``r-1``."""
    hsv, scale = mapped_hankel_sv(model, band, rho, routing, variant)
    return np.array([2.0 * scale * float(np.sum(hsv[r:])) for r in range(1, hsv.size + 1)])


def min_order_for_tolerance(model, band, rho, routing, tol) -> int:
    """Smallest ``r`` in ``[1, n-1]`` whose finite-frequency bound is at most ``tol``."""
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    bounds = ff_bounds(model, band, rho, routing)
    return _first_below(bounds, tol)


def _first_below(bounds, tol):
    n = bounds.size
    for r in range(1, n):
        if bounds[r - 1] <= tol:
            return r
    raise NotAchievable(tol, float(bounds[n - 2]) if n >= 2 else math.inf)
