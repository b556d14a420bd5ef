"""Largest-singular-value sweeps, infinity norms and band-gain estimates."""
from __future__ import annotations

import math
import os

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import DimensionMismatch, NotStable
from .mapping import PfdMapKind, Variant, pfd_map
from .model import FrequencyRange, SigmaSweep, StateSpaceModel, sigma_max_at

DEFAULT_GRID_POINTS = 600
EF_RANGE = (1e-4, 1e6)
HF_SPAN = 1e3
LF_DECADES = 4
HINF_GRID = 2000
HINF_PEAKS = 5
HINF_POLE_POINTS = 60


def grid_points() -> int:
    """Default sweep length, overridable with ``FFMOR_GRID_POINTS``."""
    raw = os.environ.get("FFMOR_GRID_POINTS", "").strip()
    if not raw:
        return DEFAULT_GRID_POINTS
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"FFMOR_GRID_POINTS must be an integer, got {raw!r}") from None
    if n < 2:
        raise ValueError("FFMOR_GRID_POINTS must be at least 2")
    return n


def _log_down(top, count, decades):
    # count log-spaced values ending at ``top``, increasing
    if count <= 0:
        return np.empty(0)
    return np.geomspace(top, top * 10.0 ** (-decades), count)[::-1]


def _symmetric(pos, zero):
    mid = [0.0] if zero else []
    return np.concatenate([-pos[::-1], mid, pos])


def frequency_grid(band: FrequencyRange, n_points: int, time_domain: str = "continuous"):
    """Sample frequencies covering ``band``, log-spaced with the band edges included.

    Discrete-time grids are ``n_points`` angles spread uniformly on ``[-pi, pi]``.
    High-frequency bands stop at ``1e3`` times the edge.
    """
    if n_points < 2:
        raise ValueError("a sweep needs at least 2 points")
    if time_domain == "discrete":
        if band.kind != "ef":
            raise ValueError("discrete-time sweeps cover the entire range only")
        return np.linspace(-np.pi, np.pi, n_points)
    kind = band.kind
    if kind == "lf":
        zero = n_points % 2 == 1
        return _symmetric(_log_down(band.wl, n_points // 2, LF_DECADES), zero)
    if kind == "mf":
        if band.w1 > 0:
            return np.geomspace(band.w1, band.w2, n_points)
        return np.concatenate([[0.0], _log_down(band.w2, n_points - 1, LF_DECADES)])
    if kind == "hf":
        half = n_points // 2
        pos = band.wh * np.geomspace(1.0, HF_SPAN, n_points - half)
        neg = band.wh * np.geomspace(1.0, HF_SPAN, half)
        return np.concatenate([-neg[::-1], pos])
    lo, hi = EF_RANGE
    zero = n_points % 2 == 1
    return _symmetric(np.geomspace(lo, hi, n_points // 2), zero)


def _axis_points(omega, time_domain):
    return np.exp(1j * omega) if time_domain == "discrete" else 1j * omega


def sigma_sweep(model: StateSpaceModel, band: FrequencyRange | None = None,
                n_points: int | None = None) -> SigmaSweep:
    """``sigma_max(G)`` over a grid covering ``band``.

    Frequencies where ``G`` cannot be evaluated (a pole on the axis) are left
    out of the sweep and listed in ``skipped``.
    """
    band = band if band is not None else FrequencyRange.ef()
    n_points = grid_points() if n_points is None else n_points
    omega = frequency_grid(band, n_points, model.time_domain)
    sv = sigma_max_at(model, _axis_points(omega, model.time_domain))
    ok = ~np.isnan(sv)
    return SigmaSweep(omega[ok], sv[ok], model.time_domain, tuple(float(w) for w in omega[~ok]))


def _hinf_grid(model: StateSpaceModel, lam):
    if model.is_continuous:
        mags = np.abs(lam[np.abs(lam) > 0])
        lo = min(EF_RANGE[0], 1e-2 * mags.min()) if mags.size else EF_RANGE[0]
        hi = max(EF_RANGE[1], 1e2 * mags.max()) if mags.size else EF_RANGE[1]
        pos = np.concatenate([[0.0], np.geomspace(lo, hi, HINF_GRID), np.abs(lam.imag)])
        w = pos if model.is_real else np.concatenate([-pos, pos, lam.imag])
    else:
        ang = np.angle(lam)
        # poles close to the unit circle give peaks of width ~ 1 - |lambda|
        gap = np.clip(1.0 - np.abs(lam), 1e-14, None)
        offs = np.geomspace(1e-2 * gap, np.pi, HINF_POLE_POINTS, axis=-1)
        near = (ang[:, None] + np.concatenate([-offs, offs], axis=1)).ravel()
        near = (near + np.pi) % (2 * np.pi) - np.pi
        if model.is_real:
            w = np.concatenate([np.linspace(0.0, np.pi, HINF_GRID), np.abs(ang), np.abs(near)])
        else:
            w = np.concatenate([np.linspace(-np.pi, np.pi, 2 * HINF_GRID), ang, near])
    w = np.unique(w)
    # drop near-duplicates so every interior peak has a proper bracket
    keep = np.concatenate([[True], np.diff(w) > 1e-12 * np.maximum(1.0, np.abs(w[1:]))])
    return w[keep]


def hinf_norm(model: StateSpaceModel):
    """Supremum of ``sigma_max`` over the whole frequency axis and where it occurs.

    A coarse grid, refined by golden-section search around its five largest
    local maxima. For continuous models ``omega = inf`` is reported when the
    feedthrough ``sigma_max(D)`` dominates. Returns ``(gamma, omega_peak)``.
    """
    if not model.is_stable():
        raise NotStable("infinity norm needs a stable model")
    lam = model.poles()
    w = _hinf_grid(model, lam)
    s = sigma_max_at(model, _axis_points(w, model.time_domain))
    s = np.where(np.isnan(s), -np.inf, s)
    k0 = int(np.argmax(s))
    best, peak = float(s[k0]), float(w[k0])

    interior = np.flatnonzero((s[1:-1] >= s[:-2]) & (s[1:-1] >= s[2:])) + 1
    top = interior[np.argsort(s[interior])[::-1][:HINF_PEAKS]]

    def neg(x):
        v = sigma_max_at(model, _axis_points(np.array([x]), model.time_domain))[0]
        return -v if np.isfinite(v) else 0.0

    for k in top:
        a, b, c = w[k - 1], w[k], w[k + 1]
        if not (s[k] > s[k - 1] or s[k] > s[k + 1]):
            continue
        try:
            res = scipy.optimize.minimize_scalar(neg, bracket=(a, b, c), method="golden",
                                                 options={"xtol": 1e-10})
        except ValueError:
            # flat top on one side: no valid bracket, fall back to bounded Brent
            res = scipy.optimize.minimize_scalar(neg, bounds=(a, c), method="bounded",
                                                 options={"xatol": 1e-12 * max(1.0, abs(b))})
        if a <= res.x <= c and -res.fun > best:
            best, peak = float(-res.fun), float(res.x)

    if model.is_continuous:
        d = float(np.linalg.norm(model.D, 2)) if model.D.size else 0.0
        if d > best:
            best, peak = d, math.inf
    return best, peak


def band_gain_bound(model: StateSpaceModel, band: FrequencyRange, rho: float, flavor: str,
                    variant: Variant = "consistent") -> float:
    """Upper estimate of ``sup_band sigma_max(G)``: ``scale * ||G_mapped||_inf``."""
    kind = PfdMapKind(flavor.lower(), band, rho, variant)
    mapped = pfd_map(model, kind)
    return kind.scale * hinf_norm(mapped.model)[0]


def error_system(modelA: StateSpaceModel, modelB: StateSpaceModel) -> StateSpaceModel:
    """Realization of ``G_A - G_B``: ``diag(A_B, A_A)``, ``[B_B; B_A]``, ``[-C_B, C_A]``, ``D_A - D_B``."""
    if (modelA.p, modelA.m) != (modelB.p, modelB.m):
        raise DimensionMismatch(
            f"models have (p, m) = {(modelA.p, modelA.m)} and {(modelB.p, modelB.m)}")
    if modelA.time_domain != modelB.time_domain:
        raise ValueError("models live in different time domains")
    A = scipy.linalg.block_diag(modelB.A, modelA.A)
    B = np.vstack([modelB.B, modelA.B])
    C = np.hstack([-modelB.C, modelA.C])
    return StateSpaceModel(A, B, C, modelA.D - modelB.D, modelA.time_domain)


def band_error(modelA: StateSpaceModel, modelB: StateSpaceModel, band: FrequencyRange | None = None,
               n_points: int | None = None) -> SigmaSweep:
    """``sigma_max(G_A - G_B)`` over ``band``."""
    return sigma_sweep(error_system(modelA, modelB), band, n_points)


def band_error_sup(modelA, modelB, band=None, n_points=None) -> float:
    """Grid maximum of :func:`band_error`, plus the ``omega -> inf`` limit for unbounded bands."""
    band = band if band is not None else FrequencyRange.ef()
    worst = band_error(modelA, modelB, band, n_points).max()
    if modelA.is_continuous and band.kind in ("hf", "ef"):
        worst = max(worst, float(np.linalg.norm(modelA.D - modelB.D, 2)))
    return worst
