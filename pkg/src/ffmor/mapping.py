"""Parameterized frequency-dependent (PFD) system mappings and their inverses.

A continuous-time model and a finite band are sent to a mapped system whose
transfer function is the original one composed with a Moebius change of
variable, divided by a gain factor ``scale``::

    G_mapped(z) = G(x(z)) / scale          (up to a unimodular constant)

``x`` maps the unit circle (upper/lower, discrete-time targets) or the
imaginary axis (left/right, continuous-time targets) onto the boundary of a
disk whose stable side contains the band, so the entire-range gain of a
stable mapped system times ``scale`` bounds the in-band gain of the original.

Two formula sets are available per map. ``variant="consistent"`` (default)
satisfies the relation above exactly. ``variant="printed"`` reproduces the
published coefficients literally; for the left/right maps and for the lower
high-frequency map these differ from the consistent ones and only the lower
high-frequency one still satisfies the relation, with ``scale =
wh * (rho^2 + 1)^{1/2}``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.linalg

from .errors import (DegenerateSpectrum, NotAdmissible, NotStable, RoundTripFailure,
                     SingularInversion, SingularShift)
from .model import FrequencyRange, StateSpaceModel, TransferEvaluator

Flavor = Literal["upper", "lower", "left", "right"]
Variant = Literal["consistent", "printed"]

FLAVORS = ("upper", "lower", "left", "right")

_EPS = np.finfo(float).eps
SCHUR_MARGIN = 1e-9
HURWITZ_MARGIN = 1e-12


@dataclass(frozen=True)
class PfdMapKind:
    """Identifies one mapping: flavor, band (LF/MF or HF), parameter ``rho`` and formula variant."""

    flavor: Flavor
    band: FrequencyRange
    rho: float
    variant: Variant = "consistent"

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise ValueError(f"unknown flavor {self.flavor!r}")
        if self.band.kind == "ef":
            raise ValueError("PFD mappings need a finite band (lf, mf or hf)")
        if self.variant not in ("consistent", "printed"):
            raise ValueError(f"unknown variant {self.variant!r}")
        object.__setattr__(self, "rho", float(self.rho))

    @property
    def time_domain(self) -> str:
        return "discrete" if self.flavor in ("upper", "lower") else "continuous"

    @property
    def is_hf(self) -> bool:
        return self.band.kind == "hf"

    @property
    def bound_scale(self) -> float:
        """``(rho^2 + w^2)^{1/2}`` with ``w`` the band half-width or high-frequency edge."""
        return math.hypot(self.rho, self.band.edge)

    @property
    def scale(self) -> float:
        """Factor with ``sup_band sigma(G) <= scale * sup sigma(G_mapped)``."""
        if self.is_hf and self.flavor == "lower" and self.variant == "printed":
            return self.band.wh * math.hypot(self.rho, 1.0)
        return self.bound_scale

    def __str__(self):
        return f"{self.flavor}/{self.band}/rho={self.rho!r}/{self.variant}"


@dataclass(frozen=True, eq=False)
class MappedSystem:
    model: StateSpaceModel
    kind: PfdMapKind
    source_poles: np.ndarray


# --------------------------------------------------------------------------
# coefficient tables
#
# "resolvent" maps: with R = (c I - A)^{-1},
#   A_m = alpha I + beta R,  B_m = mu_b R B,  C_m = mu_c C R,  D_m = nu C R B + delta D
# "lower_hf" maps: with N = (w I - rho A)^{-1},
#   A_m = g A N,  B_m = h N B,  C_m = h C N,  D_m = (rho C N B + D) / sigma
# "affine" map (upper HF): A_m = (rho I + A)/s, B_m = B/s, C_m = C/s, D_m = D/s

def _coefficients(kind: PfdMapKind):
    rho = kind.rho
    band = kind.band
    printed = kind.variant == "printed"
    if not kind.is_hf:
        wc, wd = band.wc, band.wd
        w1, w2 = band.w1, band.w2
        s = math.hypot(rho, wd)
        if kind.flavor == "upper":
            return "resolvent", dict(c=rho + 1j * wc, alpha=0.0, beta=s, mu_b=1.0, mu_c=1.0,
                                     nu=1 / s, delta=1 / s)
        if kind.flavor == "lower":
            return "resolvent", dict(c=1j * wc, alpha=rho / s, beta=wd * wd / s, mu_b=wd / s,
                                     mu_c=wd / s, nu=1 / s, delta=1 / s)
        if kind.flavor == "left":
            if printed:
                return "resolvent", dict(c=1j * w1, alpha=-0.5, beta=-(rho - 1j * wd), mu_b=1.0,
                                         mu_c=1.0, nu=-1 / (rho - 1j * w1), delta=-1 / (rho - 1j * w1))
            k = rho + 1j * wd
            return "resolvent", dict(c=1j * w1, alpha=-0.5, beta=-k, mu_b=1.0, mu_c=1.0,
                                     nu=-1 / k, delta=-1 / k)
        if printed:
            return "resolvent", dict(c=1j * w2, alpha=-0.5, beta=-(rho + 1j * wd), mu_b=1.0,
                                     mu_c=1.0, nu=1 / (rho + 1j * wd), delta=1 / (rho + 1j * w1))
        k = rho - 1j * wd
        return "resolvent", dict(c=1j * w2, alpha=-0.5, beta=-k, mu_b=1.0, mu_c=1.0,
                                 nu=-1 / k, delta=-1 / k)

    wh = band.wh
    s = math.hypot(rho, wh)
    if kind.flavor == "upper":
        return "affine", dict(s=s)
    if kind.flavor == "lower":
        if printed:
            q = math.hypot(rho, 1.0)
            return "lower_hf", dict(g=q, w=wh, h=1.0, sigma=q * wh)
        return "lower_hf", dict(g=s, w=wh * wh, h=wh, sigma=s)
    if kind.flavor == "left":
        k = rho + 1j * wh
        if printed:
            return "resolvent", dict(c=1j * wh, alpha=-0.5, beta=k, mu_b=1.0, mu_c=1.0,
                                     nu=-1 / (rho - 1j * wh), delta=-1 / (rho - 1j * wh))
        return "resolvent", dict(c=1j * wh, alpha=0.5, beta=-k, mu_b=1.0, mu_c=1.0,
                                 nu=-1 / k, delta=-1 / k)
    k = rho - 1j * wh
    if printed:
        return "resolvent", dict(c=-1j * wh, alpha=-0.5, beta=k, mu_b=1.0, mu_c=1.0,
                                 nu=1 / k, delta=1 / k)
    return "resolvent", dict(c=-1j * wh, alpha=0.5, beta=-k, mu_b=1.0, mu_c=1.0,
                             nu=-1 / k, delta=-1 / k)


def _real_if_exact(x):
    x = complex(x)
    return x.real if x.imag == 0 else x


def _checked_inverse(M, point, exc=SingularShift):
    """Explicit inverse of ``M``; the mapped ``A`` matrices are built from it."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
    func = scipy.linalg.lapack.zgecon if np.iscomplexobj(lu) else scipy.linalg.lapack.dgecon
    rcond, _ = func(lu, np.linalg.norm(M, 1), norm="1")
    if not rcond >= _EPS:
        if exc is SingularShift:
            raise SingularShift(point, rcond)
        raise exc(f"matrix to invert is singular (rcond={rcond:.3e})")
    return scipy.linalg.lu_solve((lu, piv), np.eye(M.shape[0], dtype=M.dtype), check_finite=False)


def _forward(model: StateSpaceModel, kind: PfdMapKind) -> StateSpaceModel:
    A, B, C, D = model.A, model.B, model.C, model.D
    n = model.n
    I = np.eye(n)
    form, p = _coefficients(kind)
    if form == "affine":
        s = p["s"]
        return StateSpaceModel((kind.rho * I + A) / s, B / s, C / s, D / s, "discrete")
    if form == "lower_hf":
        M = p["w"] * I - kind.rho * A
        N = _checked_inverse(M, p["w"] / kind.rho if kind.rho else math.inf)
        NB = N @ B
        return StateSpaceModel(p["g"] * A @ N, p["h"] * NB, p["h"] * (C @ N),
                               (kind.rho * (C @ NB) + D) / p["sigma"], kind.time_domain)
    c = _real_if_exact(p["c"])
    R = _checked_inverse(c * I - A, c)
    RB = R @ B
    CRB = C @ RB
    return StateSpaceModel(
        p["alpha"] * I + p["beta"] * R,
        p["mu_b"] * RB,
        p["mu_c"] * (C @ R),
        p["nu"] * CRB + p["delta"] * D,
        kind.time_domain,
    )


def _inverse(mapped: StateSpaceModel, kind: PfdMapKind) -> StateSpaceModel:
    Am, Bm, Cm, Dm = mapped.A, mapped.B, mapped.C, mapped.D
    r = mapped.n
    I = np.eye(r)
    form, p = _coefficients(kind)
    if form == "affine":
        s = p["s"]
        return StateSpaceModel(s * Am - kind.rho * I, s * Bm, s * Cm, s * Dm, "continuous")
    if form == "lower_hf":
        M = p["g"] * I + kind.rho * Am
        Minv = _checked_inverse(M, None, SingularInversion)
        Ar = p["w"] * (Minv @ Am)
        Ninv = p["w"] * I - kind.rho * Ar
        Br = Ninv @ Bm / p["h"]
        Cr = Cm @ Ninv / p["h"]
        Dr = p["sigma"] * Dm - kind.rho * (Cm @ Ninv @ Bm) / p["h"] ** 2
        return StateSpaceModel(Ar, Br, Cr, Dr, "continuous")
    K = Am - p["alpha"] * I
    Kinv = _checked_inverse(K, None, SingularInversion)
    beta = p["beta"]
    c = _real_if_exact(p["c"])
    Ar = c * I - beta * Kinv
    KB = Kinv @ Bm
    Br = beta * KB / p["mu_b"]
    Cr = beta * (Cm @ Kinv) / p["mu_c"]
    Dr = (Dm - p["nu"] * beta * (Cm @ KB) / (p["mu_b"] * p["mu_c"])) / p["delta"]
    return StateSpaceModel(Ar, Br, Cr, Dr, "continuous")


# --------------------------------------------------------------------------
# admissibility thresholds

def _spectrum(A):
    lam = np.linalg.eigvals(np.asarray(A))
    if np.any(lam.real == 0):
        raise DegenerateSpectrum("A has eigenvalues on the imaginary axis; threshold undefined")
    return lam


def rho_star_mf(A, band: FrequencyRange, printed: bool = False) -> float:
    """Admissibility threshold for the LF/MF maps.

    The default returns the smallest ``rho`` for which the upper, left and
    right maps are stable (the lower map is stable for ``rho < -threshold``)::

        max_i (wd^2 - Re(l_i)^2 - (wc - Im(l_i))^2) / (-2 Re(l_i))

    This needs every eigenvalue in the open left half-plane. ``printed=True``
    evaluates the published expression, whose denominator is ``2 Re(l_i)`` and
    which uses ``wc + Im(l_i)``; it coincides with the default only when the
    numerator vanishes.
    """
    if band.kind not in ("lf", "mf"):
        raise ValueError("rho_star_mf needs a low- or middle-frequency band")
    lam = _spectrum(A)
    wc, wd = band.wc, band.wd
    if printed:
        vals = (wd ** 2 - lam.real ** 2 - (wc + lam.imag) ** 2) / (2 * lam.real)
        return float(np.max(vals))
    if np.any(lam.real > 0):
        raise NotStable("threshold form needs a Hurwitz A; check stability of the map directly")
    vals = (wd ** 2 - lam.real ** 2 - (wc - lam.imag) ** 2) / (-2 * lam.real)
    return float(np.max(vals))


def rho_star_hf(A, band: FrequencyRange) -> float:
    """``max_i (wh^2 - |l_i|^2) / (2 Re(l_i))``: the HF maps are stable for ``rho`` above it."""
    if band.kind != "hf":
        raise ValueError("rho_star_hf needs a high-frequency band")
    lam = _spectrum(A)
    vals = (band.wh ** 2 - np.abs(lam) ** 2) / (2 * lam.real)
    return float(np.max(vals))


def admissible_side(A, flavor: Flavor, band: FrequencyRange, variant: Variant = "consistent"):
    """Return ``(direction, threshold)`` with direction ``"above"`` or ``"below"``.

    The map is stable iff ``rho > threshold`` ("above") or ``rho < threshold``
    ("below"), for Hurwitz ``A``.
    """
    if band.kind == "hf":
        t = rho_star_hf(A, band)
        if flavor == "lower" and variant == "printed":
            return "above", t / band.wh
        return "above", t
    t = rho_star_mf(A, band)
    if flavor == "lower":
        return "below", -t
    return "above", t


def is_admissible(A, flavor: Flavor, band: FrequencyRange, rho: float,
                  variant: Variant = "consistent") -> bool:
    side, t = admissible_side(A, flavor, band, variant)
    return rho > t if side == "above" else rho < t


# --------------------------------------------------------------------------
# public mappings

def _verify_stable(model: StateSpaceModel, kind: PfdMapKind, source: StateSpaceModel):
    lam = np.linalg.eigvals(model.A)
    if kind.time_domain == "discrete":
        bad = np.max(np.abs(lam)) >= 1 - SCHUR_MARGIN
        what = f"spectral radius {np.max(np.abs(lam)):.6g}"
    else:
        bad = np.max(lam.real) >= -HURWITZ_MARGIN
        what = f"spectral abscissa {np.max(lam.real):.6g}"
    if bad:
        try:
            t = admissible_side(source.A, kind.flavor, kind.band, kind.variant)[1]
        except (DegenerateSpectrum, NotStable):
            t = None
        raise NotAdmissible(kind.rho, t, f"mapped {kind.flavor} system not stable ({what})")


def pfd_map(model: StateSpaceModel, kind: PfdMapKind) -> MappedSystem:
    """Apply the mapping described by ``kind`` and verify the mapped system is stable."""
    if not model.is_continuous:
        raise ValueError("PFD mappings apply to continuous-time models")
    if kind.band.kind == "ef":
        raise ValueError("PFD mappings need a finite band")
    mapped = _forward(model, kind)
    _verify_stable(mapped, kind, model)
    return MappedSystem(mapped, kind, np.linalg.eigvals(model.A))


def forward_map(model: StateSpaceModel, kind: PfdMapKind) -> StateSpaceModel:
    """The raw mapped quadruple, without the stability check of :func:`pfd_map`."""
    return _forward(model, kind)


def _band_check(band, allowed):
    if band.kind not in allowed:
        raise ValueError(f"expected a {'/'.join(allowed)} band, got {band.kind}")


def map_upper_mf(model, band, rho, variant: Variant = "consistent") -> MappedSystem:
    """Discrete-time upper map, ``A_m = (rho^2+wd^2)^{1/2} ((rho + j wc) I - A)^{-1}``."""
    _band_check(band, ("lf", "mf"))
    return pfd_map(model, PfdMapKind("upper", band, rho, variant))


def map_lower_mf(model, band, rho, variant: Variant = "consistent") -> MappedSystem:
    """Discrete-time lower map; stable for ``rho`` below ``-rho_star_mf``."""
    _band_check(band, ("lf", "mf"))
    return pfd_map(model, PfdMapKind("lower", band, rho, variant))


def map_left_mf(model, band, rho, variant: Variant = "consistent") -> MappedSystem:
    """Continuous-time map shifted at ``j w1``."""
    _band_check(band, ("lf", "mf"))
    return pfd_map(model, PfdMapKind("left", band, rho, variant))


def map_right_mf(model, band, rho, variant: Variant = "consistent") -> MappedSystem:
    """Continuous-time map shifted at ``j w2``."""
    _band_check(band, ("lf", "mf"))
    return pfd_map(model, PfdMapKind("right", band, rho, variant))


def map_upper_hf(model, band, rho, variant: Variant = "consistent") -> MappedSystem:
    """Affine discrete-time map ``A_m = (rho^2+wh^2)^{-1/2} (rho I + A)``."""
    _band_check(band, ("hf",))
    return pfd_map(model, PfdMapKind("upper", band, rho, variant))


def map_lower_hf(model, band, rho, variant: Variant = "consistent") -> MappedSystem:
    """Discrete-time map ``A_m = g A (w I - rho A)^{-1}``.

    ``variant="printed"`` uses ``g = (rho^2+1)^{1/2}, w = wh`` (gain factor
    ``wh (rho^2+1)^{1/2}``); the default uses ``g = (rho^2+wh^2)^{1/2}, w = wh^2``
    so the gain factor is ``(rho^2+wh^2)^{1/2}`` like every other map.
    """
    _band_check(band, ("hf",))
    return pfd_map(model, PfdMapKind("lower", band, rho, variant))


def map_left_hf(model, band, rho, variant: Variant = "consistent") -> MappedSystem:
    _band_check(band, ("hf",))
    return pfd_map(model, PfdMapKind("left", band, rho, variant))


def map_right_hf(model, band, rho, variant: Variant = "consistent") -> MappedSystem:
    _band_check(band, ("hf",))
    return pfd_map(model, PfdMapKind("right", band, rho, variant))


# --------------------------------------------------------------------------
# inversion

def _probe_points(kind: PfdMapKind, count: int):
    if kind.time_domain == "discrete":
        theta = np.linspace(-np.pi, np.pi, count, endpoint=False) + np.pi / count
        return np.exp(1j * theta)
    half = count // 2
    w = np.logspace(-3, 3, count - half)
    return 1j * np.concatenate([-w[:half][::-1], w])


def transfer_mismatch(G1: StateSpaceModel, G2: StateSpaceModel, points) -> float:
    """``max |G1 - G2| / max(|G2|, tiny)`` over points where both are evaluable."""
    e1, e2 = TransferEvaluator(G1), TransferEvaluator(G2)
    num = 0.0
    den = 0.0
    for pt in points:
        try:
            a, b = e1(pt), e2(pt)
        except SingularShift:
            continue
        num = max(num, float(np.max(np.abs(a - b))))
        den = max(den, float(np.max(np.abs(b))))
    return num / max(den, np.finfo(float).tiny)


def invert_map(mapped_reduced: StateSpaceModel, kind: PfdMapKind, verify: bool = True,
               tol: float = 1e-6) -> StateSpaceModel:
    """Recover the continuous-time model whose image under ``kind`` is ``mapped_reduced``.

    With ``verify`` the forward map is re-applied and compared with the input
    at 50 points of the mapped system's frequency axis; a relative mismatch
    above ``tol`` raises :class:`RoundTripFailure`.
    """
    if mapped_reduced.time_domain != kind.time_domain:
        raise RoundTripFailure(math.inf)
    model = _inverse(mapped_reduced, kind)
    if verify:
        try:
            again = _forward(model, kind)
        except SingularShift:
            raise RoundTripFailure(math.inf) from None
        res = transfer_mismatch(again, mapped_reduced, _probe_points(kind, 50))
        if not res <= tol:
            raise RoundTripFailure(res)
    return model


def band_points(band: FrequencyRange, count: int) -> np.ndarray:
    """``count`` frequencies (rad/s) inside ``band``, used for round-trip and sanity checks."""
    if band.kind == "hf":
        half = count // 2
        w = band.wh * np.logspace(0, 3, count - half)
        return np.concatenate([-w[:half][::-1], w])
    if band.kind == "ef":
        half = count // 2
        w = np.logspace(-3, 3, count - half)
        return np.concatenate([-w[:half][::-1], w])
    return np.linspace(band.w1, band.w2, count)
