"""Franson-type analysis: two unbalanced Mach-Zehnder interferometers.

Each photon takes a short path or a long path delayed by ``delta_T``.
With ideal splitters every joint path has amplitude 1/4, so a
coincidence at time ``t`` sums four delayed samples of the two-photon
temporal amplitude ``phi(t1, t2)``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateFringe, DeltaTTooSmall, GridTooShort, InvalidDepth, NoDip
from .model import QuantumState
from .observables import (CoincidenceProfile, _pair_amplitude, band_extent, dip_metrics,
                          position_window, single_photon_intensity)

KINDS = ("pairs", "holes", "product")
#: (a, a', b, b') maximising S for a cos(phi1 - phi2) correlation
STANDARD_ANGLES = (0.0, math.pi / 2, math.pi / 4, 3 * math.pi / 4)


@dataclass(frozen=True, eq=False)
class TemporalAmplitude:
    t: np.ndarray
    values: np.ndarray
    background: complex
    correlation_width: float

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        if t.ndim != 1 or len(t) < 2:
            raise GridTooShort("time grid needs at least two points")
        dt = np.diff(t)
        if not np.allclose(dt, dt[0], rtol=1e-9, atol=0.0) or dt[0] <= 0:
            raise ValueError("time grid must be uniform and increasing")
        if values.shape != (len(t), len(t)):
            raise ValueError(f"values must be {len(t)}x{len(t)}, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("amplitude must be finite")
        if not self.correlation_width > 0:
            raise ValueError("correlation_width must be positive")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "background", complex(self.background))

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])


@dataclass(frozen=True)
class InterferometerSettings:
    delta_T: float
    phi1: float = 0.0
    phi2: float = 0.0

    def with_phases(self, phi1: float, phi2: float) -> "InterferometerSettings":
        return InterferometerSettings(self.delta_T, phi1, phi2)


def synthesize_amplitude(kind: str, t, background: complex = 1.0, depth: float = 1.0,
                         width: float = 1.0) -> TemporalAmplitude:
    """Model amplitudes on the square grid ``t x t``.

    ``pairs``: ridge ``exp(-(t1-t2)^2 / 2w^2)``; ``holes``:
    ``B (1 - d exp(-(t1-t2)^2 / 2w^2))``; ``product``: constant ``B``.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if not (0.0 <= depth <= 1.0):
        raise InvalidDepth(f"depth {depth} outside [0, 1]")
    if not width > 0:
        raise ValueError("width must be positive")
    t = np.asarray(t, dtype=float)
    r = t[None, :] - t[:, None]
    gauss = np.exp(-r * r / (2.0 * width * width))
    if kind == "pairs":
        return TemporalAmplitude(t, gauss.astype(complex), 0.0, width)
    if kind == "holes":
        return TemporalAmplitude(t, background * (1.0 - depth * gauss), background, width)
    return TemporalAmplitude(t, np.full(r.shape, background, dtype=complex), background, width)


# ----------------------------------------------------------------------
# from a propagated state


def hole_profile(state: QuantumState, reference: QuantumState | None, r) -> np.ndarray:
    """Complex ratio of ``state`` to ``reference`` along each diagonal ``x2 - x1 = r``.

    ``h(r) = integral phi phi_ref* dx1 / integral |phi_ref|^2 dx1``; for an
    unabsorbed state this is 1 for every ``r``.  Without a reference the
    best product approximation of ``state`` (leading singular pair) is used.
    """
    if reference is None:
        u, s, vh = np.linalg.svd(state.c)
        reference = dataclasses.replace(state, c=s[0] * np.outer(u[:, 0], vh[0]))
    r = np.asarray(r, dtype=float)
    x1 = position_window(reference, 1)
    phi = _pair_amplitude(state, x1, r)
    ref = _pair_amplitude(reference, x1, r)
    num = np.sum(phi * ref.conj(), axis=0)
    den = np.sum(np.abs(ref) ** 2, axis=0)
    return np.where(den > 0, num / np.where(den > 0, den, 1.0), 1.0)


def relative_width(state: QuantumState) -> float:
    """Standard deviation of ``x2 - x1`` for independent packets of the state's widths."""
    var = 0.0
    for photon in (1, 2):
        prof = single_photon_intensity(state, photon=photon)
        w = prof.values / prof.values.sum()
        mu = float(np.sum(w * prof.x))
        var += float(np.sum(w * (prof.x - mu) ** 2))
    return math.sqrt(var)


def from_simulation(state: QuantumState, t, reference: QuantumState | None = None,
                    speed: float = 1.0, extent: float | None = None) -> TemporalAmplitude:
    """Temporal amplitude ``h(t2 - t1)`` built from a propagated state.

    Positions map to detection times through ``t = x / speed``.  ``h`` is
    only meaningful where the packets overlap, so it is evaluated for
    ``|x2 - x1| <= extent`` (default three standard deviations of the
    separation) and continued beyond as the constant background, which
    is the median of ``h`` over the outer half of that window.  The
    correlation width is the dip FWHM of ``|h|^2`` converted to a Gaussian
    ``w``; a state with no measurable hole gets the band resolution
    ``2 pi / Delta k`` instead.
    """
    t = np.asarray(t, dtype=float)
    dt = t[1] - t[0]
    m = len(t)
    ref_state = reference if reference is not None else state
    if extent is None:
        extent = 3.0 * relative_width(ref_state)
    r_time = dt * np.arange(-(m - 1), m)
    inside = np.abs(r_time * speed) <= extent
    if inside.sum() < 3:
        raise GridTooShort("time step too coarse for the hole extent")
    h_in = hole_profile(state, reference, r_time[inside] * speed)
    outer = np.abs(r_time[inside] * speed) >= extent / 2
    background = complex(np.median(h_in[outer].real), np.median(h_in[outer].imag))
    h = np.full(len(r_time), background, dtype=complex)
    h[inside] = h_in
    resolution = 2 * math.pi / max(band_extent(g) for g in state.grids) / speed
    try:
        metrics = dip_metrics(CoincidenceProfile(s=r_time[inside], values=np.abs(h_in) ** 2))
        width = metrics.fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    except NoDip:
        width = resolution
    j = np.arange(m)
    values = h[j[None, :] - j[:, None] + (m - 1)]     # h(t2 - t1)
    return TemporalAmplitude(t, values, background, width)


def extracted_depth(amp: TemporalAmplitude) -> float:
    """``1 - |phi(t, t)| / |B|`` averaged along the diagonal."""
    if amp.background == 0:
        return 0.0
    return float(1.0 - np.mean(np.abs(np.diag(amp.values))) / abs(amp.background))


# ----------------------------------------------------------------------
# rates


def _shift(amp: TemporalAmplitude, delta_T: float) -> int:
    m = int(round(delta_T / amp.dt))
    if len(amp.t) - m < 2:
        raise GridTooShort(f"grid of length {amp.t[-1] - amp.t[0]:.4g} is too short for delta_T={delta_T}")
    return m


def _check_delay(amp: TemporalAmplitude, delta_T: float):
    if not delta_T > 3.0 * amp.correlation_width:
        raise DeltaTTooSmall(
            f"delta_T={delta_T:.4g} must exceed 3x the correlation width {amp.correlation_width:.4g}")


def _path_terms(amp: TemporalAmplitude, delta_T: float):
    """Samples (LL, SS, LS, SL) on the interior where all four exist."""
    _check_delay(amp, delta_T)
    m = _shift(amp, delta_T)
    v = amp.values
    i = np.arange(m, len(amp.t))
    return v[i - m, i - m], v[i, i], v[i - m, i], v[i, i - m]


def _rates(terms, dt: float, phi1, phi2) -> np.ndarray:
    ll, ss, ls, sl = terms
    phi1 = np.asarray(phi1, dtype=float)[..., None]
    phi2 = np.asarray(phi2, dtype=float)[..., None]
    total = (np.exp(1j * (phi1 + phi2)) * ll + ss
             + np.exp(1j * phi1) * ls + np.exp(1j * phi2) * sl)
    return np.trapezoid(np.abs(total) ** 2, dx=dt, axis=-1) / 16.0


def coincidence_rate(amp: TemporalAmplitude, settings: InterferometerSettings) -> float:
    """``(1/16) integral |e^{i(p1+p2)} phi_LL + phi_SS + e^{ip1} phi_LS + e^{ip2} phi_SL|^2 dt``.

    ``phi_LS(t) = phi(t - dT, t)`` has photon 1 on the long path.  ``delta_T``
    is rounded to the nearest grid multiple.
    """
    terms = _path_terms(amp, settings.delta_T)
    return float(_rates(terms, amp.dt, settings.phi1, settings.phi2))


def rate_grid(amp: TemporalAmplitude, delta_T: float, phi1, phi2) -> np.ndarray:
    """Rates for broadcastable phase arrays (one pass over the amplitude)."""
    return _rates(_path_terms(amp, delta_T), amp.dt, phi1, phi2)


def fringe_visibility(amp: TemporalAmplitude, delta_T: float, scan: Sequence[float],
                      mode: str = "difference", averaging: int = 16) -> float:
    """``(Rmax - Rmin) / (Rmax + Rmin)`` along the difference or sum phase.

    At each scanned value the rate is averaged over ``averaging`` equally
    spaced values of the other (orthogonal) phase combination, so a fringe
    that depends only on the orthogonal combination averages out.
    """
    scan = np.asarray(scan, dtype=float)
    if len(scan) < 8:
        raise ValueError("visibility needs at least 8 scan points")
    if mode not in ("difference", "sum"):
        raise ValueError("mode must be 'difference' or 'sum'")
    other = 4 * math.pi * np.arange(averaging) / averaging
    x = scan[:, None]
    if mode == "difference":
        phi1, phi2 = (other + x) / 2, (other - x) / 2
    else:
        phi1, phi2 = (x + other) / 2, (x - other) / 2
    r = rate_grid(amp, delta_T, phi1, phi2).mean(axis=1)
    rmax, rmin = float(r.max()), float(r.min())
    if rmax + rmin <= 0:
        raise DegenerateFringe("all rates vanish")
    return (rmax - rmin) / (rmax + rmin)


def correlation(amp: TemporalAmplitude, delta_T: float, phi1: float, phi2: float) -> float:
    pi = math.pi
    r = rate_grid(amp, delta_T, np.array([phi1, phi1 + pi, phi1 + pi, phi1]),
                  np.array([phi2, phi2 + pi, phi2, phi2 + pi]))
    total = r.sum()
    if total <= 0:
        raise DegenerateFringe("all rates vanish")
    return float((r[0] + r[1] - r[2] - r[3]) / total)


def chsh(amp: TemporalAmplitude, delta_T: float, angles=STANDARD_ANGLES) -> float:
    """``|E(a,b) - E(a,b') + E(a',b) + E(a',b')|``."""
    a, a2, b, b2 = angles
    e = lambda p, q: correlation(amp, delta_T, p, q)  # noqa: E731
    return abs(e(a, b) - e(a, b2) + e(a2, b) + e(a2, b2))


def fit_fringe(phase, rates) -> tuple[np.ndarray, float]:
    """Least-squares ``R = c0 + c1 cos(phase) + c2 sin(phase)``.

    Returns the coefficients and the largest residual relative to the
    fringe amplitude ``sqrt(c1^2 + c2^2)``.
    """
    phase = np.asarray(phase, dtype=float)
    design = np.column_stack([np.ones_like(phase), np.cos(phase), np.sin(phase)])
    coef, *_ = np.linalg.lstsq(design, np.asarray(rates, dtype=float), rcond=None)
    amp = math.hypot(coef[1], coef[2])
    resid = np.max(np.abs(design @ coef - rates))
    return coef, float(resid / amp) if amp > 0 else math.inf
