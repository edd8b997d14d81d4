"""Measured quantities: intensities, coincidences, survival and dip shape."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import GridTooCoarse, InsufficientData, NoDip, ToleranceNotMet
from .model import ModeGrid, QuantumState


@dataclass(frozen=True, eq=False)
class IntensityProfile:
    x: np.ndarray
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class CoincidenceProfile:
    s: np.ndarray
    values: np.ndarray
    eta: float = 1.0


@dataclass(frozen=True)
class DipMetrics:
    depth: float
    fwhm: float
    background: float


# ----------------------------------------------------------------------
# position grids


def band_extent(grid: ModeGrid) -> float:
    return grid.spacing * (grid.n - 1)


def mean_position(state: QuantumState, photon: int = 1) -> float:
    """Mean position of a photon, unwrapped to the image nearest free flight."""
    g = state.grids[photon - 1]
    c = state.c if photon == 1 else state.c.T
    expected = state.expected_position(photon)
    # <exp(i dk x)> couples neighbouring modes
    moment = np.vdot(c[1:], c[:-1])
    if abs(moment) == 0.0:
        return expected
    circular = float(np.angle(moment) / g.spacing)
    shift = (circular - expected + g.period / 2) % g.period - g.period / 2
    return expected + shift


def position_window(state: QuantumState, photon: int = 1, points_per_mode: int = 8,
                    center: float | None = None) -> np.ndarray:
    """One full period of ``photon``'s box centred on the packet.

    The grid excludes the right endpoint so that a plain sum times the
    spacing is the periodic trapezoid rule.
    """
    g = state.grids[photon - 1]
    if center is None:
        center = mean_position(state, photon)
    count = points_per_mode * g.n
    return center - g.period / 2 + g.period * np.arange(count) / count


def _is_full_period(x: np.ndarray, period: float) -> bool:
    if len(x) < 2:
        return False
    dx = np.diff(x)
    return bool(np.allclose(dx, dx[0], rtol=1e-9, atol=0.0)
                and math.isclose(dx[0] * len(x), period, rel_tol=1e-9))


def _integrate(values: np.ndarray, x: np.ndarray, period: float, axis: int = -1):
    if _is_full_period(x, period):
        return values.sum(axis=axis) * (x[1] - x[0])
    return np.trapezoid(values, x, axis=axis)


def _synthesis(grid: ModeGrid, x) -> np.ndarray:
    return np.exp(1j * np.outer(np.asarray(x, dtype=float), grid.k_values)) / math.sqrt(grid.period)


# ----------------------------------------------------------------------
# profiles


def single_photon_intensity(state: QuantumState, x_grid=None, photon: int = 1) -> IntensityProfile:
    """Intensity of one photon with the other traced out.

    ``I1(x) = sum_k2 |sum_k1 c(k1, k2) exp(i k1 x) / sqrt(L1)|^2``.
    """
    if x_grid is None:
        x_grid = position_window(state, photon)
    x = np.asarray(x_grid, dtype=float)
    g = state.grids[photon - 1]
    c = state.c if photon == 1 else state.c.T
    field = _synthesis(g, x) @ c
    return IntensityProfile(x=x, values=np.sum(np.abs(field) ** 2, axis=1))


def default_s_grid(state: QuantumState, span_bands: float = 4.0, oversample: int = 4) -> np.ndarray:
    """Symmetric separation grid of ``+-span_bands * 2 pi / Delta k``.

    Sampled ``oversample`` times finer than the band resolution.
    """
    band = max(band_extent(g) for g in state.grids)
    resolution = 2 * math.pi / band
    half = span_bands * resolution
    step = resolution / (2 * oversample)
    m = int(math.ceil(half / step))
    return step * np.arange(-m, m + 1)


def _check_resolution(state: QuantumState, x: np.ndarray, points: int = 8):
    band = max(band_extent(g) for g in state.grids)
    limit = 2 * math.pi / band / points
    if len(x) < 2 or np.max(np.diff(x)) > limit * (1 + 1e-9):
        raise GridTooCoarse(
            f"x1 grid spacing must be <= {limit:.4g} um ({points} points per 2 pi / Delta k)")


def _pair_amplitude(state: QuantumState, x1: np.ndarray, s: np.ndarray) -> np.ndarray:
    """``phi(x1, x1 + s)`` as an (x1, s) array."""
    g1, g2 = state.grids
    rows = _synthesis(g1, x1) @ state.c                  # (x1, k2)
    rows = rows * _synthesis(g2, x1) * math.sqrt(g2.period)
    return rows @ (np.exp(1j * np.outer(g2.k_values, s)) / math.sqrt(g2.period))


def coincidence_probability(state: QuantumState, s_grid=None, eta: float = 1.0,
                            x1_grid=None) -> CoincidenceProfile:
    """Probability of detecting the photons a distance ``s`` apart.

    ``P2(s) = eta * integral dx1 |phi(x1, x1 + s)|^2`` with the ``x1``
    integral over one period of photon 1's box.
    """
    s = default_s_grid(state) if s_grid is None else np.asarray(s_grid, dtype=float)
    x1 = position_window(state, 1) if x1_grid is None else np.asarray(x1_grid, dtype=float)
    _check_resolution(state, x1)
    dens = np.abs(_pair_amplitude(state, x1, s)) ** 2
    values = eta * _integrate(dens, x1, state.grids[0].period, axis=0)
    return CoincidenceProfile(s=s, values=np.maximum(values, 0.0), eta=eta)


def separable_coincidence(state: QuantumState, s_grid=None, x1_grid=None) -> CoincidenceProfile:
    """Coincidence profile a product state with the same intensities would give.

    ``integral dx I1(x) I2(x + s) / ||c||^2``.
    """
    s = default_s_grid(state) if s_grid is None else np.asarray(s_grid, dtype=float)
    x1 = position_window(state, 1) if x1_grid is None else np.asarray(x1_grid, dtype=float)
    i1 = single_photon_intensity(state, x1, photon=1).values
    i2 = single_photon_intensity(state, np.add.outer(x1, s).ravel(), photon=2).values
    i2 = i2.reshape(len(x1), len(s))
    values = _integrate(i1[:, None] * i2, x1, state.grids[0].period, axis=0) / state.survival
    return CoincidenceProfile(s=s, values=values)


def normalized_coincidence(state: QuantumState, s_grid=None, x1_grid=None) -> CoincidenceProfile:
    """``P2(s)`` divided by its separable expectation.

    Identically 1 for a product state; photon holes show up as a dip
    below 1 around ``s = 0``.
    """
    s = default_s_grid(state) if s_grid is None else np.asarray(s_grid, dtype=float)
    x1 = position_window(state, 1) if x1_grid is None else np.asarray(x1_grid, dtype=float)
    p2 = coincidence_probability(state, s, 1.0, x1).values
    ref = separable_coincidence(state, s, x1).values
    return CoincidenceProfile(s=s, values=p2 / ref)


def coincidence_ratio(state: QuantumState, reference: QuantumState, s_grid=None) -> CoincidenceProfile:
    """``P2(s)`` of ``state`` relative to ``P2(s)`` of ``reference``.

    With ``reference`` propagated through the same atoms but without the
    second transition, every single-photon effect (the finite-band phase
    shift of photon 1 in particular) cancels and what is left is the
    hole dug by two-photon absorption.
    """
    if reference.grids[0].n != state.grids[0].n:
        raise ValueError("state and reference use different mode grids")
    s = default_s_grid(state) if s_grid is None else np.asarray(s_grid, dtype=float)
    x1 = position_window(reference, 1)
    p2 = coincidence_probability(state, s, 1.0, x1).values
    ref = coincidence_probability(reference, s, 1.0, x1).values
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.where(ref > 0, p2 / ref, 1.0)
    return CoincidenceProfile(s=s, values=values)


# ----------------------------------------------------------------------
# survival analysis


def survival_series(trajectory, tolerance: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """``(atom index, P_I)`` arrays; checks that ``P_I`` never increases."""
    m = trajectory.atom_index
    p = trajectory.p_survival
    if len(p) == 0:
        raise InsufficientData("empty trajectory")
    rises = np.diff(np.concatenate([[1.0], p]))
    if np.any(rises > tolerance):
        raise ToleranceNotMet(f"survival probability increases by {rises.max():.3e}")
    return m, p


@dataclass(frozen=True)
class ExponentialFit:
    """``P(m) = p0 * ratio**m``."""

    ratio: float
    p0: float

    def predict(self, m) -> np.ndarray:
        return self.p0 * self.ratio ** np.asarray(m, dtype=float)


def fit_exponential_first_two(series: Sequence[float]) -> ExponentialFit:
    """Exponential through ``P(1)`` and ``P(2)`` (``series[0]``, ``series[1]``)."""
    p = np.asarray(series, dtype=float)
    if len(p) < 2:
        raise InsufficientData("need at least two points to fit")
    if p[0] <= 0 or p[1] <= 0:
        raise InsufficientData("first two points must be positive")
    ratio = p[1] / p[0]
    return ExponentialFit(ratio=float(ratio), p0=float(p[0] / ratio))


def per_atom_loss(series: Sequence[float], initial: float = 1.0) -> np.ndarray:
    """Fractional loss at each atom, ``1 - P(m) / P(m - 1)`` with ``P(0) = initial``."""
    p = np.concatenate([[initial], np.asarray(series, dtype=float)])
    return 1.0 - p[1:] / p[:-1]


def detect_plateau(series: Sequence[float], window: int = 5, threshold: float = 0.2,
                   initial: float = 1.0) -> int | None:
    """First atom index where the mean fractional loss over ``window`` atoms
    (starting at that atom) drops below ``threshold`` times the loss at atom 1.

    Returns ``None`` if that never happens.
    """
    loss = per_atom_loss(series, initial)
    if len(loss) <= window:
        raise InsufficientData(f"need more than {window} points")
    limit = threshold * loss[0]
    means = np.convolve(loss, np.ones(window) / window, mode="valid")
    hits = np.nonzero(means < limit)[0]
    return int(hits[0]) + 1 if len(hits) else None


def dip_metrics(profile: CoincidenceProfile, noise_floor: float = 1e-6) -> DipMetrics:
    """Depth and full width at half depth of a dip in a coincidence profile.

    The background is the median over the outer quarter of the ``s`` grid
    on each side.
    """
    s = np.asarray(profile.s, dtype=float)
    v = np.asarray(profile.values, dtype=float)
    q = max(1, len(s) // 4)
    background = float(np.median(np.concatenate([v[:q], v[-q:]])))
    if not background > 0:
        raise NoDip("profile has no positive background")
    i_min = int(np.argmin(v))
    depth = 1.0 - v[i_min] / background
    if depth < noise_floor:
        raise NoDip(f"dip depth {depth:.3g} below noise floor {noise_floor:g}")
    level = background * (1.0 - depth / 2.0)

    def crossing(indices):
        prev = i_min
        for i in indices:
            if v[i] >= level:
                # linear interpolation between prev and i
                frac = (level - v[prev]) / (v[i] - v[prev])
                return s[prev] + frac * (s[i] - s[prev])
            prev = i
        raise NoDip("dip does not return to half depth inside the grid")

    left = crossing(range(i_min - 1, -1, -1))
    right = crossing(range(i_min + 1, len(s)))
    return DipMetrics(depth=float(depth), fwhm=float(right - left), background=background)
