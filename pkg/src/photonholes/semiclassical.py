"""Classical intensity-product absorption law for two co-propagating pulses.

``dI1/dt = dI2/dt = -alpha I1 I2``.  With equal group velocities the
comoving coordinate ``xi = x - t`` turns the transport equations into an
independent ODE at every ``xi``, so nothing is advected numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter, NoConvergence, StepTooLarge
from .model import SimConfig


@dataclass(frozen=True, eq=False)
class ClassicalField:
    xi: np.ndarray
    I1: np.ndarray
    I2: np.ndarray
    alpha: float = 0.0

    def __post_init__(self):
        for name in ("xi", "I1", "I2"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (self.xi.shape == self.I1.shape == self.I2.shape) or self.xi.ndim != 1:
            raise ValueError("xi, I1 and I2 must be 1-d arrays of equal length")
        if np.any(self.I1 < 0) or np.any(self.I2 < 0):
            raise InvalidParameter("I1/I2", "intensities must be nonnegative")
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise InvalidParameter("alpha", "must be a nonnegative finite number")

    def energy(self, I1=None, I2=None) -> float:
        I1 = self.I1 if I1 is None else I1
        I2 = self.I2 if I2 is None else I2
        return float(np.trapezoid(I1 + I2, self.xi))

    def with_alpha(self, alpha: float) -> "ClassicalField":
        return ClassicalField(self.xi, self.I1, self.I2, alpha)


def gaussian_field(config: SimConfig, alpha: float = 0.0, scale: float = 1.0,
                   points: int = 801, span: float = 8.0) -> ClassicalField:
    """Pulses with the quantum run's intensity envelopes.

    Each intensity is a Gaussian of standard deviation ``1 / (2 delta k)``
    carrying energy ``scale``.
    """
    s1 = 1.0 / (2.0 * config.packet_width1)
    s2 = 1.0 / (2.0 * config.packet_width2)
    half = span * max(s1, s2)
    xi = np.linspace(-half, half, points)
    shift = config.packet_center_2 - config.packet_center_1

    def pulse(x0, s):
        return scale * np.exp(-((xi - x0) ** 2) / (2 * s * s)) / (s * math.sqrt(2 * math.pi))

    return ClassicalField(xi, pulse(0.0, s1), pulse(shift, s2), alpha)


def uniform_field(intensity: float, alpha: float, length: float = 1.0, points: int = 11) -> ClassicalField:
    xi = np.linspace(0.0, length, points)
    flat = np.full(points, float(intensity))
    return ClassicalField(xi, flat, flat.copy(), alpha)


@dataclass(frozen=True, eq=False)
class EnergyTrajectory:
    """``energy[j]`` is ``U(t[j]) = integral (I1 + I2) dxi``."""

    t: np.ndarray
    energy: np.ndarray
    I1: np.ndarray
    I2: np.ndarray

    def fractional_losses(self, every: int = 1) -> np.ndarray:
        """``1 - U(t_{j+every}) / U(t_j)`` for consecutive blocks of ``every`` steps."""
        u = self.energy[::every]
        return 1.0 - u[1:] / u[:-1]


def _rhs(alpha, i1, i2):
    r = -alpha * i1 * i2
    return r, r


def solve_semiclassical(field: ClassicalField, duration: float, dt: float) -> EnergyTrajectory:
    """Pointwise RK4 from ``t = 0`` to ``duration`` in steps of (at most) ``dt``."""
    if not duration > 0 or not dt > 0:
        raise InvalidParameter("duration/dt", "must be positive")
    steps = max(1, math.ceil(duration / dt - 1e-12))
    h = duration / steps
    a = field.alpha
    i1, i2 = field.I1.copy(), field.I2.copy()
    energy = np.empty(steps + 1)
    energy[0] = field.energy(i1, i2)
    for j in range(1, steps + 1):
        k1a, k1b = _rhs(a, i1, i2)
        k2a, k2b = _rhs(a, i1 + 0.5 * h * k1a, i2 + 0.5 * h * k1b)
        k3a, k3b = _rhs(a, i1 + 0.5 * h * k2a, i2 + 0.5 * h * k2b)
        k4a, k4b = _rhs(a, i1 + h * k3a, i2 + h * k3b)
        i1 = i1 + h / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a)
        i2 = i2 + h / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b)
        if np.any(i1 < 0) or np.any(i2 < 0):
            raise StepTooLarge(f"negative intensity at t={j * h:.6g}; reduce dt (now {h:.3g})")
        energy[j] = field.energy(i1, i2)
    return EnergyTrajectory(t=h * np.arange(steps + 1), energy=energy, I1=i1, I2=i2)


def transit_loss(field: ClassicalField, transit: float, steps: int = 100) -> float:
    """Fractional energy lost while the pulses cross one atom spacing."""
    if field.alpha == 0.0:
        return 0.0
    traj = solve_semiclassical(field, transit, transit / steps)
    return 1.0 - traj.energy[-1] / traj.energy[0]


def calibrate_alpha(config: SimConfig, target_per_atom_loss: float = 0.02,
                    field: ClassicalField | None = None, rtol: float = 1e-4,
                    max_iter: int = 200) -> float:
    """``alpha`` for which one transit of ``atom_spacing`` loses the target fraction.

    Bisection in ``log alpha``; stops once the loss is within ``rtol``
    (relative) of the target.
    """
    if not 0.0 <= target_per_atom_loss < 1.0:
        raise InvalidParameter("target_per_atom_loss", "must lie in [0, 1)")
    if target_per_atom_loss == 0.0:
        return 0.0
    field = gaussian_field(config) if field is None else field
    transit = config.atom_spacing

    def loss(alpha):
        return transit_loss(field.with_alpha(alpha), transit)

    lo, hi = 0.0, 1.0
    while loss(hi) < target_per_atom_loss:
        lo, hi = hi, hi * 4.0
        if hi > 1e300:
            raise NoConvergence("no alpha reaches the target loss")
    for _ in range(max_iter):
        mid = math.sqrt(lo * hi) if lo > 0 else hi / 4.0
        value = loss(mid)
        if abs(value - target_per_atom_loss) <= rtol * target_per_atom_loss:
            return mid
        if value < target_per_atom_loss:
            lo = mid
        else:
            hi = mid
    raise NoConvergence(f"bisection did not reach rtol={rtol:g} in {max_iter} iterations")


def semiclassical_run(config: SimConfig, target_per_atom_loss: float = 0.02,
                      n_transits: int | None = None, steps_per_transit: int = 100):
    """Calibrated Gaussian-pulse run over ``n_transits`` atom spacings.

    Returns ``(alpha, trajectory)``.
    """
    n_transits = config.n_atoms if n_transits is None else n_transits
    field = gaussian_field(config)
    alpha = calibrate_alpha(config, target_per_atom_loss, field)
    traj = solve_semiclassical(field.with_alpha(alpha), n_transits * config.atom_spacing,
                               config.atom_spacing / steps_per_transit)
    return alpha, traj
