"""Configuration, mode grids, basis bookkeeping and initial states.

Units: hbar = c = 1 with lengths in micrometres.  Times are measured in
micrometres of light travel and energies/frequencies in inverse
micrometres, so a 1 um carrier has k = omega = 2*pi.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, NamedTuple, Union

import numpy as np

from .errors import DegenerateState, InvalidParameter, UnknownKey

TWO_PI = 2.0 * math.pi

#: Dispersion relations selectable by name from a config file.  The
#: default keeps both photons at the same group velocity for any carrier.
DISPERSIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "linear": np.abs,
}


@dataclass(frozen=True)
class IntegratorSettings:
    """Time-stepping controls for one atom window.

    ``step`` overrides the automatic RK4 step, which is
    ``2*pi / (step_fraction * spectral_bound)``, reduced if needed so the
    estimated amplitude error per window stays below ``amplitude_tolerance``.
    """

    backend: str = "rk4"
    step: float | None = None
    step_fraction: float = 50.0
    norm_tolerance: float = 1e-9
    amplitude_tolerance: float = 1e-9

    def __post_init__(self):
        if self.backend not in ("rk4", "spectral"):
            raise InvalidParameter("integrator.backend", "must be 'rk4' or 'spectral'")
        if self.step is not None and not self.step > 0:
            raise InvalidParameter("integrator.step", "must be positive")
        if not self.step_fraction > 0:
            raise InvalidParameter("integrator.step_fraction", "must be positive")
        for name in ("norm_tolerance", "amplitude_tolerance"):
            if not getattr(self, name) > 0:
                raise InvalidParameter(f"integrator.{name}", "must be positive")


@dataclass(frozen=True)
class SimConfig:
    """All physical and numerical parameters of one run.

    Band and packet widths are fractions of the carrier wave number
    (``Delta k = F k0``, ``delta k = f k0``) and couplings are fractions of
    half the carrier frequency (``M = g omega0 / 2``).  ``F2``/``f2`` default
    to ``F1``/``f1``.

    ``quantization_length`` is the mode length at which ``M`` is quoted.  A
    grid of period ``L`` uses per-mode couplings ``M sqrt(quantization_length / L)``
    so that results do not depend on how finely the band is sampled.
    """

    lambda0: float = 1.0
    F1: float = 0.01
    F2: float | None = None
    f1: float = 0.001
    f2: float | None = None
    g1: float = 0.0035
    g2: float = 0.00071
    detuning_ratio: float = 0.1
    detuning_sign: int = 1
    k02_ratio: float = 0.9
    n_modes: int = 50
    geometry: str = "chain"
    atom_spacing: float = 1000.0
    ring_circumference: float = 1000.0
    n_atoms: int = 30
    rng_seed: int = 0
    integrator: IntegratorSettings = field(default_factory=IntegratorSettings)
    packet_center_1: float = 0.0
    packet_center_2: float = 0.0
    quantization_length: float = 4900.0
    dispersion: str = "linear"

    def __post_init__(self):
        if self.F2 is None:
            object.__setattr__(self, "F2", self.F1)
        if self.f2 is None:
            object.__setattr__(self, "f2", self.f1)
        if isinstance(self.integrator, Mapping):
            object.__setattr__(self, "integrator", IntegratorSettings(**self.integrator))
        self._check()

    def _check(self):
        def require(cond, name, msg):
            if not cond:
                raise InvalidParameter(name, msg)

        for name in ("lambda0", "F1", "F2", "f1", "f2", "k02_ratio",
                     "atom_spacing", "ring_circumference", "quantization_length"):
            value = getattr(self, name)
            require(isinstance(value, (int, float)) and math.isfinite(value) and value > 0,
                    name, "must be a positive finite number")
        for name in ("g1", "g2", "detuning_ratio"):
            value = getattr(self, name)
            require(isinstance(value, (int, float)) and math.isfinite(value) and value >= 0,
                    name, "must be a nonnegative finite number")
        require(self.f1 < self.F1, "f1", "packet width delta k must be smaller than the band Delta k (f1 < F1)")
        require(self.f2 < self.F2, "f2", "packet width delta k must be smaller than the band Delta k (f2 < F2)")
        require(isinstance(self.n_modes, int) and not isinstance(self.n_modes, bool) and self.n_modes >= 2,
                "n_modes", "must be an integer >= 2")
        require(isinstance(self.n_atoms, int) and self.n_atoms >= 0, "n_atoms", "must be an integer >= 0")
        require(isinstance(self.rng_seed, int), "rng_seed", "must be an integer")
        require(self.detuning_sign in (1, -1), "detuning_sign", "must be +1 or -1")
        require(self.geometry in ("chain", "ring"), "geometry", "must be 'chain' or 'ring'")
        require(self.dispersion in DISPERSIONS, "dispersion",
                f"must be one of {sorted(DISPERSIONS)}")
        for name in ("packet_center_1", "packet_center_2"):
            value = getattr(self, name)
            require(isinstance(value, (int, float)) and math.isfinite(value), name, "must be finite")
        if self.geometry == "ring":
            offset = (self.packet_center_2 - self.packet_center_1) / self.ring_circumference
            require(abs(offset - round(offset)) < 1e-12, "packet_center_2",
                    "ring runs launch both packets from the same point")
        if self.geometry == "chain" and self.atom_spacing < 5.0 / self.packet_width1:
            warnings.warn(
                f"atom_spacing={self.atom_spacing} um is not much larger than the packet "
                f"width 1/delta_k = {1.0 / self.packet_width1:.3g} um",
                stacklevel=3,
            )

    # derived quantities -------------------------------------------------
    @property
    def k01(self) -> float:
        return TWO_PI / self.lambda0

    @property
    def k02(self) -> float:
        return self.k02_ratio * self.k01

    def omega(self, k):
        return DISPERSIONS[self.dispersion](np.asarray(k, dtype=float))

    @property
    def omega01(self) -> float:
        return float(self.omega(self.k01))

    @property
    def omega02(self) -> float:
        return float(self.omega(self.k02))

    @property
    def band_width1(self) -> float:
        return self.F1 * self.k01

    @property
    def band_width2(self) -> float:
        return self.F2 * self.k02

    @property
    def packet_width1(self) -> float:
        return self.f1 * self.k01

    @property
    def packet_width2(self) -> float:
        return self.f2 * self.k02

    @property
    def M1(self) -> float:
        return self.g1 * self.omega01 / 2.0

    @property
    def M2(self) -> float:
        return self.g2 * self.omega02 / 2.0

    @property
    def detuning(self) -> float:
        """Signed offset of the first excited level from photon 1's carrier."""
        return self.detuning_sign * self.detuning_ratio * self.omega01

    @property
    def E1(self) -> float:
        return self.omega01 + self.detuning

    @property
    def E2(self) -> float:
        # two-photon resonance with the carriers
        return self.omega01 + self.omega02

    def replace(self, **changes) -> "SimConfig":
        if "F1" in changes and "F2" not in changes and self.F2 == self.F1:
            changes["F2"] = changes["F1"]
        if "f1" in changes and "f2" not in changes and self.f2 == self.f1:
            changes["f2"] = changes["f1"]
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        out["integrator"] = dataclasses.asdict(self.integrator)
        return out


CONFIG_KEYS = frozenset(f.name for f in dataclasses.fields(SimConfig))
_INTEGRATOR_KEYS = frozenset(f.name for f in dataclasses.fields(IntegratorSettings))
_INT_FIELDS = ("n_modes", "n_atoms", "rng_seed", "detuning_sign")


def validate_config(raw: Mapping[str, Any]) -> SimConfig:
    """Build a :class:`SimConfig` from a plain parameter record.

    Unknown keys are rejected so that typos (``gl`` for ``g1``) do not
    silently fall back to defaults.
    """
    if not isinstance(raw, Mapping):
        raise InvalidParameter("<root>", "configuration must be a mapping")
    unknown = set(raw) - CONFIG_KEYS - {"n_encounters"}
    if unknown:
        raise UnknownKey(unknown)
    params = dict(raw)
    if "n_encounters" in params:
        if "n_atoms" in params:
            raise InvalidParameter("n_encounters", "give either n_atoms or n_encounters, not both")
        params["n_atoms"] = params.pop("n_encounters")
    for name in _INT_FIELDS:
        value = params.get(name)
        if isinstance(value, float) and value.is_integer():
            params[name] = int(value)
    integrator = params.get("integrator")
    if integrator is not None:
        if isinstance(integrator, IntegratorSettings):
            pass
        elif isinstance(integrator, Mapping):
            bad = set(integrator) - _INTEGRATOR_KEYS
            if bad:
                raise UnknownKey({f"integrator.{k}" for k in bad})
            params["integrator"] = IntegratorSettings(**integrator)
        else:
            raise InvalidParameter("integrator", "must be a mapping")
    try:
        return SimConfig(**params)
    except TypeError as exc:
        raise InvalidParameter("<root>", str(exc)) from exc


# ----------------------------------------------------------------------
# mode grids


@dataclass(frozen=True, eq=False)
class ModeGrid:
    """Discrete wave numbers of one photon's band.

    Uniform spacing ``spacing`` symmetric about ``k_center``; ``period`` is
    the box length with ``period * spacing == 2 pi``.
    """

    k_values: np.ndarray
    k_center: float
    spacing: float
    period: float
    direction: int

    def __post_init__(self):
        k = np.array(self.k_values, dtype=float)
        k.flags.writeable = False
        object.__setattr__(self, "k_values", k)

    @property
    def n(self) -> int:
        return len(self.k_values)

    @property
    def offsets(self) -> np.ndarray:
        return self.k_values - self.k_center


def build_mode_grid(config: SimConfig, photon: int) -> ModeGrid:
    """Wave-number grid for photon 1 or 2.

    Chain runs span exactly ``F k0`` with ``n`` points.  Ring runs fix the
    period to the ring circumference, so the band is ``(n - 1) 2 pi / C``,
    and photon 2 propagates backwards (centre ``-k02``).
    """
    if photon not in (1, 2):
        raise InvalidParameter("photon", "must be 1 or 2")
    n = config.n_modes
    k0 = config.k01 if photon == 1 else config.k02
    direction = 1
    if config.geometry == "ring":
        period = config.ring_circumference
        spacing = TWO_PI / period
        if photon == 2:
            direction = -1
    else:
        band = config.band_width1 if photon == 1 else config.band_width2
        spacing = band / (n - 1)
        period = TWO_PI / spacing
    center = direction * k0
    k_values = center + spacing * (np.arange(n) - (n - 1) / 2.0)
    return ModeGrid(k_values=k_values, k_center=center, spacing=spacing,
                    period=period, direction=direction)


# ----------------------------------------------------------------------
# basis and state


class TwoPhoton(NamedTuple):
    k1: int
    k2: int


class Excited1(NamedTuple):
    k2: int


class Excited2(NamedTuple):
    pass


BasisLabel = Union[TwoPhoton, Excited1, Excited2]


def basis_size(n: int) -> int:
    return n * n + n + 1


@dataclass(frozen=True)
class BasisIndex:
    """Flat ordering: two-photon states row-major in (k1, k2), then the
    photon-1-absorbed states by k2, then the doubly excited atom."""

    n: int

    @property
    def size(self) -> int:
        return basis_size(self.n)

    def flatten(self, label: BasisLabel) -> int:
        n = self.n
        if isinstance(label, TwoPhoton):
            if not (0 <= label.k1 < n and 0 <= label.k2 < n):
                raise IndexError(label)
            return label.k1 * n + label.k2
        if isinstance(label, Excited1):
            if not 0 <= label.k2 < n:
                raise IndexError(label)
            return n * n + label.k2
        if isinstance(label, Excited2):
            return n * n + n
        raise TypeError(f"not a basis label: {label!r}")

    def unflatten(self, index: int) -> BasisLabel:
        n = self.n
        if not 0 <= index < self.size:
            raise IndexError(index)
        if index < n * n:
            return TwoPhoton(*divmod(index, n))
        if index < n * n + n:
            return Excited1(index - n * n)
        return Excited2()


def _frozen(array, dtype=complex):
    out = np.array(array, dtype=dtype)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Amplitudes on the restricted basis plus the absorption ledger.

    ``c[i, j]`` is the two-photon amplitude for modes ``k1[i]``, ``k2[j]``;
    ``b[j]`` has photon 1 absorbed (atom in its first excited level) and
    photon 2 in ``k2[j]``; ``a`` has both photons absorbed.  ``absorbed``
    records the probability discarded at each atom handoff and ``time`` the
    elapsed propagation time.  ``launch`` holds the initial packet centres;
    the two boxes generally have different periods, so positions are only
    meaningful as unwrapped coordinates measured from there.
    """

    c: np.ndarray
    b: np.ndarray
    a: complex
    grids: tuple[ModeGrid, ModeGrid]
    absorbed: tuple[float, ...] = ()
    time: float = 0.0
    launch: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "c", _frozen(self.c))
        object.__setattr__(self, "b", _frozen(self.b))
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "absorbed", tuple(float(x) for x in self.absorbed))
        n = self.c.shape[0]
        if self.c.shape != (n, n) or self.b.shape != (n,):
            raise ValueError(f"inconsistent amplitude shapes {self.c.shape}, {self.b.shape}")

    @property
    def n(self) -> int:
        return self.c.shape[0]

    def expected_position(self, photon: int) -> float:
        """Free-flight position of a packet centre (unit group velocity)."""
        return self.launch[photon - 1] + self.grids[photon - 1].direction * self.time

    @property
    def dimension(self) -> int:
        return basis_size(self.n)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.c.ravel(), self.b, [self.a]])

    def with_vector(self, vector: np.ndarray, **changes) -> "QuantumState":
        n = self.n
        vector = np.asarray(vector)
        if vector.shape != (basis_size(n),):
            raise ValueError(f"vector of shape {vector.shape} does not fit n={n}")
        return dataclasses.replace(
            self, c=vector[: n * n].reshape(n, n), b=vector[n * n: n * n + n],
            a=vector[-1], **changes)

    @property
    def survival(self) -> float:
        """Probability of still being in the two-photon sector."""
        return float(np.vdot(self.c, self.c).real)

    @property
    def norm_squared(self) -> float:
        return self.survival + float(np.vdot(self.b, self.b).real) + abs(self.a) ** 2

    @property
    def ledger_total(self) -> float:
        return math.fsum(self.absorbed)


def initial_state(config: SimConfig) -> QuantumState:
    """Product of two Gaussian packets centred at the configured positions.

    ``c(k1, k2) ~ exp(-(k1-k01)^2 / 4 dk1^2) exp(-(k2-k02)^2 / 4 dk2^2)
    exp(-i k1 x1) exp(-i k2 x2)``; the single-photon intensity then has a
    spatial standard deviation of ``1 / (2 delta k)``.
    """
    g1 = build_mode_grid(config, 1)
    g2 = build_mode_grid(config, 2)
    w1, w2 = config.packet_width1, config.packet_width2
    amp1 = np.exp(-g1.offsets ** 2 / (4 * w1 ** 2) - 1j * g1.k_values * config.packet_center_1)
    amp2 = np.exp(-g2.offsets ** 2 / (4 * w2 ** 2) - 1j * g2.k_values * config.packet_center_2)
    c = np.outer(amp1, amp2)
    norm2 = float(np.vdot(c, c).real)
    if not (norm2 > 1e-300 and math.isfinite(norm2)):
        raise DegenerateState("initial packet has no weight on the mode grid")
    c /= math.sqrt(norm2)
    n = config.n_modes
    return QuantumState(c=c, b=np.zeros(n, complex), a=0.0, grids=(g1, g2),
                        launch=(float(config.packet_center_1), float(config.packet_center_2)))


def _synthesis_matrix(grid: ModeGrid, x: np.ndarray, demodulate: bool) -> np.ndarray:
    k = grid.offsets if demodulate else grid.k_values
    return np.exp(1j * np.outer(np.asarray(x, dtype=float), k)) / math.sqrt(grid.period)


def two_photon_position_amplitude(state: QuantumState, x1_grid, x2_grid,
                                  demodulate: bool = False) -> np.ndarray:
    """Two-photon amplitude ``phi(x1, x2)`` on a tensor grid.

    ``phi = sum c(k1, k2) exp(i k1 x1 + i k2 x2) / sqrt(L1 L2)`` so that
    ``|phi|^2`` integrates to ``sum |c|^2`` over one period of each
    coordinate.  ``demodulate`` drops the optical carriers, leaving the
    envelope.
    """
    g1, g2 = state.grids
    e1 = _synthesis_matrix(g1, x1_grid, demodulate)
    e2 = _synthesis_matrix(g2, x2_grid, demodulate)
    return e1 @ state.c @ e2.T
