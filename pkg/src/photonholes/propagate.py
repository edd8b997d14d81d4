"""Time evolution through a sequence of atoms.

Each atom gets one window during which the photons pass it.  After the
window any amplitude left on the atom (``b`` or ``a``) is moved to the
absorption ledger and the two-photon amplitude is carried on, unnormalised,
to the next atom.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .errors import DimensionMismatch, InvalidParameter, ToleranceNotMet
from .hamiltonian import SparseHermitianOperator, build_hamiltonian
from .model import IntegratorSettings, QuantumState, SimConfig, initial_state

log = logging.getLogger(__name__)

MAX_HALVINGS = 3
DENSE_LIMIT = 500      # below this the step polynomial is formed once as a dense matrix


def rk4_step_size(H: SparseHermitianOperator, settings: IntegratorSettings,
                  v: np.ndarray | None = None, duration: float | None = None) -> float:
    """Automatic step: ``2 pi / (step_fraction * spectral_bound)``, shrunk
    further when the leading Taylor remainder ``|(hH)^5 v| / 120``, summed
    over the window, would exceed ``settings.amplitude_tolerance``."""
    if settings.step is not None:
        return settings.step
    bound = H.spectral_bound()
    if bound == 0.0:
        return math.inf
    h = 2.0 * math.pi / (settings.step_fraction * bound)
    if v is not None and duration is not None:
        w = v
        for _ in range(5):
            w = H._csr @ w
        fifth = float(np.linalg.norm(w))
        if fifth > 0.0:
            h = min(h, (120.0 * settings.amplitude_tolerance / (duration * fifth)) ** 0.25)
    return h


def _rk4(H: SparseHermitianOperator, v: np.ndarray, duration: float, h0: float) -> np.ndarray:
    steps = max(1, math.ceil(duration / h0 - 1e-12))
    h = duration / steps
    # classical RK4 on a constant linear system is exactly the degree-4
    # Taylor polynomial of exp(-i h H)
    coeffs = [-1j * h / j for j in range(1, 5)]
    if H.dimension <= DENSE_LIMIT:
        dense = H.to_dense()
        step = np.eye(H.dimension, dtype=complex)
        term = step
        for cj in coeffs:
            term = cj * (dense @ term)
            step = step + term
        for _ in range(steps):
            v = step @ v
        return v
    mat = H._csr
    for _ in range(steps):
        term = v
        out = v.copy()
        for cj in coeffs:
            term = cj * (mat @ term)
            out += term
        v = out
    return v


def _spectral(H: SparseHermitianOperator, v: np.ndarray, duration: float) -> np.ndarray:
    energies, vectors = np.linalg.eigh(H.to_dense())
    return vectors @ (np.exp(-1j * energies * duration) * (vectors.conj().T @ v))


def evolve_window(H: SparseHermitianOperator, state: QuantumState, duration: float,
                  settings: IntegratorSettings | None = None) -> QuantumState:
    """Advance ``state`` by ``exp(-i H duration)``.

    The ``rk4`` backend takes fixed steps tied to the spectral bound of
    ``H``; ``spectral`` diagonalises the dense matrix and is exact up to
    rounding (practical for n <= 20 or so).
    """
    settings = settings or IntegratorSettings()
    if H.dimension != state.dimension:
        raise DimensionMismatch(f"operator dimension {H.dimension} != state dimension {state.dimension}")
    if not duration > 0:
        raise ValueError("duration must be positive")
    v = state.to_vector()
    before = float(np.vdot(v, v).real)
    if settings.backend == "spectral":
        out = _spectral(H, v, duration)
        drift = float(np.vdot(out, out).real) - before
    else:
        h = rk4_step_size(H, settings, v, duration)
        # an automatic step may halve itself a few times; an explicit one never does
        for _ in range(1 if settings.step is not None else 1 + MAX_HALVINGS):
            with np.errstate(over="ignore", invalid="ignore"):
                out = _rk4(H, v, duration, h)
                drift = float(np.vdot(out, out).real) - before
            if abs(drift) <= settings.norm_tolerance:
                break
            log.info("norm drift %.2e at step %.4g; halving", drift, h)
            h /= 2.0
    if not abs(drift) <= settings.norm_tolerance:       # also catches NaN
        raise ToleranceNotMet(
            f"norm drift {drift:.3e} exceeds {settings.norm_tolerance:.1e}; "
            "reduce integrator.step or raise integrator.step_fraction")
    return state.with_vector(out, time=state.time + duration)


def free_evolution(state: QuantumState, config: SimConfig, duration: float) -> QuantumState:
    """Exact rotating-frame evolution with no atom present (two-photon sector only)."""
    g1, g2 = state.grids
    d1 = config.omega(g1.k_values) - config.omega01
    d2 = config.omega(g2.k_values) - config.omega02
    phase = np.exp(-1j * duration * (d1[:, None] + d2[None, :]))
    return dataclasses.replace(state, c=state.c * phase, time=state.time + duration)


def atom_handoff(state: QuantumState) -> tuple[QuantumState, float]:
    """Record the atom's residual excitation as absorbed and clear it."""
    increment = float(np.vdot(state.b, state.b).real) + abs(state.a) ** 2
    new = dataclasses.replace(state, b=np.zeros_like(state.b), a=0.0,
                              absorbed=state.absorbed + (increment,))
    return new, increment


# ----------------------------------------------------------------------
# atom layouts


@dataclass(frozen=True)
class AtomSchedule:
    positions: tuple[float, ...]
    durations: tuple[float, ...]
    geometry: str
    rng_seed: int | None = None

    def __len__(self):
        return len(self.positions)


def chain_schedule(config: SimConfig, n_atoms: int | None = None) -> AtomSchedule:
    """Atoms one spacing apart; each packet reaches its atom mid-window."""
    n_atoms = config.n_atoms if n_atoms is None else n_atoms
    s = config.atom_spacing
    positions = tuple(config.packet_center_1 + (m + 0.5) * s for m in range(n_atoms))
    return AtomSchedule(positions=positions, durations=(s,) * n_atoms, geometry="chain")


def encounter_half_width(config: SimConfig) -> float:
    """Half-width of the region where counter-propagating packets overlap.

    The product of the two single-photon intensities at the meeting point
    has standard deviation ``1 / (2 sqrt(2) delta k)``.
    """
    return 1.0 / (2.0 * math.sqrt(2.0) * config.packet_width1)


def ring_schedule(config: SimConfig, n_encounters: int | None = None) -> AtomSchedule:
    """One window per round trip, packets meeting mid-window.

    Counter-propagating packets launched together meet again half a
    circumference away after half a round trip.  Only atoms inside that
    overlap region absorb, so each encounter draws an atom uniformly from
    ``[-w, w]`` about the meeting point (see :func:`encounter_half_width`).
    """
    n = config.n_atoms if n_encounters is None else n_encounters
    C = config.ring_circumference
    w = encounter_half_width(config)
    rng = np.random.default_rng(config.rng_seed)
    offsets = rng.uniform(-w, w, size=n)
    meeting = config.packet_center_1 + C / 2.0
    positions = tuple(float(meeting + d) for d in offsets)
    return AtomSchedule(positions=positions, durations=(C,) * n, geometry="ring",
                        rng_seed=config.rng_seed)


# ----------------------------------------------------------------------
# trajectories


@dataclass(frozen=True)
class AtomRecord:
    atom_index: int
    position: float
    p_survival: float
    absorbed_increment: float
    norm_drift: float = 0.0          # |psi|^2 after the window minus before


@dataclass(frozen=True)
class Trajectory:
    """Survival probability after each atom, plus requested snapshots.

    Snapshot key 0 is the initial state; key ``m`` the state after the
    handoff at atom ``m``.
    """

    records: tuple[AtomRecord, ...]
    snapshots: dict[int, QuantumState] = field(default_factory=dict)
    geometry: str = "chain"

    @property
    def atom_index(self) -> np.ndarray:
        return np.array([r.atom_index for r in self.records])

    @property
    def p_survival(self) -> np.ndarray:
        return np.array([r.p_survival for r in self.records])

    @property
    def norm_drift(self) -> np.ndarray:
        return np.array([r.norm_drift for r in self.records])

    @property
    def absorbed(self) -> np.ndarray:
        return np.array([r.absorbed_increment for r in self.records])

    def ledger_closure(self) -> float:
        """``|1 - (P_I + total absorbed)|`` after the last atom."""
        if not self.records:
            return 0.0
        return abs(1.0 - (self.records[-1].p_survival + math.fsum(self.absorbed)))


def run_schedule(config: SimConfig, schedule: AtomSchedule, snapshots: Iterable[int] = (),
                 state: QuantumState | None = None,
                 progress: Callable[[AtomRecord], None] | None = None) -> Trajectory:
    state = initial_state(config) if state is None else state
    wanted = set(snapshots)
    saved: dict[int, QuantumState] = {}
    if 0 in wanted:
        saved[0] = state
    records = []
    for m, (x, duration) in enumerate(zip(schedule.positions, schedule.durations), start=1):
        H = build_hamiltonian(config, x, "rotating", grids=state.grids)
        before = state.norm_squared
        state = evolve_window(H, state, duration, config.integrator)
        drift = state.norm_squared - before
        state, inc = atom_handoff(state)
        record = AtomRecord(atom_index=m, position=x, p_survival=state.survival,
                            absorbed_increment=inc, norm_drift=drift)
        records.append(record)
        log.debug("atom %d at x=%.3f: P_I=%.12f absorbed=%.3e", m, x, record.p_survival, inc)
        if progress is not None:
            progress(record)
        if m in wanted:
            saved[m] = state
    return Trajectory(records=tuple(records), snapshots=saved, geometry=schedule.geometry)


def run_chain(config: SimConfig, snapshots: Iterable[int] = (), n_atoms: int | None = None,
              progress=None) -> Trajectory:
    """Co-propagating photons through equally spaced atoms."""
    if config.geometry != "chain":
        raise InvalidParameter("geometry", "run_chain needs geometry='chain'")
    return run_schedule(config, chain_schedule(config, n_atoms), snapshots, progress=progress)


def run_ring(config: SimConfig, snapshots: Iterable[int] = (), n_encounters: int | None = None,
             progress=None) -> Trajectory:
    """Counter-propagating photons on a ring, one random atom per encounter."""
    if config.geometry != "ring":
        raise InvalidParameter("geometry", "run_ring needs geometry='ring'")
    return run_schedule(config, ring_schedule(config, n_encounters), snapshots, progress=progress)


def run(config: SimConfig, snapshots: Iterable[int] = (), n_atoms: int | None = None,
        progress=None) -> Trajectory:
    if config.geometry == "ring":
        return run_ring(config, snapshots, n_atoms, progress)
    return run_chain(config, snapshots, n_atoms, progress)
