"""Figure-level runs: each writes CSV files into a directory and returns metrics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import interferometer as ifm
from . import observables as obs
from .errors import NoDip
from .model import SimConfig
from .propagate import run_chain, run_ring
from .semiclassical import semiclassical_run

FIG2_ATOMS = 5
FIG3A_MIN_ATOMS = 30


@dataclass
class ScenarioResult:
    outputs: list[Path] = field(default_factory=list)
    metrics: dict[str, Any] = field(default_factory=dict)


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence], sink: list[Path]) -> Path:
    """Write ``rows`` under ``header``; the path is appended to ``sink`` first
    so a failure midway still leaves it on the cleanup list."""
    path = Path(path)
    sink.append(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def linear_reference(config: SimConfig) -> SimConfig:
    """Same run without the second transition: no two-photon absorption,
    identical single-photon scattering of photon 1."""
    return config.replace(g2=0.0)


def dip_after(config: SimConfig, n_atoms: int = FIG2_ATOMS, trajectory=None):
    """``(ratio profile, DipMetrics or None, state, reference)`` after ``n_atoms``."""
    if trajectory is None or n_atoms not in trajectory.snapshots:
        trajectory = run_chain(config, snapshots=(n_atoms,), n_atoms=n_atoms)
    state = trajectory.snapshots[n_atoms]
    reference = run_chain(linear_reference(config), snapshots=(n_atoms,), n_atoms=n_atoms).snapshots[n_atoms]
    profile = obs.coincidence_ratio(state, reference)
    try:
        metrics = obs.dip_metrics(profile)
    except NoDip:
        metrics = None
    return profile, metrics, state, reference


def fig2(config: SimConfig, out: Path, progress=None) -> ScenarioResult:
    res = ScenarioResult()
    traj = run_chain(config, snapshots=(0, FIG2_ATOMS), n_atoms=FIG2_ATOMS, progress=progress)
    for tag, m in (("initial", 0), (f"{FIG2_ATOMS}atoms", FIG2_ATOMS)):
        st = traj.snapshots[m]
        prof = obs.single_photon_intensity(st)
        write_csv(out / f"intensity_{tag}.csv", ("x_um", "intensity"),
                  zip(prof.x, prof.values), res.outputs)
        co = obs.coincidence_probability(st)
        write_csv(out / f"coincidence_{tag}.csv", ("s_um", "p2"), zip(co.s, co.values), res.outputs)
    ratio, dip, _, _ = dip_after(config, FIG2_ATOMS, traj)
    write_csv(out / f"coincidence_ratio_{FIG2_ATOMS}atoms.csv", ("s_um", "p2"),
              zip(ratio.s, ratio.values), res.outputs)
    res.metrics = {
        "p_survival": float(traj.p_survival[-1]),
        "dip_depth": None if dip is None else dip.depth,
        "dip_fwhm_um": None if dip is None else dip.fwhm,
    }
    return res


def _survival_rows(p: np.ndarray):
    fit = obs.fit_exponential_first_two(p)
    m = np.arange(1, len(p) + 1)
    return fit, zip(m, p, fit.predict(m))


def fig3a(config: SimConfig, out: Path, progress=None) -> ScenarioResult:
    res = ScenarioResult()
    n_atoms = max(config.n_atoms, FIG3A_MIN_ATOMS)
    traj = run_chain(config, n_atoms=n_atoms, progress=progress)
    _, p = obs.survival_series(traj)
    fit, rows = _survival_rows(p)
    write_csv(out / "survival.csv", ("n_atoms", "p_survival", "p_fit"), rows, res.outputs)
    res.metrics = {
        "plateau_onset": obs.detect_plateau(p),
        "plateau_p": float(p[-1]),
        "fit_ratio": fit.ratio,
        "excess_over_fit": float(p[-1] - fit.predict(n_atoms)),
        "ledger_closure": traj.ledger_closure(),
    }
    return res


def fig3b(config: SimConfig, out: Path, target_loss: float = 0.02,
          steps_per_transit: int = 100) -> ScenarioResult:
    res = ScenarioResult()
    n_transits = max(config.n_atoms, FIG3A_MIN_ATOMS)
    alpha, traj = semiclassical_run(config, target_loss, n_transits, steps_per_transit)
    write_csv(out / "semiclassical.csv", ("t", "energy"), zip(traj.t, traj.energy), res.outputs)
    losses = traj.fractional_losses(steps_per_transit)
    res.metrics = {
        "alpha": alpha,
        "min_loss_ratio": float(losses.min() / losses[0]),
        "plateau_onset": obs.detect_plateau(traj.energy[::steps_per_transit][1:] / traj.energy[0]),
    }
    return res


def fig3c(config: SimConfig, out: Path, progress=None) -> ScenarioResult:
    res = ScenarioResult()
    if config.geometry != "ring":
        config = config.replace(geometry="ring", packet_center_2=config.packet_center_1)
    traj = run_ring(config, progress=progress)
    _, p = obs.survival_series(traj)
    _, rows = _survival_rows(p)
    write_csv(out / "survival.csv", ("n_atoms", "p_survival", "p_fit"), rows, res.outputs)
    loss = obs.per_atom_loss(p)
    res.metrics = {
        "plateau_onset": obs.detect_plateau(p) if len(p) > 5 else None,
        "loss_std": float(np.std(loss, ddof=1)) if len(loss) > 1 else 0.0,
        "atom_positions": [r.position for r in traj.records],
    }
    return res


@dataclass(frozen=True)
class BellParams:
    kind: str = "holes"          # holes | pairs | product | simulation
    depth: float = 1.0
    width: float = 1.0
    delta_T: float | None = None
    scan_points: int = 16


def bell_amplitude(config: SimConfig, params: BellParams, progress=None):
    """``(amplitude, delta_T, mode, angles)`` for the requested source."""
    if params.kind == "simulation":
        n = config.n_atoms
        traj = run_chain(config, snapshots=(n,), progress=progress)
        ref = run_chain(linear_reference(config), snapshots=(n,)).snapshots[n]
        state = traj.snapshots[n]
        extent = 3.0 * ifm.relative_width(ref)
        dt = 2 * math.pi / obs.band_extent(state.grids[0]) / 8
        t = dt * np.arange(int(math.ceil(4 * extent / dt)) + 1)
        amp = ifm.from_simulation(state, t, ref, extent=extent)
        delta_T = params.delta_T or 2.0 * extent
        return amp, delta_T, "difference", ifm.STANDARD_ANGLES
    w = params.width
    delta_T = params.delta_T or 8.0 * w
    t = (w / 10.0) * np.arange(int(round(4 * delta_T / (w / 10.0))) + 1)
    kind = params.kind
    amp = ifm.synthesize_amplitude(kind, t, depth=params.depth if kind == "holes" else 0.0, width=w)
    if kind == "pairs":
        a, a2, b, b2 = ifm.STANDARD_ANGLES
        return amp, delta_T, "sum", (a, a2, -b, -b2)
    return amp, delta_T, "difference", ifm.STANDARD_ANGLES


def bell(config: SimConfig, out: Path, params: BellParams, progress=None) -> ScenarioResult:
    res = ScenarioResult()
    amp, delta_T, mode, angles = bell_amplitude(config, params, progress)
    phases = 2 * math.pi * np.arange(params.scan_points) / params.scan_points
    p1, p2 = np.meshgrid(phases, phases, indexing="ij")
    rates = ifm.rate_grid(amp, delta_T, p1, p2)
    write_csv(out / "bell_scan.csv", ("phi1", "phi2", "rate"),
              zip(p1.ravel(), p2.ravel(), rates.ravel()), res.outputs)
    v = ifm.fringe_visibility(amp, delta_T, phases, mode)
    s = ifm.chsh(amp, delta_T, angles)
    write_csv(out / "bell_summary.csv", ("visibility", "chsh_s"), [(v, s)], res.outputs)
    res.metrics = {"visibility": v, "chsh_s": s, "mode": mode, "delta_T": delta_T,
                   "depth": ifm.extracted_depth(amp) if params.kind != "pairs" else None,
                   "correlation_width": amp.correlation_width}
    return res


def sweep_point(config: SimConfig, out: Path) -> ScenarioResult:
    """Survival curve (as in :func:`fig3a`) plus the 5-atom dip for one sweep point."""
    res = ScenarioResult()
    traj = run_chain(config, snapshots=(FIG2_ATOMS,), n_atoms=max(config.n_atoms, FIG3A_MIN_ATOMS))
    _, p = obs.survival_series(traj)
    _, rows = _survival_rows(p)
    write_csv(out / "survival.csv", ("n_atoms", "p_survival", "p_fit"), rows, res.outputs)
    ratio, dip, _, _ = dip_after(config, FIG2_ATOMS, traj)
    write_csv(out / "coincidence_ratio.csv", ("s_um", "p2"), zip(ratio.s, ratio.values), res.outputs)
    res.metrics = {
        "plateau_p": float(p[-1]),
        "onset": obs.detect_plateau(p),
        "dip_fwhm_um": None if dip is None else dip.fwhm,
    }
    return res
