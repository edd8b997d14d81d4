"""Command-line entry point: ``photonholes <scenario> --config FILE``.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure,
4 file-system error.
"""

from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

from . import __version__, scenarios
from .errors import ConfigError, ParseError, PhotonHolesError, UnknownKey
from .model import CONFIG_KEYS, SimConfig, validate_config

log = logging.getLogger("photonholes")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
SCENARIOS = ("fig2", "fig3a", "fig3b", "fig3c", "bell")
QUICK = {"n_modes": 20, "n_atoms": 10}


# ----------------------------------------------------------------------
# configuration


def preset_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("photonholes.presets").iterdir()
                  if p.name.endswith(".json"))


def _read_source(path: str | Path) -> str:
    p = Path(path)
    if p.exists():
        return p.read_text()
    name = p.name[:-5] if p.name.endswith(".json") else p.name
    if p.parent == Path(".") and name in preset_names():
        return resources.files("photonholes.presets").joinpath(f"{name}.json").read_text()
    raise FileNotFoundError(f"no such config file or preset: {path}")


def ingest_config(path: str | Path) -> SimConfig:
    """Parse a JSON config file (or the name of a shipped preset)."""
    text = _read_source(path)
    if not text.strip():
        raise ParseError(f"{path}: empty file")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return validate_config(raw)


def config_hash(config: SimConfig) -> str:
    blob = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def apply_overrides(config: SimConfig, seed: int | None, quick: bool) -> SimConfig:
    changes: dict[str, Any] = dict(QUICK) if quick else {}
    if seed is not None:
        changes["rng_seed"] = seed
    return config.replace(**changes) if changes else config


# ----------------------------------------------------------------------
# manifest


@dataclass
class RunManifest:
    scenario: str
    config: dict[str, Any]
    config_hash: str
    seed: int
    version: str = __version__
    duration_s: float = 0.0
    outputs: list[str] = field(default_factory=list)
    metrics: dict[str, Any] = field(default_factory=dict)

    def write(self, path: Path) -> Path:
        path.write_text(json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n")
        return path


def _cleanup(paths: Sequence[Path]):
    for p in paths:
        try:
            Path(p).unlink()
        except FileNotFoundError:
            pass


def run_scenario(name: str, config: SimConfig, out: Path, bell: scenarios.BellParams | None = None,
                 plot: bool = False) -> RunManifest:
    """Run one scenario into ``out``; on failure every file it wrote is removed."""
    out.mkdir(parents=True, exist_ok=True)
    before = set(out.iterdir())
    start = time.perf_counter()

    def progress(record):
        log.info("atom %d: P_I = %.10f", record.atom_index, record.p_survival)

    try:
        if name == "fig2":
            result = scenarios.fig2(config, out, progress)
        elif name == "fig3a":
            result = scenarios.fig3a(config, out, progress)
        elif name == "fig3b":
            result = scenarios.fig3b(config, out)
        elif name == "fig3c":
            result = scenarios.fig3c(config, out, progress)
        elif name == "bell":
            result = scenarios.bell(config, out, bell or scenarios.BellParams(), progress)
        else:
            raise ValueError(f"unknown scenario {name!r}")
        if plot:
            from .plotting import render
            result.outputs.extend(render(name, result.outputs))
        manifest = RunManifest(
            scenario=name, config=config.to_dict(), config_hash=config_hash(config),
            seed=config.rng_seed, duration_s=round(time.perf_counter() - start, 3),
            outputs=[p.name for p in result.outputs], metrics=result.metrics)
        manifest.write(out / "manifest.json")
        return manifest
    except BaseException:
        _cleanup(sorted(set(out.iterdir()) - before))
        raise


# ----------------------------------------------------------------------
# sweeps


def parse_axis(spec: str) -> tuple[str, list[Any]]:
    """``"F1=0.01,0.02"`` -> ``("F1", [0.01, 0.02])``."""
    name, sep, values = spec.partition("=")
    name = name.strip()
    if not sep or not values.strip():
        raise ParseError(f"axis {spec!r} must look like NAME=V1,V2,...")
    if name not in CONFIG_KEYS or name == "integrator":
        raise UnknownKey({name})
    out = []
    for v in values.split(","):
        v = v.strip()
        try:
            out.append(json.loads(v))
        except json.JSONDecodeError:
            out.append(v)
    return name, out


def _sweep_worker(args) -> dict[str, Any]:
    index, point, base, out = args
    row: dict[str, Any] = {"point": index, **point}
    try:
        # replace() keeps F2/f2 tied to F1/f1 when they were equal
        config = base.replace(**point)
        res = scenarios.sweep_point(config, Path(out))
        row.update(res.metrics, status="ok", error="")
    except Exception as exc:       # recorded, the sweep carries on
        row.update(plateau_p="", onset="", dip_fwhm_um="", status="failed",
                   error=f"{type(exc).__name__}: {exc}")
    return row


def run_sweep(config: SimConfig, axes: Sequence[tuple[str, list[Any]]], out: Path,
              jobs: int = 1) -> Path:
    names = [a[0] for a in axes]
    points = [dict(zip(names, combo)) for combo in itertools.product(*(a[1] for a in axes))]
    base = config.to_dict()
    tasks = []
    for i, point in enumerate(points):
        d = out / f"point_{i:03d}"
        d.mkdir(parents=True, exist_ok=True)
        tasks.append((i, point, config, str(d)))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_worker, tasks))
    else:
        rows = [_sweep_worker(t) for t in tasks]
    rows.sort(key=lambda r: r["point"])
    header = ["point", *names, "plateau_p", "onset", "dip_fwhm_um", "status", "error"]
    summary = out / "summary.csv"
    written: list[Path] = []
    scenarios.write_csv(summary, header,
                        ([("" if r.get(h) is None else r.get(h, "")) for h in header] for r in rows),
                        written)
    RunManifest(scenario="sweep", config=base, config_hash=config_hash(config),
                seed=config.rng_seed, outputs=["summary.csv"],
                metrics={"axes": dict(axes), "failed": sum(r["status"] != "ok" for r in rows)},
                ).write(out / "manifest.json")
    return summary


# ----------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="photonholes",
        description="Two-photon absorption by a chain of three-level atoms.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True,
                       help="JSON config file or preset name (" + ", ".join(preset_names()) + ")")
        p.add_argument("--out", type=Path, default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override rng_seed")
        p.add_argument("--quick", action="store_true", help="n_modes=20, n_atoms=10")
        p.add_argument("-v", "--verbose", action="count", default=0)

    for name in SCENARIOS:
        p = sub.add_parser(name, help=f"run the {name} scenario")
        common(p)
        p.add_argument("--plot", action="store_true", help="also render SVG plots")
        if name == "bell":
            p.add_argument("--kind", choices=("holes", "pairs", "product", "simulation"), default="holes")
            p.add_argument("--depth", type=float, default=1.0)
            p.add_argument("--width", type=float, default=1.0, help="correlation width (time units)")
            p.add_argument("--delta-t", type=float, default=None, dest="delta_t",
                           help="path-length imbalance; default 8x width")
    p = sub.add_parser("sweep", help="cartesian parameter sweep")
    common(p)
    p.add_argument("--axis", action="append", required=True, metavar="NAME=V1,V2",
                   help="sweep axis; repeat for a cartesian product")
    p.add_argument("--jobs", type=int, default=1)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = apply_overrides(ingest_config(args.config), args.seed, args.quick)
        out = args.out or Path("results") / args.command
        if args.command == "sweep":
            axes = [parse_axis(a) for a in args.axis]
            summary = run_sweep(config, axes, out, max(1, args.jobs))
            print(summary)
            return EXIT_OK
        bell = None
        if args.command == "bell":
            bell = scenarios.BellParams(kind=args.kind, depth=args.depth, width=args.width,
                                        delta_T=args.delta_t)
        manifest = run_scenario(args.command, config, out, bell, args.plot)
        for name in manifest.outputs:
            print(out / name)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (PhotonHolesError, ArithmeticError, ValueError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
