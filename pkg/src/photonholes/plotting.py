"""Optional SVG rendering of scenario CSVs (needs matplotlib)."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence


def _columns(path: Path):
    with path.open() as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return header, [[float(r[i]) for r in body] for i in range(len(header))]


def render(scenario: str, outputs: Sequence[Path]) -> list[Path]:
    """One SVG per two- or three-column CSV; returns the new files."""
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:          # plotting is a convenience only
        raise OSError("--plot needs matplotlib (pip install matplotlib)") from exc
    made = []
    for path in outputs:
        path = Path(path)
        if path.suffix != ".csv" or path.name == "bell_summary.csv":
            continue
        header, cols = _columns(path)
        fig, ax = plt.subplots(figsize=(5, 3.5))
        if header[:2] == ["phi1", "phi2"]:
            n = int(round(len(cols[0]) ** 0.5))
            im = ax.imshow([cols[2][i * n:(i + 1) * n] for i in range(n)], origin="lower",
                           extent=(0, max(cols[1]), 0, max(cols[0])), aspect="auto")
            fig.colorbar(im, label="rate")
            ax.set_xlabel("phi2")
            ax.set_ylabel("phi1")
        else:
            style = "o" if header[0] == "n_atoms" else "-"
            ax.plot(cols[0], cols[1], style, label=header[1])
            for extra, name in zip(cols[2:], header[2:]):
                ax.plot(cols[0], extra, "--", label=name)
            ax.set_xlabel(header[0])
            ax.legend()
        ax.set_title(f"{scenario}: {path.stem}")
        fig.tight_layout()
        svg = path.with_suffix(".svg")
        fig.savefig(svg)
        plt.close(fig)
        made.append(svg)
    return made
