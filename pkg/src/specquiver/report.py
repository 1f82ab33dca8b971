"""CSV tables and PNG figures written next to the CLI's delimited output."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def write_csv(path: Path, header: list[str], rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def sequence_figure(outdir: Path, name: str, values: list[int], ylabel: str, log: bool = False) -> list[Path]:
    csv_path = write_csv(outdir / f"{name}.csv", ["parameter", "value"], enumerate(values))
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(range(len(values)), values, "o-")
    ax.set_xlabel("k")
    ax.set_ylabel(ylabel)
    if log and all(v > 0 for v in values):
        ax.set_yscale("log")
    ax.grid(alpha=0.3)
    return [csv_path, _save(fig, outdir / f"{name}.png")]


def spectrum_figure(outdir: Path, eigenvalues, name: str = "spectrum") -> list[Path]:
    csv_path = write_csv(outdir / f"{name}.csv", ["index", "eigenvalue"], enumerate(eigenvalues))
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.hist(eigenvalues, bins=min(60, max(10, len(eigenvalues) // 4)))
    ax.set_xlabel("eigenvalue of D")
    ax.set_ylabel("count")
    return [csv_path, _save(fig, outdir / f"{name}.png")]


def d6_figure(outdir: Path, thetas: dict, class_sums: dict, reference: dict | None = None) -> list[Path]:
    classes = list(thetas)
    rows = [(c, str(thetas[c]), class_sums[c], "" if reference is None else reference[c]) for c in classes]
    csv_path = write_csv(outdir / "d6_theta.csv", ["class", "theta", "class_sum", "reference_theta"], rows)
    contrib = [float(thetas[c]) * class_sums[c] for c in classes]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(classes, contrib)
    ax.set_ylabel("theta x class sum")
    ax.set_title("contributions to Tr D^6")
    return [csv_path, _save(fig, outdir / "d6_contributions.png")]


def mc_figure(outdir: Path, per_network: dict, name: str = "mc") -> list[Path]:
    ids = sorted(per_network)
    rows = [(i, per_network[i][0], per_network[i][1]) for i in ids]
    csv_path = write_csv(outdir / f"{name}.csv", ["network", "mean", "std_error"], rows)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.errorbar(ids, [r[1] for r in rows], yerr=[r[2] for r in rows], fmt="o", capsize=3)
    ax.set_xlabel("network")
    ax.set_ylabel("estimate")
    return [csv_path, _save(fig, outdir / f"{name}.png")]
