"""Figure builders for the solver's CSV outputs.

Reads only the documented file formats (snapshot, diagnostics,
convergence); no coupling to solver internals. Each builder returns a
matplotlib Figure so tests can inspect artists; ``plot`` renders a spec to
an image file with deterministic bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

KINDS = ("snapshot1d", "diagnostics", "heatmap2d", "convergence")


class PlotInputError(ValueError):
    """Malformed input file; message names the file and line."""


@dataclass
class FigureSpec:
    kind: str
    inputs: list = field(default_factory=list)
    output: str = "figure.png"
    title: str = ""
    time_label: str = ""


def read_csv(path):
    """Parse a comma-separated file with one header row into float columns."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header:
            raise PlotInputError(f"{path}: empty file")
        names = header.split(",")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(names):
                raise PlotInputError(
                    f"{path}: line {lineno}: expected {len(names)} fields, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise PlotInputError(f"{path}: line {lineno}: {exc}") from exc
    if not rows:
        raise PlotInputError(f"{path}: no data rows")
    data = np.asarray(rows)
    return {name: data[:, i] for i, name in enumerate(names)}


def _require(cols, names, path):
    missing = [n for n in names if n not in cols]
    if missing:
        raise PlotInputError(f"{path}: missing columns {missing}")


def build_snapshot1d(path, title="", time_label=""):
    """Four stacked panels: density, mass fraction, velocity, pressure vs x."""
    cols = read_csv(path)
    _require(cols, ("x", "rho", "c", "vx", "p"), path)
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    panels = [("rho", r"$\rho$"), ("c", "c"), ("vx", "v"), ("p", "p")]
    for ax, (col, label) in zip(axes.ravel(), panels):
        ax.plot(cols["x"], cols[col], lw=1.2)
        ax.set_ylabel(label)
        ax.grid(alpha=0.3)
    for ax in axes[1]:
        ax.set_xlabel("x")
    fig.suptitle(_compose_title(title, time_label))
    fig.tight_layout()
    return fig


def build_diagnostics(path, title="", time_label=""):
    """Dissipation, total mass, xi, and the c bounds against time."""
    cols = read_csv(path)
    _require(cols, ("t", "dissipation", "total_mass", "xi", "c_min", "c_max"), path)
    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    t = cols["t"]
    axes[0, 0].plot(t, cols["dissipation"], lw=1.0)
    axes[0, 0].set_ylabel("dissipation")
    axes[0, 1].plot(t, cols["total_mass"], lw=1.0, label="mass")
    axes[0, 1].set_ylabel("total mass")
    axes[1, 0].plot(t, cols["xi"], lw=1.0)
    axes[1, 0].set_ylabel(r"$\xi$")
    axes[1, 1].plot(t, cols["c_min"], lw=1.0, label="min c")
    axes[1, 1].plot(t, cols["c_max"], lw=1.0, label="max c")
    axes[1, 1].set_ylabel("c bounds")
    axes[1, 1].legend(loc="center right", fontsize=8)
    for ax in axes.ravel():
        ax.grid(alpha=0.3)
    for ax in axes[1]:
        ax.set_xlabel("t")
    fig.suptitle(_compose_title(title, time_label))
    fig.tight_layout()
    return fig


def build_heatmap2d(path, title="", time_label=""):
    """Mass-fraction heatmap of a 2D snapshot."""
    cols = read_csv(path)
    _require(cols, ("x", "y", "c"), path)
    x = np.unique(cols["x"])
    y = np.unique(cols["y"])
    if x.size * y.size != cols["c"].size:
        raise PlotInputError(f"{path}: cell rows do not form a full tensor grid")
    c = cols["c"].reshape(x.size, y.size)
    fig, ax = plt.subplots(figsize=(6.5, 5.5))
    mesh = ax.pcolormesh(x, y, c.T, shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="c")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_aspect("equal")
    fig.suptitle(_compose_title(title, time_label))
    fig.tight_layout()
    return fig


def build_convergence(path, title="", time_label=""):
    """Log-log refinement errors with a dashed slope-1 guide line."""
    cols = read_csv(path)
    _require(cols, ("resolution", "error"), path)
    res = cols["resolution"]
    err = cols["error"]
    fig, ax = plt.subplots(figsize=(6, 5))
    ax.loglog(res, err, "o-", label="error")
    anchor = err[np.argmax(res)]
    guide = anchor * (res / res.max())
    ax.loglog(res, guide, "--", color="tab:orange", label="slope 1")
    ax.set_xlabel("resolution")
    ax.set_ylabel("error")
    ax.grid(alpha=0.3, which="both")
    ax.legend()
    fig.suptitle(_compose_title(title, time_label))
    fig.tight_layout()
    return fig


def _compose_title(title, time_label):
    if title and time_label:
        return f"{title} ({time_label})"
    return title or time_label


_BUILDERS = {
    "snapshot1d": build_snapshot1d,
    "diagnostics": build_diagnostics,
    "heatmap2d": build_heatmap2d,
    "convergence": build_convergence,
}


def build_figure(spec):
    if spec.kind not in _BUILDERS:
        raise PlotInputError(f"unknown figure kind {spec.kind!r}; choose from {KINDS}")
    if len(spec.inputs) != 1:
        raise PlotInputError(f"figure kind {spec.kind!r} takes exactly one input file")
    return _BUILDERS[spec.kind](spec.inputs[0], spec.title, spec.time_label)


def plot(spec):
    """Render the spec to ``spec.output``. Same inputs give identical bytes."""
    fig = build_figure(spec)
    # drop the version-stamp metadata so output bytes are reproducible
    fig.savefig(spec.output, dpi=110, metadata={"Software": None})
    plt.close(fig)
    return spec.output
