"""SVG figures: training curves, hit histograms, sector graphs, score histograms."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .graph import PHI_SECTOR_WIDTH, R_SCALE, Z_SCALE  # noqa: E402

HIST_BINS = 50

# fixed ids and no timestamp, so the same data gives byte-identical files
plt.rcParams["svg.hashsalt"] = "qgnn"
_SVG_META = {"Date": None, "Creator": None}


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return path


def plot_curves(runs, out_dir, prefix=""):
    """Validation loss and AUC against step; ``runs`` maps label -> records.

    Writes ``<prefix>loss.svg`` and ``<prefix>auc.svg``.
    """
    out_dir = Path(out_dir)
    written = []
    for column, ylabel in (("val_loss", "validation loss"), ("val_auc", "validation AUC")):
        fig, ax = plt.subplots(figsize=(6, 4))
        for label, records in runs.items():
            pts = [(r.step, getattr(r, column)) for r in records if getattr(r, column) is not None]
            if pts:
                steps, vals = zip(*pts)
                ax.plot(steps, vals, marker="o", ms=3, label=label)
        ax.set_xlabel("step")
        ax.set_ylabel(ylabel)
        if len(runs) > 1:
            ax.legend()
        ax.grid(alpha=0.3)
        fig.tight_layout()
        name = "loss.svg" if column == "val_loss" else "auc.svg"
        written.append(_save(fig, out_dir / f"{prefix}{name}"))
    return written


def denormalize(subgraph):
    """Physical (r [mm], phi [rad, sector-relative], z [mm]) of the nodes."""
    f = subgraph.node_features
    return f[:, 0] * R_SCALE, f[:, 1] * PHI_SECTOR_WIDTH, f[:, 2] * 2.0 * Z_SCALE - Z_SCALE


def plot_hit_histograms(subgraphs, path, bins=HIST_BINS):
    """r / phi / z histograms of all nodes across ``subgraphs``."""
    coords = [denormalize(g) for g in subgraphs if g.n_nodes]
    if coords:
        r, phi, z = (np.concatenate(c) for c in zip(*coords))
    else:
        r = phi = z = np.zeros(0)
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.5))
    for ax, data, label in zip(axes, (r, phi, z),
                               ("r [mm]", r"$\phi$ within sector [rad]", "z [mm]")):
        ax.hist(data, bins=bins, histtype="stepfilled", alpha=0.7)
        ax.set_xlabel(label)
        ax.set_ylabel("hits")
    fig.tight_layout()
    return _save(fig, path)


def plot_subgraph(subgraph, path):
    """Sector graph in (z, r), (phi, r) and (x, y); true edges red, fakes blue."""
    r, phi, z = denormalize(subgraph)
    x, y = r * np.cos(phi), r * np.sin(phi)
    labels = subgraph.labels if subgraph.labels is not None else np.zeros(subgraph.n_edges)
    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    views = ((z, r, "z [mm]", "r [mm]"), (phi, r, r"$\phi$ [rad]", "r [mm]"),
             (x, y, "x [mm]", "y [mm]"))
    for ax, (u, v, xl, yl) in zip(axes, views):
        for (a, b), lab in zip(subgraph.edges.tolist(), labels.tolist()):
            ax.plot([u[a], u[b]], [v[a], v[b]], color="red" if lab else "blue",
                    lw=1.0 if lab else 0.5, alpha=0.8)
        ax.scatter(u, v, s=6, color="black", zorder=3)
        ax.set_xlabel(xl)
        ax.set_ylabel(yl)
    fig.suptitle(subgraph.name)
    fig.tight_layout()
    return _save(fig, path)


def plot_score_histogram(counts, edges, path, probs=None, labels=None):
    """Edge-score histogram; split by truth class when probs/labels are given."""
    fig, ax = plt.subplots(figsize=(6, 4))
    if probs is not None and labels is not None and len(probs):
        ax.hist(probs[labels == 1], bins=edges, histtype="step", color="red", label="true")
        ax.hist(probs[labels == 0], bins=edges, histtype="step", color="blue", label="fake")
        ax.legend()
    else:
        ax.stairs(counts, edges, fill=True, alpha=0.7)
    ax.set_xlabel("edge score")
    ax.set_ylabel("edges")
    fig.tight_layout()
    return _save(fig, path)
