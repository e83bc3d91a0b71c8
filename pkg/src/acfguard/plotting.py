"""Static figures written straight to files (Agg backend, format from the suffix)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "acfguard"
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    # fixed metadata keeps repeated renders byte-identical
    meta = {"Date": None} if path.suffix.lower() in (".svg", ".pdf") else {}
    fig.savefig(path, metadata=meta, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_frontier(series_rows: dict, path, epsilon: float | None = None, title: str = "") -> Path:
    """CR against ACF deviation, one line per method.

    ``series_rows`` maps a label to rows with ``cr`` and ``acf_dev`` keys.
    """
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, rows in series_rows.items():
        pts = sorted((r["cr"], r["acf_dev"]) for r in rows if r.get("acf_dev") is not None)
        if not pts:
            continue
        cr, dev = zip(*pts)
        ax.plot(cr, dev, marker="o", label=label)
    if epsilon is not None:
        ax.axhline(epsilon, color="grey", linestyle="--", linewidth=1, label="bound")
    ax.set_xlabel("compression ratio")
    ax.set_ylabel("ACF deviation")
    ax.set_yscale("symlog", linthresh=1e-6)
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize="small")
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def plot_overlay(original, reconstruction, path, kept=None, title: str = "") -> Path:
    x = np.asarray(original, dtype=np.float64)
    y = np.asarray(reconstruction, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(8, 3.5))
    t = np.arange(x.shape[0])
    ax.plot(t, x, linewidth=0.8, color="0.6", label="original")
    ax.plot(t, y, linewidth=1.0, color="C0", label="reconstruction")
    if kept is not None:
        k = np.asarray(kept)
        ax.plot(k, x[k], linestyle="none", marker=".", markersize=3, color="C3", label="kept")
    if title:
        ax.set_title(title)
    ax.set_xlabel("index")
    ax.legend(loc="best", fontsize="small")
    return _save(fig, path)
