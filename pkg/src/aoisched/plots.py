"""Matplotlib rendering for the figure-data path.

Kept separate from the data emission so headless environments that only
want the delimited series never import matplotlib.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

MARKERS = ["o", "s", "^", "d", "v", "x"]


def render_figure(out_png: str, title: str, xlabel: str, ylabel: str,
                  series: dict[str, tuple]):
    """One axes, one line per series, error bars where a spread is given."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for i, name in enumerate(sorted(series)):
        xs, ys, stds = series[name]
        if not len(xs):
            continue
        marker = MARKERS[i % len(MARKERS)]
        label = name or None
        if stds is not None and any(stds):
            ax.errorbar(xs, ys, yerr=stds, marker=marker, capsize=3, label=label)
        else:
            ax.plot(xs, ys, marker=marker, label=label)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(alpha=0.3)
    if any(name for name in series):
        ax.legend()
    fig.tight_layout()
    fig.savefig(out_png, dpi=150)
    plt.close(fig)
