"""Optional PNG renderings of the delimited data artifacts."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_META = {"Software": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_META)
    plt.close(fig)
    return path


def lines(path, x, series: dict, xlabel: str, ylabel: str, logy: bool = False):
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, y in series.items():
        ax.plot(x, y, label=label, lw=1)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if len(series) > 1:
        ax.legend()
    return _save(fig, path)


def points(path, x, y, color, xlabel: str, ylabel: str, cmap="viridis"):
    fig, ax = plt.subplots(figsize=(6, 4))
    sc = ax.scatter(x, y, c=color, s=4, cmap=cmap)
    fig.colorbar(sc, ax=ax)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return _save(fig, path)


def image(path, data, extent=None, xlabel="x (um)", ylabel="y (um)"):
    fig, ax = plt.subplots(figsize=(5, 4.5))
    im = ax.imshow(data, origin="lower", extent=extent, cmap="magma")
    fig.colorbar(im, ax=ax)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return _save(fig, path)


def stems(path, x, labels, xlabel: str):
    fig, ax = plt.subplots(figsize=(7, 3))
    ax.vlines(x, 0, 1, lw=1)
    for xi, lab in zip(x, labels):
        ax.text(xi, 1.02, lab, rotation=90, fontsize=6, ha="center", va="bottom")
    ax.set_ylim(0, 1.4)
    ax.set_yticks([])
    ax.set_xlabel(xlabel)
    return _save(fig, path)
