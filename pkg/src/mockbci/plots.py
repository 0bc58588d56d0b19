"""Figure rendering for the report path.

Every plot goes straight to a file; nothing interactive. The CSV/JSON
artifacts carry the same numbers, the figures are the quick-look view.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .csp import SpatialFilterBank  # noqa: E402
from .data import ChannelInfo  # noqa: E402
from .evaluation import EvalReport  # noqa: E402
from .spectral import TimeFrequencyMap  # noqa: E402

plt.rcParams["figure.dpi"] = 110
plt.rcParams["font.size"] = 9


def save_tfr_figure(maps: dict[str, TimeFrequencyMap], title: str,
                    path: str | Path, onset_s: float = 1.25) -> None:
    """Heatmaps of absolute power per channel, movement onset marked."""
    fig, axes = plt.subplots(1, len(maps), figsize=(5.0 * len(maps), 3.2),
                             squeeze=False)
    for ax, (channel, tfr) in zip(axes[0], sorted(maps.items())):
        extent = (tfr.times[0], tfr.times[-1], tfr.freqs[0], tfr.freqs[-1])
        im = ax.imshow(tfr.power, aspect="auto", origin="lower",
                       extent=extent, cmap="viridis")
        ax.axvline(0.0, color="w", ls="--", lw=0.8)
        ax.axvline(onset_s, color="w", ls="-", lw=0.8)
        ax.set_xlabel("time (s)")
        ax.set_ylabel("frequency (Hz)")
        ax.set_title(f"{title} {channel}")
        fig.colorbar(im, ax=ax, label=tfr.units)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_mrcp_figure(traces_by_channel: dict[str, dict[str, np.ndarray]],
                     title: str, path: str | Path,
                     onset_s: float = 1.25) -> None:
    channels = sorted(traces_by_channel)
    fig, axes = plt.subplots(1, len(channels), figsize=(4.2 * len(channels), 3.0),
                             sharey=True, squeeze=False)
    for ax, ch in zip(axes[0], channels):
        traces = traces_by_channel[ch]
        times = traces["times"]
        for label in sorted(k for k in traces if k != "times"):
            ax.plot(times, traces[label] * 1e6, label=label, lw=1.0)
        ax.axvline(0.0, color="k", ls="--", lw=0.8)
        ax.axvline(onset_s, color="k", ls="-", lw=0.8)
        ax.set_xlabel("time (s)")
        ax.set_title(f"{title} {ch}")
        ax.legend(fontsize=7)
    axes[0][0].set_ylabel("amplitude (uV)")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_confusion_figure(report: EvalReport, title: str,
                          path: str | Path) -> None:
    conf = report.confusion_normalized
    fig, ax = plt.subplots(figsize=(3.4, 3.0))
    im = ax.imshow(conf, cmap="Blues", vmin=0, vmax=1)
    ax.set_xticks(range(len(report.classes)), [str(c) for c in report.classes])
    ax.set_yticks(range(len(report.classes)), [str(c) for c in report.classes])
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    ax.set_title(f"{title} (macro-F1 {report.macro_f1:.2f})")
    for i in range(len(report.classes)):
        for j in range(len(report.classes)):
            ax.text(j, i, f"{conf[i, j]:.2f}", ha="center", va="center",
                    color="k" if conf[i, j] < 0.6 else "w", fontsize=8)
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_csp_patterns_figure(bank: SpatialFilterBank,
                             channels: list[ChannelInfo], title: str,
                             path: str | Path) -> None:
    """Patterns as scalp scatter maps, in mutual-information order."""
    by_label = {c.label: c.position for c in channels}
    pos = np.array([by_label[lab] or (np.nan, np.nan)
                    for lab in bank.channel_labels])
    ordered = bank.patterns[:, bank.mi_order]
    n = bank.n_filters
    fig, axes = plt.subplots(1, n, figsize=(2.1 * n, 2.4), squeeze=False)
    lim = np.nanmax(np.abs(ordered)) or 1.0
    for j, ax in enumerate(axes[0]):
        ax.add_patch(plt.Circle((0, 0), 1.15, fill=False, color="k", lw=0.8))
        ax.scatter(pos[:, 0], pos[:, 1], c=ordered[:, j], cmap="RdBu_r",
                   vmin=-lim, vmax=lim, s=36, edgecolors="k", linewidths=0.3)
        ax.set_title(f"CSP{j}", fontsize=8)
        ax.set_xlim(-1.3, 1.3)
        ax.set_ylim(-1.3, 1.3)
        ax.set_aspect("equal")
        ax.axis("off")
    fig.suptitle(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_f1_summary_figure(scores: dict[str, float], path: str | Path) -> None:
    names = list(scores)
    fig, ax = plt.subplots(figsize=(3.6, 2.8))
    ax.bar(names, [scores[k] for k in names], color="tab:blue")
    ax.set_ylabel("macro-F1")
    ax.set_ylim(0, 1)
    for i, name in enumerate(names):
        ax.text(i, scores[name] + 0.02, f"{scores[name]:.2f}", ha="center",
                fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
