"""
SVG curves of the aggregated sweep: weighted BER (log scale) and NMSE against SNR.
"""

from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from utils.logger import logger


def _curves(summaries: Sequence) -> Dict[Tuple[int, int, int, str], List]:
    """One curve per (M, J, K, schedule), points sorted by SNR"""
    curves: Dict[Tuple[int, int, int, str], List] = {}
    for s in summaries:
        curves.setdefault((s.m, s.j, s.k, s.schedule), []).append(s)
    for points in curves.values():
        points.sort(key=lambda s: s.snr_db)
    return curves


def _label(key) -> str:
    m, j, k, schedule = key
    return f"M={m}, J={j}, K={k}, {schedule}"


def plot_ber(summaries: Sequence, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for key, points in _curves(summaries).items():
        # zero BER cannot sit on a log axis
        shown = [(p.snr_db, p.ber_weighted) for p in points if p.ber_weighted > 0.0]
        if shown:
            ax.semilogy(*zip(*shown), "o-", label=_label(key))
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("Weighted BER")
    ax.grid(True, which="both", alpha=0.3)
    if ax.get_legend_handles_labels()[0]:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def plot_nmse(summaries: Sequence, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for key, points in _curves(summaries).items():
        ax.plot([p.snr_db for p in points], [p.nmse_db for p in points], "s-", label=_label(key))
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("NMSE (dB)")
    ax.grid(True, alpha=0.3)
    if ax.get_legend_handles_labels()[0]:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def plot_summaries(summaries: Sequence, out_dir: Path, stem: str = "results") -> List[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [
        plot_ber(summaries, out_dir / f"{stem}_ber.svg"),
        plot_nmse(summaries, out_dir / f"{stem}_nmse.svg"),
    ]
    logger.debug(f"Plots written: {', '.join(str(p) for p in paths)}")
    return paths
