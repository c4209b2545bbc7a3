"""Static figures for run reports (files only, Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .dynamics import TraceSet  # noqa: E402

# keeps PNG bytes independent of the matplotlib version string
_META = {"Software": None}


def plot_waveforms(traces: TraceSet, path, title: str = "", controls=None) -> Path:
    """Input and forward/backward output intensities per channel, in photons/us."""
    chans = sorted(traces.channels)
    fig, axes = plt.subplots(len(chans), 1, figsize=(7, 2.6 * len(chans)), sharex=True, squeeze=False)
    t_us = traces.t * 1e6
    for ax, ch in zip(axes[:, 0], chans):
        c = traces[ch]
        ax.plot(t_us, c.inp * 1e-6, color="0.6", lw=1, label="input")
        ax.plot(t_us, c.fwd * 1e-6, color="C0", lw=1.2, label="forward")
        ax.plot(t_us, c.bwd * 1e-6, color="C3", lw=1.2, label="backward")
        ax.set_ylabel(f"ch{ch} flux (1/us)")
        if controls is not None:
            twin = ax.twinx()
            twin.plot(t_us, controls.fwc.level(traces.t), color="C2", lw=0.8, ls="--")
            twin.plot(t_us, controls.bwc.level(traces.t), color="C1", lw=0.8, ls=":")
            twin.set_ylim(-0.05, 1.6)
            twin.set_yticks([0, 1])
            twin.set_ylabel("control level")
        ax.legend(loc="upper right", fontsize=8, frameon=False)
    axes[-1, 0].set_xlabel("time (us)")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=110, metadata=_META)
    plt.close(fig)
    return path


def plot_decay(trap_times, release: dict, fits: dict, path, reference_tau: float | None = None) -> Path:
    """Release efficiency against trapping time with the fitted exponentials (log scale)."""
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    t = np.asarray(trap_times) * 1e6
    tt = np.linspace(t.min(), t.max(), 100)
    for i, ch in enumerate(sorted(release)):
        color = f"C{i}"
        ax.plot(t, release[ch], "o", color=color, label=f"ch{ch}")
        fit = fits.get(ch)
        if fit is not None:
            ax.plot(tt, fit(tt * 1e-6), "-", color=color, lw=1,
                    label=f"ch{ch} fit, tau = {fit.tau * 1e6:.2f} us")
    if reference_tau is not None:
        first = min(release)
        a = release[first][0] * np.exp(t[0] * 1e-6 / reference_tau)
        ax.plot(tt, a * np.exp(-tt * 1e-6 / reference_tau), "k:", lw=1,
                label=f"tau = {reference_tau * 1e6:.2f} us")
    ax.set_yscale("log")
    ax.set_xlabel("trapping time (us)")
    ax.set_ylabel("release efficiency")
    ax.legend(fontsize=8, frameon=False)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=110, metadata=_META)
    plt.close(fig)
    return path
