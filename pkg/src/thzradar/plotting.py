"""Matplotlib figures written next to the CSV outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.dpi": 120,
    "savefig.bbox": "tight",
}


def _save(fig, path):
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def plot_ascan(w, path, echoes=None, title="A-scan"):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.4, 3.2))
        ax.plot(w.time_axis * 1e9, w.samples, lw=0.6, color="k")
        for e in echoes or ():
            ax.axvline(e.delay * 1e9, color="tab:red", lw=0.5, ls="--")
        ax.set_xlabel("time [ns]")
        ax.set_ylabel("amplitude [V]")
        ax.set_title(title)
        _save(fig, path)


def plot_radargram(r, path, title="B-scan", detections=()):
    a = r.amplitudes
    extent = [
        r.positions[0] * 1e3,
        r.positions[-1] * 1e3,
        r.time_axis[-1] * 1e9,
        r.time_axis[0] * 1e9,
    ]
    vmax = float(np.abs(a).max()) or 1.0
    signed = r.processed.value != "envelope"
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.0, 4.0))
        im = ax.imshow(
            a.T,
            aspect="auto",
            extent=extent,
            cmap="seismic" if signed else "magma",
            vmin=-vmax if signed else 0.0,
            vmax=vmax,
            interpolation="nearest",
        )
        for d in detections:
            ax.plot(d.lateral_position * 1e3, d.echo_delay * 1e9, "o", mfc="none", mec="lime", ms=9)
        ax.set_xlabel("scan position [mm]")
        ax.set_ylabel("time [ns]")
        ax.set_title(title)
        fig.colorbar(im, ax=ax, label="amplitude [V]")
        _save(fig, path)


def plot_ledger(ledger, path):
    labels = [item.label for item in ledger.items]
    values = np.array([item.signed_db for item in ledger.items])
    running = ledger.tx_power_dbm + np.concatenate([[0.0], np.cumsum(values)])
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.4, 0.3 * len(labels) + 1.2))
        y = np.arange(len(labels))
        colors = ["tab:green" if v >= 0 else "tab:red" for v in values]
        ax.barh(y, values, left=running[:-1], color=colors)
        ax.set_yticks(y, labels)
        ax.invert_yaxis()
        ax.axvline(ledger.received_power_dbm, color="k", lw=0.8, ls="--")
        ax.set_xlabel("power level [dBm]")
        ax.set_title(f"Pr = {ledger.received_power_dbm:.2f} dBm, SNR = {ledger.snr_db:.2f} dB")
        _save(fig, path)
