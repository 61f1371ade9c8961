"""Static vector figures written next to the CSV output."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .atom import Level  # noqa: E402

# fixed ids and no timestamps, so reruns give the same bytes
plt.rcParams["svg.hashsalt"] = "stirapsim"
_NO_DATE = {"svg": {"Date": None}, "pdf": {"CreationDate": None}, "eps": {}}


def save(fig, stem: Path, formats) -> list[Path]:
    out = []
    for fmt in formats:
        path = Path(f"{stem}.{fmt}")
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=f".{fmt}")
        os.close(fd)
        try:
            fig.savefig(tmp, format=fmt, metadata=_NO_DATE.get(fmt) or None)
            os.replace(tmp, path)
        except BaseException:
            os.unlink(tmp)
            raise
        out.append(path)
    plt.close(fig)
    return out


def curve_figure(x, ys: dict, xlabel: str, title: str = ""):
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (y, style) in ys.items():
        ax.plot(x, y, style, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("transfer efficiency")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(alpha=0.3)
    if len(ys) > 1:
        ax.legend(fontsize=8)
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    return fig


def trajectory_figure(t_us, pops, omega850_mhz, omega854_mhz):
    fig, (a1, a2) = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
    a1.plot(t_us, omega850_mhz, label="850 nm")
    a1.plot(t_us, omega854_mhz, label="854 nm")
    a1.set_ylabel("Rabi frequency / 2pi (MHz)")
    a1.legend(fontsize=8)
    for lv in (Level.D32, Level.P32, Level.D52):
        a2.plot(t_us, pops[:, lv], label=lv.label)
    a2.set_xlabel("time (us)")
    a2.set_ylabel("population")
    a2.legend(fontsize=8)
    fig.tight_layout()
    return fig


def envelope_figure(t_us, omega850_mhz, omega854_mhz, ratio):
    fig, (a1, a2) = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
    a1.plot(t_us, omega850_mhz, label="850 nm")
    a1.plot(t_us, omega854_mhz, label="854 nm")
    a1.set_ylabel("Rabi frequency / 2pi (MHz)")
    a1.legend(fontsize=8)
    r = np.where(np.isfinite(ratio), ratio, np.nan)
    a2.plot(t_us, r)
    if np.nanmax(r, initial=0.0) > 0:
        a2.set_yscale("log")
    a2.set_xlabel("time (us)")
    a2.set_ylabel("|dtheta/dt| / omega_eff")
    fig.tight_layout()
    return fig


def histogram_figure(estimates, expected):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(estimates, bins=60, color="0.5")
    ax.axvline(expected, color="C3", label="decay-corrected shelved fraction")
    ax.set_xlabel("(L - S) / (L - B)")
    ax.set_ylabel("trials")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig
