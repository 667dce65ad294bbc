"""Matplotlib renderings of toolkit outputs, written straight to files."""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .fitkit import LinearFit, NotchFitResult, TlsFitResult, notch_s21, tls_loss
from .layout import BridgePlacement, LayoutPath, footprint_polygon
from .quantize import DesignReport
from .scaffold import Profile, SweepRow


def save_profile_figure(path: str, profiles: dict[str, Profile]) -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for label, profile in profiles.items():
        ax.plot(profile.x, profile.heights, label=label)
    ax.set_xlabel("x (um)")
    ax.set_ylabel("height (um)")
    if len(profiles) > 1:
        ax.legend(loc="best")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def save_sweep_figure(path: str, rows: Sequence[SweepRow]) -> None:
    lengths = [r.length for r in rows]
    heights = [r.mid_height for r in rows]
    flags = [r.has_plateau for r in rows]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(lengths, heights, "o-", ms=3, label="mid-span height")
    bad = [L for L, f in zip(lengths, flags) if f]
    if bad:
        for L in bad:
            ax.axvline(L, color="tab:red", alpha=0.15)
        ax.plot([], [], color="tab:red", alpha=0.4, lw=6, label="plateau detected")
    ax.set_xlabel("bridge length (um)")
    ax.set_ylabel("height (um)")
    ax.legend(loc="best")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def save_linear_fit_figure(path: str, x, y, fit: LinearFit, xlabel: str, ylabel: str) -> None:
    x = np.asarray(x, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(x, y, "o", ms=4, label="data")
    grid = np.linspace(x.min(), x.max(), 100)
    ax.plot(grid, fit.intercept + fit.slope * grid, "-",
            label=f"fit: slope {fit.slope:.4g}")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(loc="best")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def save_resistivity_figure(path: str, ratios, resistances, rho: float) -> None:
    ratios = np.asarray(ratios, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(ratios, resistances, "o", ms=4, label="data")
    grid = np.linspace(0.0, ratios.max() * 1.05, 100)
    ax.plot(grid, rho * grid, "-", label=f"rho = {rho*1e6:.4g} uOhm*m")
    ax.set_xlabel("resistance ratio (1/m)")
    ax.set_ylabel("unit resistance (Ohm)")
    ax.legend(loc="best")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def save_notch_figure(path: str, f, z, result: NotchFitResult) -> None:
    f = np.asarray(f, dtype=float)
    z = np.asarray(z, dtype=complex)
    model = notch_s21(f, result)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.plot(f, np.abs(z), ".", ms=3, label="data")
    ax1.plot(f, np.abs(model), "-", label="fit")
    ax1.set_xlabel("f (GHz)")
    ax1.set_ylabel("|S21|")
    ax1.legend(loc="best")
    ax2.plot(z.real, z.imag, ".", ms=3)
    ax2.plot(model.real, model.imag, "-")
    ax2.set_xlabel("Re S21")
    ax2.set_ylabel("Im S21")
    ax2.set_aspect("equal", adjustable="datalim")
    ax1.set_title(f"f0 = {result.f0:.6f} GHz, Qi = {result.q_internal:.4g}")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def save_tls_figure(path: str, n, inv_qi, result: TlsFitResult) -> None:
    n = np.asarray(n, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.loglog(n, inv_qi, "o", ms=4, label="data")
    grid = np.logspace(np.log10(n.min()), np.log10(n.max()), 200)
    ax.loglog(grid, tls_loss(grid, result), "-", label="fit")
    ax.set_xlabel("photon number")
    ax.set_ylabel("1/Qi")
    ax.legend(loc="best")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def save_layout_figure(path: str, paths: Sequence[LayoutPath], placements: Sequence[BridgePlacement]) -> None:
    fig, ax = plt.subplots(figsize=(6, 6))
    for p in paths:
        ax.plot(p.vertices[:, 0], p.vertices[:, 1], "-", color="tab:gray", lw=1)
    for pl in placements:
        xs, ys = footprint_polygon(pl).exterior.xy
        color = "tab:blue" if pl.style == "separate" else "tab:orange"
        ax.fill(xs, ys, alpha=0.5, color=color)
    ax.set_xlabel("x (um)")
    ax.set_ylabel("y (um)")
    ax.set_aspect("equal", adjustable="datalim")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def save_design_figure(path: str, report: DesignReport) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    names = [q.mode for q in report.qubits]
    ax1.bar(names, [q.params.omega for q in report.qubits], color="tab:blue")
    ax1.set_ylabel("qubit frequency (GHz)")
    ax2.bar(names, [q.params.alpha * 1e3 for q in report.qubits], color="tab:orange")
    ax2.set_ylabel("anharmonicity (MHz)")
    if report.couplings:
        j_mhz = ", ".join(f"{c.params.j12*1e3:.3g}" for c in report.couplings)
        fig.suptitle(f"couplings J (MHz): {j_mhz}")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
