"""Figure rendering for scan results (written to files, never shown).

Every function takes computed objects plus an output path, renders with
the non-interactive Agg backend, and returns the path.  Color encodes the
probe-character overlap throughout, so the adiabatic curves that carry
the initial state stand out against the background of perturber levels.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .fields import FieldMap  # noqa: E402
from .solver import PotentialCurves  # noqa: E402

_DPI = 150
_OVERLAP_CMAP = "viridis"


def _finish(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def plot_potential_curves(
    curves: PotentialCurves,
    path: str | Path,
    energy_span_ghz: float | None = None,
) -> Path:
    """Detuning versus distance, one marker per (R, curve), colored by overlap."""
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    r_um = curves.r_m * 1e6
    detunings = curves.detunings_ghz()
    order = None
    for k in range(detunings.shape[1]):
        ax.plot(r_um, detunings[:, k], color="0.82", lw=0.5, zorder=1)
    # draw high-overlap points on top of low ones
    mesh_r = np.repeat(r_um, detunings.shape[1])
    flat_e = detunings.ravel()
    flat_o = curves.overlaps.ravel()
    keep = np.isfinite(flat_e)
    order = np.argsort(flat_o[keep])
    scatter = ax.scatter(
        mesh_r[keep][order], flat_e[keep][order], c=flat_o[keep][order],
        s=6, cmap=_OVERLAP_CMAP, vmin=0.0, vmax=1.0, zorder=2,
    )
    if r_um.min() <= curves.leroy_radius_m * 1e6 <= r_um.max():
        ax.axvline(curves.leroy_radius_m * 1e6, color="crimson", ls="--", lw=1.0)
        ax.text(curves.leroy_radius_m * 1e6, ax.get_ylim()[1], " $R_{LR}$",
                color="crimson", va="top", fontsize=9)
    if energy_span_ghz is not None:
        ax.set_ylim(-energy_span_ghz, energy_span_ghz)
    ax.set_xlabel("interatomic distance (µm)")
    ax.set_ylabel("pair energy - reference (GHz)")
    ax.set_title(f"probe {curves.probe}", fontsize=9)
    fig.colorbar(scatter, ax=ax, label="probe overlap")
    return _finish(fig, path)


def plot_field_map(fmap: FieldMap, path: str | Path, scan_label: str) -> Path:
    """Level energies versus scanned field amplitude, colored by purity."""
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    energies = fmap.energies_ghz()
    for k in range(energies.shape[1]):
        ax.plot(fmap.values, energies[:, k], color="0.82", lw=0.5, zorder=1)
    mesh_x = np.repeat(fmap.values, energies.shape[1])
    flat_e = energies.ravel()
    flat_o = fmap.overlaps.ravel()
    keep = np.isfinite(flat_e)
    scatter = ax.scatter(
        mesh_x[keep], flat_e[keep], c=flat_o[keep], s=4,
        cmap=_OVERLAP_CMAP, vmin=0.0, vmax=1.0, zorder=2,
    )
    ax.set_xlabel(scan_label)
    ax.set_ylabel("level energy (GHz)")
    fig.colorbar(scatter, ax=ax, label="leading-character overlap")
    return _finish(fig, path)


def plot_admixture_cut(
    curves: PotentialCurves,
    epsilon: np.ndarray,
    path: str | Path,
) -> Path:
    """Admixture amplitude along the cut, against R scaled by the Le Roy radius."""
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    scaled = curves.r_m / curves.leroy_radius_m
    ax.plot(scaled, epsilon, color="tab:blue", lw=1.2)
    ax.axvline(1.0, color="crimson", ls="--", lw=1.0)
    ax.text(1.0, ax.get_ylim()[1], " $R_{LR}$", color="crimson", va="top", fontsize=9)
    finite = np.isfinite(epsilon)
    if finite.any() and np.nanmax(epsilon) > 0:
        peak = int(np.nanargmax(epsilon))
        ax.plot(scaled[peak], epsilon[peak], "o", color="tab:orange", ms=5)
        ax.annotate(f"peak at R/$R_{{LR}}$ = {scaled[peak]:.2f}",
                    (scaled[peak], epsilon[peak]), textcoords="offset points",
                    xytext=(8, 2), fontsize=9)
    ax.set_xlabel("R / $R_{LR}$")
    ax.set_ylabel("admixture amplitude $\\epsilon$")
    ax.set_yscale("log")
    return _finish(fig, path)


def plot_spectrum(
    rows: list[tuple[float, float, float]],
    path: str | Path,
) -> Path:
    """Beat-note spectrum over the interaction angle.

    `rows` holds (theta_deg, freq_MHz, weight); marker area scales with
    the weight normalized per angle, so each angle shows its dominant
    lines regardless of absolute overlap.
    """
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    if rows:
        data = np.asarray(rows, dtype=float)
        weights = data[:, 2].copy()
        for theta in np.unique(data[:, 0]):
            sel = data[:, 0] == theta
            top = weights[sel].max()
            if top > 0:
                weights[sel] = weights[sel] / top
        scatter = ax.scatter(data[:, 0], data[:, 1], s=40 * weights + 1,
                             c=weights, cmap=_OVERLAP_CMAP, vmin=0.0, vmax=1.0)
        fig.colorbar(scatter, ax=ax, label="relative weight (per angle)")
    ax.set_xlabel("interaction angle (deg)")
    ax.set_ylabel("beat frequency (MHz)")
    return _finish(fig, path)


def plot_evolution(t_s: np.ndarray, p_probe: np.ndarray, path: str | Path) -> Path:
    """Probe survival probability p(t)."""
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    ax.plot(np.asarray(t_s) * 1e6, p_probe, color="tab:blue", lw=1.2)
    ax.set_xlabel("time (µs)")
    ax.set_ylabel("probe probability p(t)")
    ax.set_ylim(-0.02, 1.02)
    return _finish(fig, path)
