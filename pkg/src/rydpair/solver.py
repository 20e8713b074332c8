"""Potential curves over distance scans and their derived observables.

The pair Hamiltonian decomposes into blocks that never couple: connected
components of the nonzero structure of the interaction orders plus the
field operator.  Only blocks carrying probe weight are diagonalized.  Per
distance, each solved block yields eigenvalues and probe overlaps
a_k = |<probe|phi_k>|^2; adiabatic curves are then linked across adjacent
distances by maximal eigenvector overlap (a globally optimal assignment
with a small energy-distance penalty as deterministic tie-break).

Derived quantities:

    admixture cut    eps(R) = sum_k sqrt(a_k) over eigenstates within an
                     energy bin around a fixed detuning from the probe
    time evolution   p(t) = |sum_k a_k exp(i E_k t / hbar)|^2 at fixed R
    beat spectrum    frequencies (E_m - E_n)/h weighted by a_m a_n

plus a convergence loop that relaxes the basis windows until the tracked
curves stop moving.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .constants import HBAR, H_PLANCK, joule_to_ghz
from .errors import ConfigError
from .fields import FieldConfig
from .geometry import probe_state_in_calc_frame
from .operators import ElementCache
from .pair import (
    BasisSpec,
    InteractionOperator,
    PairBasis,
    StateTwo,
    build_interaction_operator,
    build_pair_basis,
    pair_energy_j,
    pair_field_operator,
)
from .radial import DEFAULT_DX

_LINK_ENERGY_PENALTY = 1e-6
_DEFAULT_ADMIXTURE_BIN_J = 0.1e9 * H_PLANCK  # 100 MHz x h


@dataclass
class PotentialCurves:
    """Eigenvalue curves over an R grid for the probe-connected blocks.

    Column k of `energies_j` and `overlaps` follows one adiabatic curve;
    `valid` flags grid points whose diagonalization succeeded (linking
    skips invalid points).  `curve_sectors` names the symmetry block of
    each curve; `reference_energy_j` is the unperturbed probe pair energy.
    """

    r_m: np.ndarray
    energies_j: np.ndarray
    overlaps: np.ndarray
    valid: np.ndarray
    errors: list[str | None]
    curve_sectors: tuple[str, ...]
    probe: StateTwo
    theta_rad: float
    reference_energy_j: float
    leroy_radius_m: float
    solved_size: int
    basis_size: int

    @property
    def below_leroy(self) -> np.ndarray:
        return self.r_m <= self.leroy_radius_m

    def detunings_ghz(self) -> np.ndarray:
        return joule_to_ghz(self.energies_j - self.reference_energy_j)

    def point_index(self, r_m: float) -> int:
        index = int(np.argmin(np.abs(self.r_m - r_m)))
        if not self.valid[index]:
            raise ConfigError(f"grid point R={self.r_m[index]:g} m is marked invalid")
        return index


def _reference_energy_j(basis: PairBasis, probe: StateTwo) -> float:
    """Unperturbed probe pair energy, on the basis's own energy origin.

    Matching the probe's levels against the basis states keeps detunings
    exactly consistent with the solved eigenvalues; the direct model
    energy is the fallback for a probe outside the basis level set.
    """
    levels = (probe.state1.level, probe.state2.level)
    swapped = (levels[1], levels[0])
    for candidate in (levels, swapped):
        for state, energy in zip(basis.states, basis.energies_j):
            if (state.state1.level, state.state2.level) == candidate:
                return float(energy)
    return pair_energy_j(basis.models, probe.untagged)


def _sector_label(key) -> str:
    sector, total_m = key
    parts = [f"M={float(total_m):g}"]
    for name, value in zip("pdf", sector):
        if value is not None:
            parts.append(f"{name}={value:+d}")
    return " ".join(parts)


def _coupling_blocks(
    basis: PairBasis,
    operator: InteractionOperator,
    field_matrix: np.ndarray | None,
) -> list[np.ndarray]:
    """Connected components of the coupling structure, as index arrays."""
    n = len(basis)
    structure = np.eye(n, dtype=bool)
    for matrix in operator.coefficients.values():
        structure |= matrix != 0.0
    if field_matrix is not None:
        structure |= field_matrix != 0.0
    count, labels = connected_components(csr_matrix(structure), directed=False)
    return [np.nonzero(labels == component)[0] for component in range(count)]


def solve_curves(
    basis: PairBasis,
    operator: InteractionOperator,
    r_grid_m: Sequence[float],
    probe: StateTwo,
    fields: FieldConfig | None = None,
    theta_rad: float = 0.0,
    cache: ElementCache | None = None,
    method: str = "numerov",
    dx: float = DEFAULT_DX,
    r_min_a0: float | None = None,
    spin_orbit: bool = True,
) -> PotentialCurves:
    """Diagonalize H(R) over `r_grid_m` for the blocks that carry the probe.

    The probe is a lab-frame product state; it is rotated into the
    calculation frame, blocks with zero projection are skipped entirely,
    and curves are linked across the grid by eigenvector continuity.
    """
    if operator.basis is not basis:
        raise ConfigError("interaction operator was built for a different basis")
    r_values = np.asarray([float(r) for r in r_grid_m], dtype=float)
    if r_values.size == 0:
        raise ConfigError("distance grid needs at least one point")
    if not np.all(np.isfinite(r_values)) or np.any(r_values <= 0):
        raise ConfigError("distances must be positive and finite")

    field_matrix = None
    if fields is not None and not fields.is_zero:
        field_matrix = pair_field_operator(
            basis, fields, theta_rad, cache=cache, method=method, dx=dx,
            r_min_a0=r_min_a0, spin_orbit=spin_orbit,
        )

    probe_vector = probe_state_in_calc_frame(probe, theta_rad, basis)
    if not np.any(probe_vector != 0.0):
        raise ConfigError(f"probe {probe} has no projection on the basis")

    blocks = [
        indices for indices in _coupling_blocks(basis, operator, field_matrix)
        if np.any(probe_vector[indices] != 0.0)
    ]
    solved_size = int(sum(indices.size for indices in blocks))
    n_points = r_values.size

    sector_keys = {
        (basis.states[int(index)].sector, basis.states[int(index)].total_m)
        for indices in blocks for index in indices
    }
    energies = np.full((n_points, solved_size), np.nan)
    overlaps = np.full((n_points, solved_size), np.nan)
    valid = np.zeros(n_points, dtype=bool)
    errors: list[str | None] = [None] * n_points
    curve_sectors: list[str] = []

    h0 = basis.energies_j
    offset = 0
    for indices in blocks:
        size = indices.size
        columns = slice(offset, offset + size)
        for index in indices:
            curve_sectors.append(_sector_label(
                (basis.states[int(index)].sector, basis.states[int(index)].total_m)
            ))
        block_h0 = np.diag(h0[indices])
        block_fields = field_matrix[np.ix_(indices, indices)] if field_matrix is not None else None
        block_orders = {
            rho: matrix[np.ix_(indices, indices)]
            for rho, matrix in operator.coefficients.items()
        }
        block_probe = probe_vector[indices]

        previous_vectors = None
        previous_values = None
        for point, r in enumerate(r_values):
            hamiltonian = block_h0.copy()
            for rho, matrix in block_orders.items():
                hamiltonian += matrix / r**rho
            if block_fields is not None:
                hamiltonian = hamiltonian + block_fields
            try:
                values, vectors = np.linalg.eigh(hamiltonian)
            except np.linalg.LinAlgError as exc:
                errors[point] = f"eigensolver failed at R={r:g} m: {exc}"
                continue
            if not np.all(np.isfinite(values)):
                # LAPACK signals non-finite input by returning NaNs, not raising
                errors[point] = f"eigensolver returned non-finite energies at R={r:g} m"
                continue
            if previous_vectors is not None:
                overlap = np.abs(previous_vectors.conj().T @ vectors) ** 2
                span = float(values.max() - values.min()) or 1.0
                detune = (previous_values[:, None] - values[None, :]) / span
                cost = -overlap + _LINK_ENERGY_PENALTY * detune**2
                _, assignment = linear_sum_assignment(cost)
                values = values[assignment]
                vectors = vectors[:, assignment]
            energies[point, columns] = values
            overlaps[point, columns] = np.abs(block_probe @ np.asarray(vectors, dtype=complex).conj()) ** 2 \
                if np.iscomplexobj(vectors) else np.abs(block_probe @ vectors) ** 2
            previous_vectors = vectors
            previous_values = values
        offset += size

    # a point is valid when no error was recorded (all blocks succeeded there)
    for point in range(n_points):
        valid[point] = errors[point] is None

    return PotentialCurves(
        r_m=r_values,
        energies_j=energies,
        overlaps=overlaps,
        valid=valid,
        errors=errors,
        curve_sectors=tuple(curve_sectors),
        probe=probe,
        theta_rad=theta_rad,
        reference_energy_j=_reference_energy_j(basis, probe),
        leroy_radius_m=basis.leroy_radius_m,
        solved_size=solved_size,
        basis_size=len(basis),
    )


def admixture_cut(
    curves: PotentialCurves,
    detuning_j: float,
    bin_width_j: float = _DEFAULT_ADMIXTURE_BIN_J,
) -> np.ndarray:
    """eps(R) = sum_k sqrt(a_k) over eigenstates within the detuning bin.

    The cut runs at `detuning_j` relative to the unperturbed probe pair
    energy; eigenstates within +- bin_width/2 contribute their admixture
    amplitude sqrt(a_k).  Invalid grid points yield NaN.
    """
    if not bin_width_j > 0:
        raise ConfigError(f"bin width must be positive, got {bin_width_j}")
    cut_energy = curves.reference_energy_j + detuning_j
    result = np.full(curves.r_m.size, np.nan)
    for point in range(curves.r_m.size):
        if not curves.valid[point]:
            continue
        inside = np.abs(curves.energies_j[point] - cut_energy) < bin_width_j / 2.0
        result[point] = float(np.sum(np.sqrt(curves.overlaps[point][inside])))
    return result


def time_evolution(
    curves: PotentialCurves,
    r_m: float,
    t_grid_s: Sequence[float],
) -> np.ndarray:
    """p(t) = |sum_k a_k exp(i E_k t / hbar)|^2 at the grid point nearest r_m.

    Coherent evolution of the probe within the solved eigen-decomposition;
    a single unit-overlap eigenstate gives p(t) = 1.
    """
    point = curves.point_index(r_m)
    t_values = np.asarray([float(t) for t in t_grid_s], dtype=float)
    weights = curves.overlaps[point]
    energies = curves.energies_j[point] - curves.reference_energy_j
    phases = np.exp(1j * np.outer(t_values, energies) / HBAR)
    return np.abs(phases @ weights) ** 2


def frequency_spectrum(
    curves: PotentialCurves,
    r_m: float,
    min_weight: float = 0.0,
) -> list[tuple[float, float]]:
    """Beat frequencies (E_m - E_n)/h with weights a_m a_n at fixed R.

    Returns (frequency in Hz, weight) pairs for m > n sorted by frequency;
    the relative weight of each frequency is the product of the two probe
    overlaps, so only eigenstate pairs that both carry probe weight show up.
    """
    point = curves.point_index(r_m)
    weights = curves.overlaps[point]
    energies = curves.energies_j[point]
    spectrum = []
    for m in range(energies.size):
        for n in range(m):
            weight = float(weights[m] * weights[n])
            if weight <= min_weight:
                continue
            frequency = abs(float(energies[m] - energies[n])) / H_PLANCK
            spectrum.append((frequency, weight))
    return sorted(spectrum)


def dominant_frequency(curves: PotentialCurves, r_m: float) -> tuple[float, float]:
    """The highest-weight beat note at fixed R: (frequency in Hz, weight)."""
    spectrum = frequency_spectrum(curves, r_m)
    if not spectrum:
        raise ConfigError("no beat notes: fewer than two eigenstates carry probe weight")
    return max(spectrum, key=lambda entry: entry[1])


@dataclass
class ConvergenceStep:
    spec: BasisSpec
    basis_size: int
    solved_size: int
    drift_ghz: float | None


@dataclass
class ConvergenceReport:
    """Basis-window relaxation history; only the final drift matters."""

    steps: list[ConvergenceStep]
    converged: bool
    tolerance_ghz: float

    @property
    def final_spec(self) -> BasisSpec:
        return self.steps[-1].spec


def _tracked_energies(curves: PotentialCurves, overlap_floor: float) -> list[np.ndarray]:
    """Per grid point, the curve energies carrying at least `overlap_floor`."""
    tracked = []
    for point in range(curves.r_m.size):
        if not curves.valid[point]:
            tracked.append(np.empty(0))
            continue
        keep = curves.overlaps[point] >= overlap_floor
        tracked.append(np.sort(curves.energies_j[point][keep]))
    return tracked


def _tracked_drift_ghz(
    previous: list[np.ndarray], current: list[np.ndarray]
) -> float:
    """Max nearest-energy distance between the tracked sets, in GHz."""
    drift = 0.0
    for old, new in zip(previous, current):
        if old.size == 0 and new.size == 0:
            continue
        if old.size == 0 or new.size == 0:
            return math.inf
        for energy in new:
            drift = max(drift, float(np.min(np.abs(old - energy))))
    return joule_to_ghz(drift)


def converge_basis(
    models,
    spec: BasisSpec,
    r_grid_m: Sequence[float],
    probe: StateTwo | None = None,
    fields: FieldConfig | None = None,
    theta_rad: float = 0.0,
    tolerance_ghz: float = 0.05,
    max_steps: int = 4,
    overlap_floor: float = 0.02,
    cache: ElementCache | None = None,
    method: str = "numerov",
    dx: float = DEFAULT_DX,
    r_min_a0: float | None = None,
    spin_orbit: bool = True,
) -> tuple[PotentialCurves, ConvergenceReport]:
    """Relax the basis windows until the tracked curves stop drifting.

    Each step widens the n and l windows by one and the energy window by
    half, re-solves, and compares the energies of curves with probe
    overlap above `overlap_floor` against the previous step.  Stops when
    the maximum drift falls below `tolerance_ghz` or after `max_steps`
    relaxations (converged flag False in that case).
    """
    if probe is None:
        probe = spec.target
    kwargs = dict(cache=cache, method=method, dx=dx, r_min_a0=r_min_a0, spin_orbit=spin_orbit)

    def run(current_spec: BasisSpec):
        basis = build_pair_basis(models, current_spec, **kwargs)
        operator = build_interaction_operator(basis, **kwargs)
        curves = solve_curves(
            basis, operator, r_grid_m, probe, fields=fields, theta_rad=theta_rad, **kwargs
        )
        return basis, curves

    basis, curves = run(spec)
    steps = [ConvergenceStep(spec, len(basis), curves.solved_size, None)]
    tracked = _tracked_energies(curves, overlap_floor)
    converged = False
    for _ in range(max_steps):
        spec = replace(
            spec,
            delta_n=spec.delta_n + 1,
            delta_l=spec.delta_l + 1,
            energy_window_ghz=spec.energy_window_ghz * 1.5,
        )
        basis, curves = run(spec)
        new_tracked = _tracked_energies(curves, overlap_floor)
        drift = _tracked_drift_ghz(tracked, new_tracked)
        steps.append(ConvergenceStep(spec, len(basis), curves.solved_size, drift))
        tracked = new_tracked
        if drift < tolerance_ghz:
            converged = True
            break
    return curves, ConvergenceReport(steps=steps, converged=converged, tolerance_ghz=tolerance_ghz)
