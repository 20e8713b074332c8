"""Potential-curve solver: closed forms, linking, observables, convergence."""

from __future__ import annotations

import math

import numpy as np
import pytest

from rydpair.angular import half
from rydpair.constants import H_PLANCK, HBAR
from rydpair.errors import ConfigError
from rydpair.pair import (
    BasisSpec,
    InteractionOperator,
    PairBasis,
    StateTwo,
    build_interaction_operator,
    build_pair_basis,
    pair_energy_j,
)
from rydpair.solver import (
    _coupling_blocks,
    admixture_cut,
    converge_basis,
    dominant_frequency,
    frequency_spectrum,
    solve_curves,
    time_evolution,
)
from rydpair.species import StateOne, default_registry

from oracles import two_level_eigenvalues, two_level_evolution

DELTA_J = 2.0e6 * H_PLANCK  # 2 MHz Foerster defect
C3_JM3 = 1.0e-48


def _toy_system(coupling_value=C3_JM3):
    """Fabricated two-level resonance: |A> at 0, |B> at DELTA_J, coupled by
    C3/R^3.  Real species states only label the rows; the energies and the
    coupling are set by hand so every observable has a closed form."""
    registry = default_registry()
    rb = registry.get("Rb")
    up = half(1)
    a = StateTwo(StateOne("Rb", 60, 0, half(1), mj=up), StateOne("Rb", 60, 0, half(1), mj=up))
    b = StateTwo(StateOne("Rb", 60, 1, half(1), mj=up), StateOne("Rb", 60, 1, half(1), mj=up))
    spec = BasisSpec(target=a, delta_n=1, delta_l=1, energy_window_ghz=1.0)
    basis = PairBasis(
        spec=spec,
        models=(rb, rb),
        product_states=(a, b),
        states=(a, b),
        transform=np.eye(2),
        energies_j=np.array([0.0, DELTA_J]),
        target_energy_j=0.0,
        leroy_radius_m=1.0e-6,
    )
    coupling = np.array([[0.0, coupling_value], [coupling_value, 0.0]])
    operator = InteractionOperator(basis=basis, rho_max=3, coefficients={3: coupling})
    return basis, operator, a


@pytest.fixture(scope="module")
def toy_curves():
    basis, operator, probe = _toy_system()
    r_grid = np.linspace(2e-6, 12e-6, 60)
    return solve_curves(basis, operator, r_grid, probe), r_grid


@pytest.fixture(scope="module")
def rb_small_system(registry, rb60s_pair, cache):
    spec = BasisSpec(target=rb60s_pair, delta_n=1, delta_l=1, energy_window_ghz=15.0)
    basis = build_pair_basis(registry.get("Rb"), spec, cache=cache)
    operator = build_interaction_operator(basis, cache=cache)
    return basis, operator


class TestTwoLevelClosedForm:
    def test_eigenvalues(self, toy_curves):
        curves, r_grid = toy_curves
        assert curves.valid.all()
        assert curves.solved_size == 2 and curves.basis_size == 2
        for i, r in enumerate(r_grid):
            lower, upper = two_level_eigenvalues(DELTA_J, C3_JM3 / r**3)
            got = np.sort(curves.energies_j[i])
            scale = max(abs(lower), abs(upper))
            assert abs(got[0] - lower) <= 1e-10 * scale
            assert abs(got[1] - upper) <= 1e-10 * scale

    def test_overlaps_complete(self, toy_curves):
        curves, _ = toy_curves
        assert np.allclose(curves.overlaps.sum(axis=1), 1.0, atol=1e-12)

    def test_reference_energy_is_basis_origin(self, toy_curves):
        curves, _ = toy_curves
        assert curves.reference_energy_j == 0.0
        assert np.allclose(curves.detunings_ghz(), curves.energies_j / H_PLANCK * 1e-9)

    def test_below_leroy_mask(self):
        basis, operator, probe = _toy_system()
        r_grid = np.array([0.5e-6, 2.0e-6])
        curves = solve_curves(basis, operator, r_grid, probe)
        assert curves.below_leroy.tolist() == [True, False]


class TestLinking:
    def test_columns_are_continuous(self, toy_curves):
        """Adiabatic linking never lets a column jump across the avoided
        crossing gap between neighbouring grid points."""
        curves, _ = toy_curves
        steps = np.abs(np.diff(curves.energies_j, axis=0))
        assert steps.max() < DELTA_J

    def test_deterministic(self):
        basis, operator, probe = _toy_system()
        r_grid = np.linspace(2e-6, 12e-6, 25)
        first = solve_curves(basis, operator, r_grid, probe)
        second = solve_curves(basis, operator, r_grid, probe)
        assert np.array_equal(first.energies_j, second.energies_j)
        assert np.array_equal(first.overlaps, second.overlaps)
        assert first.curve_sectors == second.curve_sectors


class TestThetaInvariance:
    def test_field_free_eigenvalues_do_not_depend_on_angle(self, rb_small_system, rb60s_pair, cache):
        """Without fields the Hamiltonian knows nothing about the lab frame:
        the angle only redistributes probe overlap.  Eigenvalues of every
        sector solved at both angles must coincide."""
        basis, operator = rb_small_system
        r_grid = np.linspace(3e-6, 8e-6, 4)
        axial = solve_curves(basis, operator, r_grid, rb60s_pair, cache=cache)
        tilted = solve_curves(
            basis, operator, r_grid, rb60s_pair, theta_rad=math.radians(14.0), cache=cache
        )
        common = set(axial.curve_sectors) & set(tilted.curve_sectors)
        assert common
        for sector in common:
            cols_a = [k for k, s in enumerate(axial.curve_sectors) if s == sector]
            cols_t = [k for k, s in enumerate(tilted.curve_sectors) if s == sector]
            assert len(cols_a) == len(cols_t)
            for i in range(r_grid.size):
                a = np.sort(axial.energies_j[i, cols_a])
                t = np.sort(tilted.energies_j[i, cols_t])
                scale = np.abs(a).max()
                assert np.abs(a - t).max() <= 1e-10 * scale

    def test_angle_changes_overlaps(self, rb_small_system, rb60s_pair, cache):
        basis, operator = rb_small_system
        r_grid = np.linspace(3e-6, 8e-6, 3)
        axial = solve_curves(basis, operator, r_grid, rb60s_pair, cache=cache)
        tilted = solve_curves(
            basis, operator, r_grid, rb60s_pair, theta_rad=math.radians(30.0), cache=cache
        )
        assert tilted.solved_size > axial.solved_size


class TestObservables:
    def test_time_evolution_closed_form(self, toy_curves):
        curves, _ = toy_curves
        r_pick = 4e-6
        point = curves.point_index(r_pick)
        weights = curves.overlaps[point]
        energies = curves.energies_j[point]
        t_grid = np.linspace(0.0, 5e-6, 200)
        probe_population = time_evolution(curves, r_pick, t_grid)
        # the survival signal beats between eigenstates with amplitude
        # |<probe|k>|^2: each eigenstate's overlap enters once in the
        # expansion of the probe and once in the projection back onto it
        expected = two_level_evolution(
            weights[0], weights[1], abs(energies[1] - energies[0]), HBAR, t_grid
        )
        assert np.max(np.abs(probe_population - expected)) < 1e-12
        assert probe_population[0] == pytest.approx(1.0, abs=1e-12)

    def test_spectrum_single_line(self, toy_curves):
        curves, _ = toy_curves
        r_pick = 4e-6
        point = curves.point_index(r_pick)
        energies = curves.energies_j[point]
        weights = curves.overlaps[point]
        lines = frequency_spectrum(curves, r_pick)
        assert len(lines) == 1
        frequency, weight = lines[0]
        gap = abs(energies[1] - energies[0])
        assert frequency == pytest.approx(gap / H_PLANCK, rel=1e-12)
        assert weight == pytest.approx(weights[0] * weights[1], abs=1e-15)
        assert dominant_frequency(curves, r_pick) == lines[0]

    def test_spectrum_min_weight_filter(self, toy_curves):
        curves, _ = toy_curves
        assert frequency_spectrum(curves, 4e-6, min_weight=1.0) == []

    def test_dominant_frequency_needs_two_carriers(self):
        """A probe overlapping a single eigenstate produces no beat note."""
        registry = default_registry()
        rb = registry.get("Rb")
        up = half(1)
        a = StateTwo(StateOne("Rb", 60, 0, up, mj=up), StateOne("Rb", 60, 0, up, mj=up))
        spec = BasisSpec(target=a, delta_n=1, delta_l=1, energy_window_ghz=1.0)
        basis = PairBasis(
            spec=spec,
            models=(rb, rb),
            product_states=(a,),
            states=(a,),
            transform=np.eye(1),
            energies_j=np.array([0.0]),
            target_energy_j=0.0,
            leroy_radius_m=1.0e-6,
        )
        operator = InteractionOperator(basis=basis, rho_max=3, coefficients={3: np.zeros((1, 1))})
        curves = solve_curves(basis, operator, np.array([4e-6]), a)
        assert frequency_spectrum(curves, 4e-6) == []
        with pytest.raises(ConfigError, match="beat"):
            dominant_frequency(curves, 4e-6)

    def test_admixture_matches_manual_sum(self, toy_curves):
        curves, r_grid = toy_curves
        bin_j = 0.5e6 * H_PLANCK
        epsilon = admixture_cut(curves, detuning_j=DELTA_J, bin_width_j=bin_j)
        for i in range(r_grid.size):
            inside = np.abs(curves.energies_j[i] - DELTA_J) < bin_j / 2.0
            manual = np.sum(np.sqrt(curves.overlaps[i][inside]))
            assert epsilon[i] == pytest.approx(manual, abs=1e-15)

    def test_admixture_far_field_perturbative(self, toy_curves):
        """Far out the upper curve sits at the cut energy and carries the
        perturbative admixture amplitude v / delta."""
        curves, r_grid = toy_curves
        epsilon = admixture_cut(curves, detuning_j=DELTA_J, bin_width_j=0.5e6 * H_PLANCK)
        perturbative = (C3_JM3 / r_grid[-1] ** 3) / DELTA_J
        assert epsilon[-1] == pytest.approx(perturbative, rel=0.1)

    def test_admixture_bin_validation(self, toy_curves):
        curves, _ = toy_curves
        with pytest.raises(ConfigError):
            admixture_cut(curves, detuning_j=DELTA_J, bin_width_j=0.0)


class TestValidationAndFailure:
    def test_grid_validation(self):
        basis, operator, probe = _toy_system()
        for bad in ([], [0.0], [-1e-6], [np.nan], [np.inf]):
            with pytest.raises(ConfigError):
                solve_curves(basis, operator, np.asarray(bad, dtype=float), probe)

    def test_foreign_operator_rejected(self, rb_small_system):
        basis, _ = rb_small_system
        _, toy_operator, probe = _toy_system()
        with pytest.raises(ConfigError):
            solve_curves(basis, toy_operator, np.array([5e-6]), probe)

    def test_probe_without_projection_rejected(self, rb_small_system, cache):
        basis, operator = rb_small_system
        outside = StateTwo(
            StateOne("Rb", 40, 0, half(1), half(1)), StateOne("Rb", 40, 0, half(1), half(1))
        )
        with pytest.raises(ConfigError, match="projection"):
            solve_curves(basis, operator, np.array([5e-6]), outside, cache=cache)

    def test_eigensolver_failure_marks_points_invalid(self):
        basis, _, probe = _toy_system()
        poisoned = InteractionOperator(
            basis=basis, rho_max=3,
            coefficients={3: np.array([[0.0, np.inf], [np.inf, 0.0]])},
        )
        r_grid = np.linspace(2e-6, 4e-6, 3)
        curves = solve_curves(basis, poisoned, r_grid, probe)
        assert not curves.valid.any()
        assert all(message is not None for message in curves.errors)
        assert np.isnan(curves.energies_j).all()
        epsilon = admixture_cut(curves, detuning_j=DELTA_J)
        assert np.isnan(epsilon).all()
        with pytest.raises(ConfigError):
            curves.point_index(3e-6)


class TestBlockDecomposition:
    def test_blocks_reproduce_full_spectrum(self, rb_small_system, cache):
        """Union of per-block eigenvalues equals the full-matrix spectrum."""
        basis, operator = rb_small_system
        assert len(basis) <= 200
        h0 = np.diag(basis.energies_j)
        blocks = _coupling_blocks(basis, operator, None)
        assert sum(block.size for block in blocks) == len(basis)
        for r_m in (3e-6, 6e-6):
            full = h0 + operator.hamiltonian_at(r_m)
            reference = np.linalg.eigvalsh(full)
            collected = np.concatenate([
                np.linalg.eigvalsh(full[np.ix_(block, block)]) for block in blocks
            ])
            scale = np.abs(reference).max()
            assert np.abs(np.sort(collected) - reference).max() <= 1e-10 * scale


class TestVanDerWaals:
    def test_rb60s_slope(self, registry, rb60s_pair, cache):
        """The far-field shift of an isolated pair state falls off as R^-6."""
        spec = BasisSpec(
            target=rb60s_pair, delta_n=3, delta_l=1, energy_window_ghz=25.0,
            m_values=[half(2)],
        )
        basis = build_pair_basis(registry.get("Rb"), spec, cache=cache)
        operator = build_interaction_operator(basis, cache=cache)
        r_um = np.linspace(3.0, 10.0, 15)
        curves = solve_curves(basis, operator, r_um * 1e-6, rb60s_pair, cache=cache)
        assert curves.valid.all()
        assert curves.reference_energy_j == pytest.approx(
            pair_energy_j(basis.models, rb60s_pair), abs=1e-30
        )
        column = int(np.argmax(curves.overlaps[-1]))
        assert curves.overlaps[-1, column] > 0.99
        shift = np.abs(curves.energies_j[:, column] - curves.reference_energy_j)
        slope = np.polyfit(np.log(r_um), np.log(shift), 1)[0]
        assert slope == pytest.approx(-6.0, abs=0.1)


class TestConvergence:
    def test_report_structure(self, registry, rb60s_pair, cache):
        spec = BasisSpec(
            target=rb60s_pair, delta_n=1, delta_l=1, energy_window_ghz=6.0,
            m_values=[half(2)],
        )
        curves, report = converge_basis(
            (registry.get("Rb"), registry.get("Rb")), spec,
            np.linspace(4e-6, 8e-6, 5), probe=rb60s_pair,
            tolerance_ghz=0.02, max_steps=3, cache=cache,
        )
        assert curves.valid.all()
        assert len(report.steps) >= 2
        assert report.steps[0].drift_ghz is None
        for previous, current in zip(report.steps, report.steps[1:]):
            assert current.spec.delta_n == previous.spec.delta_n + 1
            assert current.spec.delta_l == previous.spec.delta_l + 1
            assert current.spec.energy_window_ghz == pytest.approx(
                1.5 * previous.spec.energy_window_ghz
            )
            assert current.drift_ghz is not None
        assert report.final_spec == report.steps[-1].spec
        if report.converged:
            assert report.steps[-1].drift_ghz < report.tolerance_ghz

    def test_zero_tolerance_never_converges(self, registry, rb60s_pair, cache):
        spec = BasisSpec(
            target=rb60s_pair, delta_n=0, delta_l=1, energy_window_ghz=5.0,
            m_values=[half(2)],
        )
        _, report = converge_basis(
            (registry.get("Rb"), registry.get("Rb")), spec,
            np.linspace(5e-6, 7e-6, 3), probe=rb60s_pair,
            tolerance_ghz=0.0, max_steps=2, cache=cache,
        )
        assert not report.converged
        # the history holds the initial solve plus one entry per refinement
        assert len(report.steps) == 3
        assert all(step.drift_ghz is not None for step in report.steps[1:])
