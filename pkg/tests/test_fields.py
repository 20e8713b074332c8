"""Static-field operators: Stark, Zeeman, diamagnetic, and field maps."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.constants import physical_constants

from rydpair.angular import half
from rydpair.errors import ConfigError
from rydpair.fields import (
    FieldConfig,
    SingleAtomSystem,
    build_field_basis,
    cartesian_field_components,
    field_map,
    field_operator,
    spherical_field_components,
    stark_operator,
    zeeman_operator,
)
from rydpair.radial import radial_expectation
from rydpair.species import StateOne

MU_B_SI = physical_constants["Bohr magneton"][0]
E_SI = physical_constants["elementary charge"][0]
M_E_SI = physical_constants["electron mass"][0]
A0_SI = physical_constants["Bohr radius"][0]


def _lande_g(model, l, j):
    s = 0.5
    jj, ll, ss = j * (j + 1), l * (l + 1), s * (s + 1)
    return model.g_l * (jj + ll - ss) / (2 * jj) + model.g_s * (jj + ss - ll) / (2 * jj)


class TestSphericalComponents:
    def test_round_trip(self, rng):
        for _ in range(50):
            vec = rng.normal(size=3)
            back = cartesian_field_components(spherical_field_components(vec))
            assert np.allclose(np.asarray(back), vec, atol=1e-15)

    def test_axial_field(self):
        plus, minus, zero = spherical_field_components((0.0, 0.0, 2.5))
        assert plus == 0.0 and minus == 0.0 and zero == 2.5

    def test_transverse_field(self):
        plus, minus, zero = spherical_field_components((1.0, 0.0, 0.0))
        assert plus == pytest.approx(-1.0 / np.sqrt(2.0))
        assert minus == pytest.approx(1.0 / np.sqrt(2.0))
        assert zero == 0.0


class TestFieldConfig:
    def test_validation(self):
        with pytest.raises(ConfigError):
            FieldConfig(efield_vm=(1.0, 2.0))
        with pytest.raises(ConfigError):
            FieldConfig(bfield_t=(np.nan, 0.0, 0.0))

    def test_flags(self):
        assert FieldConfig().is_zero
        axial = FieldConfig(efield_vm=(0.0, 0.0, 1.0), bfield_t=(0.0, 0.0, 0.1))
        assert axial.is_axial and not axial.needs_complex
        tilted = FieldConfig(efield_vm=(1.0, 0.0, 0.0))
        assert not tilted.is_axial and not tilted.needs_complex
        rotated = FieldConfig(bfield_t=(0.0, 0.2, 0.0))
        assert rotated.needs_complex


@pytest.fixture(scope="module")
def rb_field_basis(rubidium):
    return build_field_basis(
        rubidium,
        StateOne("Rb", 60, 0, half(1)),
        delta_n=1,
        delta_l=1,
        energy_window_ghz=80.0,
    )


class TestStarkOperator:
    def test_hermitian_for_arbitrary_direction(self, rubidium, rb_field_basis, cache):
        matrix = stark_operator(rubidium, rb_field_basis, (1.0, 2.0, 3.0), cache=cache)
        assert matrix.dtype == np.complex128
        assert np.allclose(matrix, matrix.conj().T, atol=1e-30)

    def test_real_without_y_component(self, rubidium, rb_field_basis, cache):
        matrix = stark_operator(rubidium, rb_field_basis, (1.0, 0.0, 3.0), cache=cache)
        assert matrix.dtype == np.float64

    def test_zero_field_is_zero_matrix(self, rubidium, rb_field_basis, cache):
        matrix = stark_operator(rubidium, rb_field_basis, (0.0, 0.0, 0.0), cache=cache)
        assert not matrix.any()

    def test_spectra_are_direction_independent(self, rubidium, rb_field_basis, cache):
        """The basis is closed under rotations (every mj of every level), so
        the atom + field spectrum cannot depend on the field direction."""
        h0 = np.diag(
            [e for e in SingleAtomSystem(rubidium, rb_field_basis, cache=cache).level_energies_j()]
        )
        spectra = []
        for direction in [(0, 0, 1), (1, 0, 0), (0, 1, 0), (1, 1, 1) / np.sqrt(3)]:
            efield = 0.5 * np.asarray(direction, dtype=float)
            v = stark_operator(rubidium, rb_field_basis, efield, cache=cache)
            spectra.append(np.linalg.eigvalsh(h0 + v))
        scale = np.max(np.abs(spectra[0] - np.mean(spectra[0])))
        for other in spectra[1:]:
            assert np.max(np.abs(other - spectra[0])) < 1e-10 * scale

    def test_dipole_selection_rule(self, rubidium, cache):
        s = StateOne("Rb", 60, 0, half(1), half(1))
        d = StateOne("Rb", 58, 2, half(5), half(1))
        matrix = stark_operator(rubidium, [s, d], (0.0, 0.0, 10.0), cache=cache)
        assert matrix[0, 1] == 0.0 and matrix[1, 0] == 0.0


class TestZeemanOperator:
    def test_stretched_state_linear_shift(self, rubidium, cache):
        state = StateOne("Rb", 60, 1, half(3), half(3))
        b = 0.05
        matrix = zeeman_operator(rubidium, [state], (0.0, 0.0, b), include_diamagnetic=False, cache=cache)
        expected = MU_B_SI * b * (rubidium.g_l * 1.0 + rubidium.g_s * 0.5)
        assert matrix[0, 0] == pytest.approx(expected, rel=1e-8)

    def test_lande_interval_structure(self, rubidium, cache):
        """Within one fine-structure level the axial paramagnetic shifts are
        g_j mu_B B mj with the Lande factor built from the model's g_l, g_s."""
        b = 0.02
        for (l, j) in [(0, 0.5), (1, 0.5), (1, 1.5), (2, 2.5)]:
            basis = [
                StateOne("Rb", 60, l, half(round(2 * j)), half(t))
                for t in range(-round(2 * j), round(2 * j) + 1, 2)
            ]
            matrix = zeeman_operator(rubidium, basis, (0.0, 0.0, b), include_diamagnetic=False, cache=cache)
            g_j = _lande_g(rubidium, l, j)
            for k, state in enumerate(basis):
                assert matrix[k, k] == pytest.approx(g_j * MU_B_SI * b * float(state.mj), rel=1e-10)

    def test_diamagnetic_s_state_closed_form(self, rubidium, cache):
        """For an l = 0 state only the scalar part of the diamagnetic term
        survives: e^2 B^2 <r^2> / (12 m_e)."""
        state = StateOne("Rb", 60, 0, half(1), half(1))
        b = 0.1
        with_dia = zeeman_operator(rubidium, [state], (0.0, 0.0, b), include_diamagnetic=True, cache=cache)
        without = zeeman_operator(rubidium, [state], (0.0, 0.0, b), include_diamagnetic=False, cache=cache)
        r2 = radial_expectation(rubidium, state, 2)
        expected = E_SI**2 * b**2 * r2 * A0_SI**2 / (12.0 * M_E_SI)
        assert with_dia[0, 0] - without[0, 0] == pytest.approx(expected, rel=1e-8)

    def test_diamagnetic_term_is_positive_semidefinite(self, rubidium, rb_field_basis, cache):
        b = (0.3, 0.0, 0.4)
        with_dia = zeeman_operator(rubidium, rb_field_basis, b, include_diamagnetic=True, cache=cache)
        without = zeeman_operator(rubidium, rb_field_basis, b, include_diamagnetic=False, cache=cache)
        eigenvalues = np.linalg.eigvalsh(with_dia - without)
        assert eigenvalues.min() > -1e-12 * max(eigenvalues.max(), 1e-300)

    def test_spectra_are_direction_independent(self, rubidium, rb_field_basis, cache):
        system = SingleAtomSystem(rubidium, rb_field_basis, cache=cache)
        h0 = np.diag(system.level_energies_j())
        spectra = []
        for direction in [(0.0, 0.0, 1.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0)]:
            bfield = tuple(0.2 * c for c in direction)
            v = zeeman_operator(rubidium, rb_field_basis, bfield, cache=cache)
            spectra.append(np.linalg.eigvalsh(h0 + v.astype(np.complex128)))
        scale = np.max(np.abs(spectra[0] - np.mean(spectra[0])))
        for other in spectra[1:]:
            assert np.max(np.abs(other - spectra[0])) < 1e-10 * scale

    def test_combined_field_operator_adds_both(self, rubidium, rb_field_basis, cache):
        config = FieldConfig(efield_vm=(0.0, 0.0, 5.0), bfield_t=(0.0, 0.0, 0.1))
        total = field_operator(rubidium, rb_field_basis, config, cache=cache)
        stark = stark_operator(rubidium, rb_field_basis, config.efield_vm, cache=cache)
        zeeman = zeeman_operator(rubidium, rb_field_basis, config.bfield_t, cache=cache)
        assert np.allclose(total, stark + zeeman)


class TestBuildFieldBasis:
    def test_windows(self, rubidium):
        center = StateOne("Rb", 60, 2, half(3))
        basis = build_field_basis(rubidium, center, delta_n=1, delta_l=1)
        assert {s.n for s in basis} == {59, 60, 61}
        assert {s.l for s in basis} == {1, 2, 3}
        # every fine-structure partner and every mj is present
        for state in basis:
            assert abs(float(state.j) - state.l) == pytest.approx(0.5)
        p_states = [s for s in basis if s.n == 60 and s.l == 1]
        assert len(p_states) == 2 + 4  # j=1/2 and j=3/2 multiplets

    def test_mj_restriction(self, rubidium):
        center = StateOne("Rb", 60, 0, half(1))
        basis = build_field_basis(rubidium, center, delta_n=0, delta_l=1, mj_values=[0.5])
        assert all(s.mj == half(1) for s in basis)

    def test_energy_window_prunes(self, rubidium):
        center = StateOne("Rb", 60, 0, half(1))
        wide = build_field_basis(rubidium, center, delta_n=2, delta_l=2)
        narrow = build_field_basis(rubidium, center, delta_n=2, delta_l=2, energy_window_ghz=40.0)
        assert len(narrow) < len(wide)

    def test_validation(self, rubidium):
        center = StateOne("Rb", 60, 0, half(1))
        with pytest.raises(ConfigError):
            build_field_basis(rubidium, center, delta_n=-1)
        with pytest.raises(ConfigError):
            build_field_basis(rubidium, StateOne("Cs", 60, 0, half(1)))
        with pytest.raises(ConfigError):
            build_field_basis(rubidium, center, delta_n=0, delta_l=0, mj_values=[2.5])


class TestSingleAtomSystem:
    def test_validation(self, rubidium):
        good = StateOne("Rb", 60, 0, half(1), half(1))
        with pytest.raises(ConfigError):
            SingleAtomSystem(rubidium, ())
        with pytest.raises(ConfigError):
            SingleAtomSystem(rubidium, (good, good))
        with pytest.raises(ConfigError):
            SingleAtomSystem(rubidium, (StateOne("Rb", 60, 0, half(1)),))
        with pytest.raises(ConfigError):
            SingleAtomSystem(rubidium, (StateOne("Cs", 60, 0, half(1), half(1)),))

    def test_mj_blocks_partition_basis(self, rubidium, rb_field_basis, cache):
        system = SingleAtomSystem(rubidium, rb_field_basis, cache=cache)
        blocks = system.mj_block_indices()
        combined = np.sort(np.concatenate(blocks))
        assert np.array_equal(combined, np.arange(len(rb_field_basis)))
        for block in blocks:
            mjs = {rb_field_basis[i].mj for i in block}
            assert len(mjs) == 1


class TestFieldMap:
    def test_zero_field_reproduces_levels(self, rubidium, rb_field_basis, cache):
        system = SingleAtomSystem(rubidium, rb_field_basis, cache=cache)
        fmap = field_map(system, [0.0], which="electric")
        assert fmap.ok.all()
        assert np.allclose(fmap.energies_j[0], np.sort(system.level_energies_j()))
        assert np.allclose(fmap.overlaps[0], 1.0)

    def test_electric_scan_monotone_labels(self, rubidium, cache):
        basis = build_field_basis(rubidium, StateOne("Rb", 60, 0, half(1)),
                                  delta_n=1, delta_l=1, mj_values=[0.5])
        system = SingleAtomSystem(rubidium, basis, cache=cache)
        scan = np.linspace(0.0, 2.0, 5)
        fmap = field_map(system, scan, which="electric")
        assert fmap.ok.all()
        assert fmap.energies_j.shape == (5, len(basis))
        # rows are sorted and every label indexes the basis
        for row in fmap.energies_j:
            assert np.all(np.diff(row) >= 0.0)
        assert fmap.labels.min() >= 0 and fmap.labels.max() < len(basis)

    def test_magnetic_scan_slope_matches_lande(self, rubidium, cache):
        state = StateOne("Rb", 60, 1, half(3), half(3))
        system = SingleAtomSystem(
            rubidium, (state,), FieldConfig(include_diamagnetic=False), cache=cache
        )
        scan = np.linspace(0.0, 0.01, 3)
        fmap = field_map(system, scan, which="magnetic")
        slope = np.polyfit(scan, fmap.energies_j[:, 0], 1)[0]
        expected = _lande_g(rubidium, 1, 1.5) * MU_B_SI * 1.5
        assert slope == pytest.approx(expected, rel=1e-8)

    def test_transverse_directions_agree(self, rubidium, rb_field_basis, cache):
        system = SingleAtomSystem(rubidium, rb_field_basis, cache=cache)
        scan = [0.0, 1.0, 2.0]
        along_x = field_map(system, scan, direction="x", which="electric")
        along_y = field_map(system, scan, direction="y", which="electric")
        along_z = field_map(system, scan, direction="z", which="electric")
        assert np.allclose(along_x.energies_j, along_y.energies_j, atol=1e-38)
        assert np.allclose(along_x.energies_j, along_z.energies_j, atol=1e-38)

    def test_validation(self, rubidium, cache):
        state = StateOne("Rb", 60, 0, half(1), half(1))
        system = SingleAtomSystem(rubidium, (state,), cache=cache)
        with pytest.raises(ConfigError):
            field_map(system, [0.0], which="gravitational")
        with pytest.raises(ConfigError):
            field_map(system, [], which="electric")
        with pytest.raises(ConfigError):
            field_map(system, [np.inf], which="electric")
        with pytest.raises(ConfigError):
            field_map(system, [0.0], direction="q", which="electric")
        with pytest.raises(ConfigError):
            field_map(system, [0.0], direction=(0.0, 0.0, 0.0), which="electric")
