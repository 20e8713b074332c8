"""Lab-to-calculation frame rotations for states, fields, and probe pairs."""

from __future__ import annotations

import math

import numpy as np
import pytest

from rydpair.angular import half
from rydpair.errors import ConfigError
from rydpair.fields import FieldConfig
from rydpair.geometry import (
    InteractionAngle,
    interaction_angle_from_axis,
    probe_state_in_calc_frame,
    rotate_config,
    rotate_field,
    rotate_state,
    rotation_matrix,
)
from rydpair.pair import BasisSpec, StateTwo, build_pair_basis
from rydpair.species import StateOne


class TestInteractionAngle:
    def test_validation(self):
        with pytest.raises(ConfigError):
            InteractionAngle(float("nan"))
        with pytest.raises(ConfigError):
            InteractionAngle(-0.1)
        with pytest.raises(ConfigError):
            InteractionAngle(math.pi + 0.1)

    def test_degree_round_trip(self):
        angle = InteractionAngle.from_degrees(14.0)
        assert angle.degrees == pytest.approx(14.0)
        assert angle.theta_rad == pytest.approx(math.radians(14.0))

    def test_from_axis(self):
        assert interaction_angle_from_axis((0, 0, 1)).theta_rad == 0.0
        assert interaction_angle_from_axis((1, 0, 0)).theta_rad == pytest.approx(math.pi / 2)
        assert interaction_angle_from_axis((1, 0, 1)).theta_rad == pytest.approx(math.pi / 4)
        assert interaction_angle_from_axis((0, 0, -1)).theta_rad == pytest.approx(math.pi)
        # the overall sign of the axis is unobservable
        assert interaction_angle_from_axis((-1, 0, -1)).theta_rad == pytest.approx(math.pi / 4)

    def test_from_axis_rejects_azimuthal(self):
        with pytest.raises(ConfigError, match="xz plane"):
            interaction_angle_from_axis((1.0, 0.5, 1.0))
        with pytest.raises(ConfigError):
            interaction_angle_from_axis((0.0, 0.0, 0.0))


class TestVectorRotation:
    def test_matrix_is_orthogonal(self):
        for theta in (0.0, 0.3, math.pi / 2, 2.5):
            rot = rotation_matrix(theta)
            assert np.allclose(rot @ rot.T, np.eye(3), atol=1e-15)

    def test_interatomic_axis_maps_to_z(self):
        """The defining convention: the interatomic axis (sin theta, 0,
        cos theta) becomes the calculation-frame quantization axis."""
        for theta in (0.0, 0.2, 1.0, math.pi / 2, 3.0):
            axis = np.array([math.sin(theta), 0.0, math.cos(theta)])
            assert np.allclose(rotation_matrix(theta) @ axis, [0.0, 0.0, 1.0], atol=1e-15)

    def test_rotate_field_matches_matrix(self, rng):
        for _ in range(20):
            vec = rng.normal(size=3)
            theta = rng.uniform(0.0, math.pi)
            assert np.allclose(rotate_field(vec, theta), rotation_matrix(theta) @ vec, atol=1e-14)

    def test_rotate_config(self):
        config = FieldConfig(efield_vm=(0.0, 0.0, 2.0), bfield_t=(1.0, 0.0, 0.0))
        rotated = rotate_config(config, math.pi / 2)
        assert np.allclose(rotated.efield_vm, (-2.0, 0.0, 0.0), atol=1e-15)
        assert np.allclose(rotated.bfield_t, (0.0, 0.0, 1.0), atol=1e-15)
        assert rotated.include_diamagnetic == config.include_diamagnetic


class TestRotateState:
    def test_identity_at_zero(self):
        state = StateOne("Rb", 60, 2, half(5), half(3))
        terms = rotate_state(state, 0.0)
        assert terms == [(state, 1.0)]

    def test_unit_norm(self):
        state = StateOne("Rb", 60, 2, half(5), half(3))
        for theta in (0.1, 0.7, 2.0):
            terms = rotate_state(state, theta)
            assert sum(c * c for _, c in terms) == pytest.approx(1.0, abs=1e-12)

    def test_spin_half_closed_form(self):
        up = StateOne("Rb", 60, 0, half(1), half(1))
        theta = 0.8
        expansion = dict((s.mj, c) for s, c in rotate_state(up, theta))
        assert expansion[half(1)] == pytest.approx(math.cos(theta / 2))
        assert expansion[half(-1)] == pytest.approx(-math.sin(theta / 2))

    def test_rows_are_orthogonal(self):
        """Different lab mj of one level map to orthogonal expansions."""
        theta = 0.6
        j = half(3)
        rows = []
        for tmj in (-3, -1, 1, 3):
            terms = rotate_state(StateOne("Rb", 60, 1, j, half(tmj)), theta)
            row = np.zeros(4)
            for s, c in terms:
                row[(s.mj.twice + 3) // 2] = c
            rows.append(row)
        assert np.allclose(np.asarray(rows) @ np.asarray(rows).T, np.eye(4), atol=1e-12)

    def test_requires_mj(self):
        with pytest.raises(ConfigError):
            rotate_state(StateOne("Rb", 60, 0, half(1)), 0.5)


@pytest.fixture(scope="module")
def rb60s_minimal_basis(registry, rb60s_pair, cache):
    """Only the 60s+60s manifold, all four mj products, all symmetry sectors."""
    spec = BasisSpec(target=rb60s_pair, delta_n=0, delta_l=0, energy_window_ghz=1.0)
    return build_pair_basis(registry.get("Rb"), spec, cache=cache)


class TestProbeProjection:
    def test_axial_probe_hits_single_state(self, rb60s_pair, rb60s_minimal_basis):
        vector = probe_state_in_calc_frame(rb60s_pair, 0.0, rb60s_minimal_basis)
        assert np.count_nonzero(vector) == 1
        assert np.abs(vector).max() == pytest.approx(1.0, abs=1e-12)
        hot = int(np.argmax(np.abs(vector)))
        state = rb60s_minimal_basis.states[hot]
        assert state.total_m == half(2)

    def test_norm_is_unity_when_basis_closed_under_rotation(self, rb60s_pair, rb60s_minimal_basis):
        assert len(rb60s_minimal_basis.product_states) == 4
        for theta in (0.0, 0.3, 1.1, math.pi / 2):
            vector = probe_state_in_calc_frame(rb60s_pair, theta, rb60s_minimal_basis)
            assert np.dot(vector, vector) == pytest.approx(1.0, abs=1e-12)

    def test_norm_leaks_out_of_truncated_m_block(self, registry, rb60s_pair, cache):
        spec = BasisSpec(
            target=rb60s_pair, delta_n=0, delta_l=0, energy_window_ghz=1.0,
            m_values=[half(2)],
        )
        basis = build_pair_basis(registry.get("Rb"), spec, cache=cache)
        axial = probe_state_in_calc_frame(rb60s_pair, 0.0, basis)
        tilted = probe_state_in_calc_frame(rb60s_pair, 0.5, basis)
        assert np.dot(axial, axial) == pytest.approx(1.0, abs=1e-12)
        assert np.dot(tilted, tilted) < 1.0

    def test_theta_pi_returns_probe_weight(self, rb60s_pair, rb60s_minimal_basis):
        """Rotating by pi maps mj -> -mj up to phase; the weight stays in the
        manifold and the M = -1 partner carries all of it."""
        vector = probe_state_in_calc_frame(rb60s_pair, math.pi, rb60s_minimal_basis)
        assert np.dot(vector, vector) == pytest.approx(1.0, abs=1e-12)
        hot = int(np.argmax(np.abs(vector)))
        assert rb60s_minimal_basis.states[hot].total_m == half(-2)
