"""Single-atom matrix elements and the two-level element cache."""

from __future__ import annotations

import math
import warnings

import pytest

from rydpair.angular import half
from rydpair.errors import ConfigError
from rydpair.operators import (
    ElementCache,
    MultipoleElementKey,
    momentum_element,
    multipole_element,
    open_cache,
    scalar_moment,
)
from rydpair.species import StateOne

from oracles import (
    HYDROGEN_1S_2P_RADIAL_A0,
    momentum_j_oracle,
    multipole_angular_oracle,
)

# grid tight enough for the n = 1 closed form (see test_radial)
_TIGHT = {"dx": 0.002, "r_min_a0": 1e-4}


def _h(n, l, j, mj):
    return StateOne("H", n, l, half(round(2 * j)), half(round(2 * mj)))


class TestMultipole:
    def test_1s_2p_dipole_all_components(self, hydrogen):
        """Signed dipole elements factor into the closed-form radial moment
        and the Wigner-Eckart angular oracle."""
        bra = _h(1, 0, 0.5, 0.5)
        for jp in (0.5, 1.5):
            for mjp in [x / 2.0 for x in range(-round(2 * jp), round(2 * jp) + 1, 2)]:
                q = round(0.5 - mjp)
                if abs(q) > 1:
                    continue
                ket = _h(2, 1, jp, mjp)
                value = multipole_element(hydrogen, bra, ket, 1, q, spin_orbit=False, **_TIGHT)
                expected = HYDROGEN_1S_2P_RADIAL_A0 * multipole_angular_oracle(
                    0, 0.5, 0.5, 1, q, 1, jp, mjp
                )
                assert value == pytest.approx(expected, rel=1e-8, abs=1e-12)

    def test_q_selection(self, rubidium):
        bra = StateOne("Rb", 60, 0, half(1), half(1))
        ket = StateOne("Rb", 60, 1, half(3), half(1))
        # bra.mj != ket.mj + q -> exact zero without radial work
        assert multipole_element(rubidium, bra, ket, 1, 1) == 0.0
        assert multipole_element(rubidium, bra, ket, 1, -1) == 0.0
        assert multipole_element(rubidium, bra, ket, 1, 0) != 0.0

    def test_parity_and_triangle_zeros(self, rubidium):
        s = StateOne("Rb", 60, 0, half(1), half(1))
        d = StateOne("Rb", 58, 2, half(3), half(1))
        # dipole cannot change l by two; quadrupole can
        assert multipole_element(rubidium, s, d, 1, 0) == 0.0
        assert multipole_element(rubidium, s, d, 2, 0) != 0.0
        # s -> s dipole violates parity
        s2 = StateOne("Rb", 61, 0, half(1), half(1))
        assert multipole_element(rubidium, s, s2, 1, 0) == 0.0

    def test_kappa_validation(self, rubidium):
        s = StateOne("Rb", 60, 0, half(1), half(1))
        with pytest.raises(ConfigError):
            multipole_element(rubidium, s, s, 0, 0)

    def test_species_mismatch(self, rubidium):
        s = StateOne("Rb", 60, 0, half(1), half(1))
        cs = StateOne("Cs", 60, 1, half(3), half(1))
        with pytest.raises(ConfigError):
            multipole_element(rubidium, s, cs, 1, 0)

    def test_wigner_eckart_proportionality(self, rubidium):
        """Within one fine-structure multiplet the ratio of the element to the
        oracle angular factor is a single reduced radial moment."""
        ratios = []
        for mj in (-0.5, 0.5):
            for mjp in (-1.5, -0.5, 0.5, 1.5):
                q = round(mj - mjp)
                if abs(q) > 1:
                    continue
                bra = StateOne("Rb", 60, 0, half(1), half(round(2 * mj)))
                ket = StateOne("Rb", 59, 1, half(3), half(round(2 * mjp)))
                value = multipole_element(rubidium, bra, ket, 1, q)
                angular = multipole_angular_oracle(0, 0.5, mj, 1, q, 1, 1.5, mjp)
                assert angular != 0.0
                ratios.append(value / angular)
        assert len(ratios) == 6
        for r in ratios[1:]:
            assert r == pytest.approx(ratios[0], rel=1e-12)


class TestScalarMoment:
    def test_diagonal_matches_radial_expectation(self, hydrogen):
        state = _h(5, 2, 2.5, 0.5)
        value = scalar_moment(hydrogen, state, state, 1, spin_orbit=False)
        assert value == pytest.approx(0.5 * (3 * 25 - 6), rel=1e-8)

    def test_off_diagonal_in_angular_numbers_vanishes(self, rubidium):
        a = StateOne("Rb", 60, 0, half(1), half(1))
        b = StateOne("Rb", 60, 1, half(3), half(1))
        assert scalar_moment(rubidium, a, b, 2) == 0.0

    def test_same_l_different_n_is_small_overlap(self, rubidium):
        a = StateOne("Rb", 60, 0, half(1), half(1))
        b = StateOne("Rb", 61, 0, half(1), half(1))
        overlap = scalar_moment(rubidium, a, b, 0)
        assert abs(overlap) < 0.05  # near-orthogonal radial functions


class TestMomentum:
    def test_stretched_state_l_and_s(self, rubidium):
        state = StateOne("Rb", 60, 1, half(3), half(3))
        lz = momentum_element(rubidium, state, "l", 0, state)
        sz = momentum_element(rubidium, state, "s", 0, state)
        assert lz == pytest.approx(1.0, rel=1e-10)
        assert sz == pytest.approx(0.5, rel=1e-10)

    def test_l_plus_s_equals_j_within_level(self, rubidium):
        """Spherical components of l + s reduce to the closed form for j."""
        for (l, j) in [(0, 0.5), (1, 1.5), (2, 2.5)]:
            for q in (-1, 0, 1):
                for tmj in range(-round(2 * j), round(2 * j) + 1, 2):
                    for tmjp in range(-round(2 * j), round(2 * j) + 1, 2):
                        if tmj - tmjp != 2 * q:
                            continue
                        bra = StateOne("Rb", 60, l, half(round(2 * j)), half(tmj))
                        ket = StateOne("Rb", 60, l, half(round(2 * j)), half(tmjp))
                        total = momentum_element(rubidium, bra, "l", q, ket) + momentum_element(
                            rubidium, bra, "s", q, ket
                        )
                        expected = momentum_j_oracle(j, tmj / 2.0, q, tmjp / 2.0)
                        assert total == pytest.approx(expected, abs=1e-10)

    def test_s_state_has_no_orbital_momentum(self, rubidium):
        state = StateOne("Rb", 60, 0, half(1), half(1))
        assert momentum_element(rubidium, state, "l", 0, state) == 0.0
        assert momentum_element(rubidium, state, "s", 0, state) == pytest.approx(0.5)

    def test_operator_name_validation(self, rubidium):
        state = StateOne("Rb", 60, 0, half(1), half(1))
        with pytest.raises(ConfigError):
            momentum_element(rubidium, state, "j", 0, state)


class TestCache:
    def test_memory_hit_and_symmetric_key(self, registry, rubidium):
        cache = open_cache(None, registry)
        bra = StateOne("Rb", 60, 0, half(1), half(1))
        ket = StateOne("Rb", 59, 1, half(3), half(1))
        first = multipole_element(rubidium, bra, ket, 1, 0, cache=cache)
        stats = cache.stats()
        assert stats["computes"] == 1 and stats["hits"] == 0
        again = multipole_element(rubidium, bra, ket, 1, 0, cache=cache)
        assert again == first
        # the key is canonical in the level pair, so the reversed element
        # reuses the same radial moment
        multipole_element(rubidium, ket, bra, 1, 0, cache=cache)
        stats = cache.stats()
        assert stats["computes"] == 1 and stats["hits"] == 2
        assert stats["memory_entries"] == 1
        assert stats["path"] is None

    def test_sqlite_persists_across_sessions(self, tmp_path, registry, rubidium):
        path = tmp_path / "elements.sqlite"
        bra = StateOne("Rb", 60, 0, half(1), half(1))
        ket = StateOne("Rb", 59, 1, half(3), half(1))

        cache = open_cache(path, registry)
        value = multipole_element(rubidium, bra, ket, 1, 0, cache=cache)
        assert cache.stats()["stored_current_version"] == 1
        cache.close()

        reopened = open_cache(path, registry)
        replay = multipole_element(rubidium, bra, ket, 1, 0, cache=reopened)
        stats = reopened.stats()
        assert replay == value
        assert stats["computes"] == 0 and stats["hits"] == 1
        reopened.close()

    def test_version_stamp_hides_other_grid_settings(self, tmp_path, registry, rubidium):
        path = tmp_path / "elements.sqlite"
        bra = StateOne("Rb", 60, 0, half(1), half(1))
        ket = StateOne("Rb", 59, 1, half(3), half(1))

        cache = open_cache(path, registry)
        multipole_element(rubidium, bra, ket, 1, 0, cache=cache)
        cache.close()

        finer = open_cache(path, registry, dx=0.005)
        multipole_element(rubidium, bra, ket, 1, 0, cache=finer, dx=0.005)
        stats = finer.stats()
        # the old row survives but is invisible to the new stamp
        assert stats["computes"] == 1
        assert stats["stored_current_version"] == 1
        assert stats["stored_total"] == 2
        finer.close()

    def test_grid_signature_mismatch_raises(self, tmp_path, registry, rubidium):
        cache = open_cache(tmp_path / "elements.sqlite", registry)
        bra = StateOne("Rb", 60, 0, half(1), half(1))
        ket = StateOne("Rb", 59, 1, half(3), half(1))
        with pytest.raises(ConfigError, match="grid settings"):
            multipole_element(rubidium, bra, ket, 1, 0, cache=cache, dx=0.005)
        cache.close()

    def test_corrupted_store_is_rebuilt_with_warning(self, tmp_path, registry, rubidium):
        path = tmp_path / "elements.sqlite"
        path.write_bytes(b"this is not a database")
        with pytest.warns(UserWarning, match="rebuilding"):
            cache = open_cache(path, registry)
        bra = StateOne("Rb", 60, 0, half(1), half(1))
        ket = StateOne("Rb", 59, 1, half(3), half(1))
        value = multipole_element(rubidium, bra, ket, 1, 0, cache=cache)
        assert value != 0.0
        assert cache.stats()["stored_current_version"] == 1
        cache.close()

    def test_clear_current_version_only(self, tmp_path, registry, rubidium):
        path = tmp_path / "elements.sqlite"
        bra = StateOne("Rb", 60, 0, half(1), half(1))
        ket = StateOne("Rb", 59, 1, half(3), half(1))

        coarse = open_cache(path, registry)
        multipole_element(rubidium, bra, ket, 1, 0, cache=coarse)
        coarse.close()
        fine = open_cache(path, registry, dx=0.005)
        multipole_element(rubidium, bra, ket, 1, 0, cache=fine, dx=0.005)
        removed = fine.clear()
        assert removed == 1
        stats = fine.stats()
        assert stats["stored_current_version"] == 0
        assert stats["stored_total"] == 1  # the other stamp's row survives
        fine.close()

        everything = open_cache(path, registry)
        assert everything.clear(all_versions=True) == 1
        assert everything.stats()["stored_total"] == 0
        everything.close()

    def test_key_canonical_order(self):
        a = StateOne("Rb", 60, 0, half(1), half(1))
        b = StateOne("Rb", 59, 1, half(3), half(1))
        assert MultipoleElementKey.for_states(a, b, 1, "numerov") == MultipoleElementKey.for_states(
            b, a, 1, "numerov"
        )

    def test_no_warning_on_clean_open(self, tmp_path, registry):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            cache = open_cache(tmp_path / "fresh.sqlite", registry)
            cache.close()
