"""Two-atom basis construction, multipole interaction, and pair Hamiltonians.

The interaction between two Rydberg atoms at distance R along the z axis of
the calculation frame is a multipole series

    H_int(R) = sum_{kappa1, kappa2} V_{kappa1 kappa2} / (4 pi eps0 R^(kappa1+kappa2+1))

with

    V_{k1 k2} = (-1)^k2 sum_{q=-k<}^{k<} sqrt(binom(k1+k2, k1+q) binom(k1+k2, k2+q))
                p_{k1 q}^(1) p_{k2 -q}^(2) ,

k< = min(k1, k2), starting at dipole-dipole order rho = k1+k2+1 = 3.  The
basis is the set of two-atom product states within configurable windows in
n, l, and pair energy around a target pair state, optionally adapted to the
symmetries of the field-free Hamiltonian:

    inversion   (homonuclear):          |12> - p (-1)^(l1+l2) |21>
    reflection  (only within M = 0):    |m1; m2> + d (-1)^(l1+l2+mj1+mj2-j1-j2) |-m1; -m2>
    permutation (homonuclear, rho = 3): |12> - f |21>

with p = +1 for gerade, d = +1 for even, f = +1 for symmetric states, and
P = (-1)^(l1+l2) conserved when inversion and permutation hold together.
Symmetry-adapted states are built orbit by orbit with Gram orthonormalization,
so self-symmetric edge cases (|a;a>, or reflection partners that coincide)
come out normalized without double counting.

The total Hamiltonian follows

    H(R) = H_0 + H_int(R) + V_e x 1 + 1 x V_e + V_m x 1 + 1 x V_m

with the external fields rotated from the lab frame into the calculation
frame.  Distances at or below the Le Roy radius are flagged, not rejected.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .angular import HalfInteger, half
from .constants import A_0, COULOMB_FACTOR, joule_to_ghz
from .errors import ConfigError
from .fields import FieldConfig, field_operator
from .geometry import rotate_config
from .operators import ElementCache, multipole_element, multipole_selection_allowed
from .radial import DEFAULT_DX, radial_expectation
from .species import SpeciesModel, StateOne, state_energy

_GRAM_TOLERANCE = 1e-12


def _tag_value(tag, name: str):
    if tag is None:
        return None
    if tag in (+1, -1):
        return int(tag)
    raise ConfigError(f"symmetry tag {name} must be +1, -1 or None, got {tag!r}")


@dataclass(frozen=True)
class StateTwo:
    """A two-atom state: a pair of StateOne, possibly of different species.

    The optional tags mark symmetry-adapted combinations built from this
    representative product state: inversion parity p (gerade/ungerade),
    reflection parity d (even/odd), permutation parity f (symmetric/
    antisymmetric).
    """

    state1: StateOne
    state2: StateOne
    p: int | None = None
    d: int | None = None
    f: int | None = None

    def __post_init__(self) -> None:
        for state in (self.state1, self.state2):
            if state.mj is None:
                raise ConfigError(f"pair states need mj on both constituents, {state} has none")
        object.__setattr__(self, "p", _tag_value(self.p, "p"))
        object.__setattr__(self, "d", _tag_value(self.d, "d"))
        object.__setattr__(self, "f", _tag_value(self.f, "f"))

    @property
    def total_m(self) -> HalfInteger:
        return self.state1.mj + self.state2.mj

    @property
    def parity(self) -> int:
        """P = (-1)^(l1+l2)."""
        return -1 if (self.state1.l + self.state2.l) % 2 else 1

    @property
    def homonuclear(self) -> bool:
        return self.state1.species == self.state2.species

    @property
    def swapped(self) -> "StateTwo":
        return StateTwo(self.state2, self.state1)

    @property
    def reflected(self) -> "StateTwo":
        return StateTwo(self.state1.with_mj(-self.state1.mj), self.state2.with_mj(-self.state2.mj))

    @property
    def untagged(self) -> "StateTwo":
        if self.p is None and self.d is None and self.f is None:
            return self
        return StateTwo(self.state1, self.state2)

    @property
    def sort_key(self):
        return self.state1.sort_key + self.state2.sort_key

    @property
    def sector(self) -> tuple[int | None, int | None, int | None]:
        return (self.p, self.d, self.f)

    def tagged(self, p=None, d=None, f=None) -> "StateTwo":
        return StateTwo(self.state1, self.state2, p=p, d=d, f=f)

    def __str__(self) -> str:
        tags = "".join(
            f" {name}={value:+d}" for name, value in zip("pdf", self.sector) if value is not None
        )
        return f"{self.state1}; {self.state2}{tags}"


def pair_energy_j(models: tuple[SpeciesModel, SpeciesModel], pair: StateTwo) -> float:
    """Unperturbed pair energy E1 + E2 in joules."""
    return state_energy(models[0], pair.state1).joules + state_energy(models[1], pair.state2).joules


def _models_for(models, pair: StateTwo) -> tuple[SpeciesModel, SpeciesModel]:
    if isinstance(models, SpeciesModel):
        models = (models, models)
    first, second = models
    if first.name != pair.state1.species or second.name != pair.state2.species:
        raise ConfigError(
            f"model pair ({first.name}, {second.name}) does not match state pair "
            f"({pair.state1.species}, {pair.state2.species})"
        )
    return (first, second)


def pair_leroy_radius_m(
    models,
    pair: StateTwo,
    cache: ElementCache | None = None,
    method: str = "numerov",
    dx: float = DEFAULT_DX,
    r_min_a0: float | None = None,
    spin_orbit: bool = True,
) -> float:
    """Le Roy radius 2 (sqrt<r1^2> + sqrt<r2^2>) in meters.

    Below this distance the electron clouds overlap appreciably and the
    multipole expansion loses validity.
    """
    first, second = _models_for(models, pair)
    kwargs = dict(method=method, dx=dx, r_min_a0=r_min_a0, spin_orbit=spin_orbit)
    r2_1 = radial_expectation(first, pair.state1.without_mj(), 2, **kwargs)
    r2_2 = radial_expectation(second, pair.state2.without_mj(), 2, **kwargs)
    return 2.0 * (math.sqrt(r2_1) + math.sqrt(r2_2)) * A_0


@dataclass(frozen=True)
class BasisSpec:
    """Windows and symmetry choices for a pair basis around a target state.

    Windows are per atom slot: levels within `delta_n` of the slot's target
    n and `delta_l` of its target l (for a homonuclear pair the union of the
    two slot windows is used for both atoms so the basis closes under
    exchange).  Product states outside `energy_window_ghz` (h x GHz) of the
    target pair energy are dropped.  `rho_max` is the highest interaction
    order kappa1 + kappa2 + 1 to keep; the series starts at 3.

    The symmetry flags default to automatic choices: inversion on for
    homonuclear pairs, reflection on when the target has M = 0, permutation
    tags derived alongside inversion only at pure dipole-dipole order.
    `m_values` optionally restricts the basis to given total M (useful with
    axial geometry where M is conserved).
    """

    target: StateTwo
    delta_n: int = 3
    delta_l: int = 3
    energy_window_ghz: float = 30.0
    rho_max: int = 3
    m_values: tuple | None = None
    use_inversion: bool | None = None
    use_reflection: bool | None = None
    use_permutation: bool | None = None

    def __post_init__(self) -> None:
        if self.delta_n < 0 or self.delta_l < 0:
            raise ConfigError(f"windows must be non-negative, got delta_n={self.delta_n}, delta_l={self.delta_l}")
        if not self.energy_window_ghz > 0:
            raise ConfigError(f"energy window must be positive, got {self.energy_window_ghz}")
        if self.rho_max < 3:
            raise ConfigError(f"the multipole series starts at rho = 3, got rho_max={self.rho_max}")
        if self.m_values is not None:
            object.__setattr__(
                self, "m_values", tuple(sorted({HalfInteger(m) for m in self.m_values}, key=float))
            )
        homonuclear = self.target.homonuclear
        if self.use_inversion and not homonuclear:
            raise ConfigError("inversion (g/u) symmetry needs a homonuclear pair")
        if self.use_permutation and not homonuclear:
            raise ConfigError("permutation (s/a) symmetry needs a homonuclear pair")
        if self.use_reflection and self.target.total_m != HalfInteger(0):
            raise ConfigError(
                "reflection (+/-) symmetrization is only possible for total M = 0; "
                f"the target has M = {float(self.target.total_m):g}"
            )

    @property
    def inversion_on(self) -> bool:
        if self.use_inversion is None:
            return self.target.homonuclear
        return bool(self.use_inversion)

    @property
    def reflection_on(self) -> bool:
        if self.use_reflection is None:
            return self.target.total_m == HalfInteger(0)
        return bool(self.use_reflection)

    @property
    def permutation_on(self) -> bool:
        if self.use_permutation is None:
            return self.target.homonuclear and self.rho_max == 3
        return bool(self.use_permutation)


def _sector_order(tag: int | None) -> int:
    return {None: 0, +1: 1, -1: 2}[tag]


def _state_order_key(state: StateTwo, energy: float):
    return (
        tuple(_sector_order(tag) for tag in state.sector),
        float(state.total_m),
        energy,
        state.sort_key,
    )


def _reflection_phase(state: StateTwo) -> int:
    """(-1)^(l1+l2+mj1+mj2-j1-j2) of the reflection through the xz plane."""
    exponent = (
        state.state1.l + state.state2.l
        + int(state.state1.mj + state.state2.mj - state.state1.j - state.state2.j)
    )
    return -1 if exponent % 2 else 1


def _slot_levels(model: SpeciesModel, center: StateOne, delta_n: int, delta_l: int):
    levels = []
    for n in range(max(1, center.n - delta_n), center.n + delta_n + 1):
        for l in range(max(0, center.l - delta_l), min(n - 1, center.l + delta_l) + 1):
            for twice_j in (2 * l - 1, 2 * l + 1):
                if twice_j < 1:
                    continue
                levels.append((model.name, n, l, half(twice_j)))
    return levels


@dataclass
class PairBasis:
    """An ordered two-atom basis with its symmetrization transform.

    `product_states` is the underlying product basis; `states` the basis
    actually used (symmetry-adapted when requested, equal to the product
    basis otherwise), column k of `transform` holding the product-basis
    coefficients of state k.  `energies_j` are unperturbed pair energies,
    well defined per symmetrized state because symmetry orbits are
    iso-energetic.
    """

    spec: BasisSpec
    models: tuple[SpeciesModel, SpeciesModel]
    product_states: tuple[StateTwo, ...]
    states: tuple[StateTwo, ...]
    transform: np.ndarray
    energies_j: np.ndarray
    target_energy_j: float
    leroy_radius_m: float

    def __len__(self) -> int:
        return len(self.states)

    @property
    def homonuclear(self) -> bool:
        return self.spec.target.homonuclear

    def index_of_product(self, pair: StateTwo) -> int | None:
        if not hasattr(self, "_product_index"):
            self._product_index = {state: i for i, state in enumerate(self.product_states)}
        return self._product_index.get(pair.untagged)

    def blocks(self) -> list[tuple[tuple, slice]]:
        """Contiguous runs of equal (sector, M); the natural solve blocks."""
        runs: list[tuple[tuple, slice]] = []
        start = 0
        for index in range(1, len(self.states) + 1):
            def key(k):
                return (self.states[k].sector, self.states[k].total_m)
            if index == len(self.states) or key(index) != key(start):
                runs.append((key(start), slice(start, index)))
                start = index
        return runs

    def dump(self) -> str:
        """JSON description of the basis for reproducibility records."""
        def state_entry(single: StateOne):
            return {
                "species": single.species, "n": single.n, "l": single.l,
                "j": float(single.j), "mj": float(single.mj),
            }

        entries = []
        for index, (state, energy) in enumerate(zip(self.states, self.energies_j)):
            entries.append({
                "index": index,
                "atom1": state_entry(state.state1),
                "atom2": state_entry(state.state2),
                "p": state.p, "d": state.d, "f": state.f,
                "M": float(state.total_m),
                "energy_GHz": joule_to_ghz(energy),
                "detuning_GHz": joule_to_ghz(energy - self.target_energy_j),
            })
        payload = {
            "target": str(self.spec.target),
            "size": len(self.states),
            "product_size": len(self.product_states),
            "delta_n": self.spec.delta_n,
            "delta_l": self.spec.delta_l,
            "energy_window_GHz": self.spec.energy_window_ghz,
            "rho_max": self.spec.rho_max,
            "symmetrized": {
                "inversion": self.spec.inversion_on,
                "reflection": self.spec.reflection_on,
                "permutation": self.spec.permutation_on,
            },
            "leroy_radius_um": self.leroy_radius_m * 1e6,
            "states": entries,
        }
        return json.dumps(payload, indent=2)


def _symmetrize(
    product_states: Sequence[StateTwo],
    energies: np.ndarray,
    inversion: bool,
    reflection: bool,
    permutation: bool,
) -> tuple[list[StateTwo], np.ndarray, np.ndarray]:
    """Resolve the product basis into symmetry sectors, orbit by orbit.

    Returns (tagged states, transform columns, energies).  Each orbit of the
    enabled operations is projected onto every sector combination and the
    projections are Gram orthonormalized, which handles self-symmetric
    members (zero or unit-norm projections) without double counting.
    """
    index_of = {state: k for k, state in enumerate(product_states)}
    n_product = len(product_states)

    # Each operation maps a product index to (partner index, phase); the
    # identity-phase convention follows the symmetrized combinations in the
    # module docstring, so sector value s keeps (1 + s * op)/2-projections.
    operations: list[tuple[str, dict[int, tuple[int, float]]]] = []

    def exchange_map(sign_from_parity: bool) -> dict[int, tuple[int, float]]:
        mapping = {}
        for k, state in enumerate(product_states):
            partner = index_of.get(state.swapped)
            if partner is None:
                raise ConfigError(
                    f"basis is not closed under exchange: {state.swapped} missing; "
                    "homonuclear windows must be built from the union of both slots"
                )
            phase = -float(state.parity) if sign_from_parity else -1.0
            mapping[k] = (partner, phase)
        return mapping

    if inversion:
        operations.append(("p", exchange_map(sign_from_parity=True)))
    elif permutation:
        operations.append(("f", exchange_map(sign_from_parity=False)))
    if reflection:
        mapping = {}
        for k, state in enumerate(product_states):
            if state.total_m != HalfInteger(0):
                continue
            partner = index_of.get(state.reflected)
            if partner is None:
                raise ConfigError(f"basis is not closed under reflection: {state.reflected} missing")
            mapping[k] = (partner, float(_reflection_phase(state)))
        operations.append(("d", mapping))

    if not operations:
        return list(product_states), np.eye(n_product), np.asarray(energies, dtype=float)

    # Orbits: connected components under all operation maps.
    seen = np.zeros(n_product, dtype=bool)
    orbits: list[list[int]] = []
    for k in range(n_product):
        if seen[k]:
            continue
        orbit = []
        stack = [k]
        seen[k] = True
        while stack:
            current = stack.pop()
            orbit.append(current)
            for _, mapping in operations:
                entry = mapping.get(current)
                if entry is not None and not seen[entry[0]]:
                    seen[entry[0]] = True
                    stack.append(entry[0])
        orbits.append(sorted(orbit))

    states: list[StateTwo] = []
    columns: list[np.ndarray] = []
    out_energies: list[float] = []

    for orbit in orbits:
        active = [(name, mapping) for name, mapping in operations if orbit[0] in mapping]
        combos = [()]
        for _ in active:
            combos = [prior + (value,) for prior in combos for value in (+1, -1)]
        kept_in_orbit = 0
        for combo in combos:
            basis_vectors: list[np.ndarray] = []
            for member in orbit:
                vector = np.zeros(n_product)
                vector[member] = 1.0
                # apply the sector projectors (1 + sector * op)/2 in turn
                for (_, mapping), sector in zip(active, combo):
                    projected = np.zeros(n_product)
                    for idx in np.nonzero(vector)[0]:
                        amplitude = vector[idx]
                        projected[idx] += amplitude / 2.0
                        partner, op_phase = mapping[int(idx)]
                        projected[partner] += sector * op_phase * amplitude / 2.0
                    vector = projected
                # Gram step against vectors already kept for this sector
                for kept in basis_vectors:
                    vector = vector - kept * float(kept @ vector)
                norm = float(np.linalg.norm(vector))
                if norm * norm > _GRAM_TOLERANCE:
                    vector = vector / norm
                    leading = np.nonzero(np.abs(vector) > 1e-12)[0][0]
                    if vector[leading] < 0:
                        vector = -vector
                    basis_vectors.append(vector)
            for vector in basis_vectors:
                representative_index = int(np.nonzero(np.abs(vector) > 1e-12)[0][0])
                representative = product_states[representative_index]
                tags = {}
                for (name, _), sector in zip(active, combo):
                    tags[name] = sector
                state = representative.tagged(
                    p=tags.get("p"), d=tags.get("d"), f=tags.get("f")
                )
                states.append(state)
                columns.append(vector)
                out_energies.append(float(energies[representative_index]))
                kept_in_orbit += 1
        if kept_in_orbit != len(orbit):
            raise ConfigError(
                f"symmetrization lost rank on orbit {[str(product_states[k]) for k in orbit]}"
            )

    transform = np.column_stack(columns) if columns else np.zeros((n_product, 0))
    return states, transform, np.asarray(out_energies, dtype=float)


def build_pair_basis(
    models,
    spec: BasisSpec,
    cache: ElementCache | None = None,
    method: str = "numerov",
    dx: float = DEFAULT_DX,
    r_min_a0: float | None = None,
    spin_orbit: bool = True,
) -> PairBasis:
    """Construct the pair basis for `spec`; see :class:`BasisSpec`.

    `models` is a single SpeciesModel (homonuclear) or a pair of them.
    States are ordered by (symmetry sector, total M, pair energy) so
    conserved-quantum-number blocks are contiguous.
    """
    first, second = _models_for(models, spec.target)
    target = spec.target

    levels1 = _slot_levels(first, target.state1, spec.delta_n, spec.delta_l)
    levels2 = _slot_levels(second, target.state2, spec.delta_n, spec.delta_l)
    if target.homonuclear:
        union = sorted(set(levels1) | set(levels2))
        levels1 = levels2 = union

    def level_energies(model: SpeciesModel, levels) -> np.ndarray:
        return np.array([
            state_energy(model, StateOne(*level)).joules for level in levels
        ])

    energies1 = level_energies(first, levels1)
    energies2 = level_energies(second, levels2)
    target_energy = pair_energy_j((first, second), target)
    window_j = spec.energy_window_ghz / joule_to_ghz(1.0)

    pair_detuning = energies1[:, None] + energies2[None, :] - target_energy
    keep1, keep2 = np.nonzero(np.abs(pair_detuning) <= window_j)

    wanted_m = None if spec.m_values is None else set(spec.m_values)
    product_states: list[StateTwo] = []
    product_energies: list[float] = []
    for i, k in zip(keep1.tolist(), keep2.tolist()):
        species1, n1, l1, j1 = levels1[i]
        species2, n2, l2, j2 = levels2[k]
        energy = float(energies1[i] + energies2[k])
        mj1 = -j1
        while mj1 <= j1:
            mj2 = -j2
            while mj2 <= j2:
                if wanted_m is None or (mj1 + mj2) in wanted_m:
                    product_states.append(StateTwo(
                        StateOne(species1, n1, l1, j1, mj1),
                        StateOne(species2, n2, l2, j2, mj2),
                    ))
                    product_energies.append(energy)
                mj2 = mj2 + HalfInteger(1)
            mj1 = mj1 + HalfInteger(1)

    if not product_states:
        raise ConfigError(
            "pair basis is empty: no product states inside the energy window; "
            "widen the windows or check the target"
        )

    order = sorted(range(len(product_states)), key=lambda k: product_states[k].sort_key)
    product_states = [product_states[k] for k in order]
    product_energies = [product_energies[k] for k in order]

    states, transform, energies = _symmetrize(
        product_states,
        np.asarray(product_energies),
        inversion=spec.inversion_on,
        reflection=spec.reflection_on,
        permutation=spec.permutation_on and not spec.inversion_on,
    )
    if spec.inversion_on and spec.permutation_on:
        states = [state.tagged(p=state.p, d=state.d, f=state.p * state.parity) for state in states]

    final_order = sorted(
        range(len(states)),
        key=lambda k: _state_order_key(states[k], energies[k]),
    )
    states = [states[k] for k in final_order]
    transform = transform[:, final_order]
    energies = energies[final_order]

    leroy = pair_leroy_radius_m(
        (first, second), target, cache=cache, method=method, dx=dx,
        r_min_a0=r_min_a0, spin_orbit=spin_orbit,
    )
    return PairBasis(
        spec=spec,
        models=(first, second),
        product_states=tuple(product_states),
        states=tuple(states),
        transform=transform,
        energies_j=energies,
        target_energy_j=target_energy,
        leroy_radius_m=leroy,
    )


def interaction_orders(rho_max: int) -> list[tuple[int, int]]:
    """(kappa1, kappa2) pairs with kappa1 + kappa2 + 1 <= rho_max."""
    orders = []
    for kappa1 in range(1, rho_max - 1):
        for kappa2 in range(1, rho_max - kappa1):
            orders.append((kappa1, kappa2))
    return orders


def multipole_coupling(
    models,
    bra: StateTwo,
    ket: StateTwo,
    kappa1: int,
    kappa2: int,
    cache: ElementCache | None = None,
    method: str = "numerov",
    dx: float = DEFAULT_DX,
    r_min_a0: float | None = None,
    spin_orbit: bool = True,
) -> float:
    """V_{kappa1 kappa2} between two product states, in e^2 a_0^(kappa1+kappa2).

    The q sum couples only states with equal total M.
    """
    first, second = _models_for(models, bra)
    _models_for(models, ket)
    kwargs = dict(cache=cache, method=method, dx=dx, r_min_a0=r_min_a0, spin_orbit=spin_orbit)
    order = kappa1 + kappa2
    kappa_min = min(kappa1, kappa2)
    total = 0.0
    for q in range(-kappa_min, kappa_min + 1):
        element1 = multipole_element(first, bra.state1, ket.state1, kappa1, q, **kwargs)
        if element1 == 0.0:
            continue
        element2 = multipole_element(second, bra.state2, ket.state2, kappa2, -q, **kwargs)
        if element2 == 0.0:
            continue
        weight = math.sqrt(math.comb(order, kappa1 + q) * math.comb(order, kappa2 + q))
        total += weight * element1 * element2
    if kappa2 % 2:
        total = -total
    return total


@dataclass
class InteractionOperator:
    """Multipole coefficient matrices over a pair basis, grouped by order.

    `coefficients[rho]` sums every C_{kappa1 kappa2} with kappa1+kappa2+1 =
    rho, in joules x meter^rho: H_int(R) = sum_rho coefficients[rho] / R^rho
    with R in meters (the 1/(4 pi eps0) and the atomic-unit dipole factors
    are already absorbed).

    Each order matrix carries its exact block structure: entries between
    different total M, inversion (p) or reflection (d) sectors are zero by
    construction, and entries between permutation (f) sectors are zero for
    the orders that conserve permutation symmetry (kappa1 + kappa2 even).
    The dense sum would leave O(1e-16) summation residue in these provably
    zero entries, so they are never materialized.
    """

    basis: PairBasis
    rho_max: int
    coefficients: dict[int, np.ndarray]

    def hamiltonian_at(self, r_m: float) -> np.ndarray:
        if not r_m > 0:
            raise ConfigError(f"interatomic distance must be positive, got {r_m}")
        total = np.zeros((len(self.basis), len(self.basis)))
        for rho, matrix in self.coefficients.items():
            total = total + matrix / r_m**rho
        return total


def _unique_singles(product_states: Sequence[StateTwo], slot: int) -> tuple[list[StateOne], np.ndarray]:
    states = [pair.state1 if slot == 0 else pair.state2 for pair in product_states]
    unique = sorted(set(states), key=lambda s: s.sort_key)
    index_of = {state: k for k, state in enumerate(unique)}
    gather = np.array([index_of[state] for state in states])
    return unique, gather


def _single_multipole_matrix(
    model: SpeciesModel,
    singles: Sequence[StateOne],
    kappa: int,
    q: int,
    element_kwargs: dict,
) -> np.ndarray:
    matrix = np.zeros((len(singles), len(singles)))
    for i, bra in enumerate(singles):
        for k, ket in enumerate(singles):
            if not multipole_selection_allowed(bra, ket, kappa, q):
                continue
            matrix[i, k] = multipole_element(model, bra, ket, kappa, q, **element_kwargs)
    return matrix


def _conserved_block_mask(basis: PairBasis, include_f: bool) -> np.ndarray:
    """Boolean matrix: True where a symmetry-respecting operator may couple.

    Total M, inversion parity p and reflection parity d are compared always,
    permutation parity f only when `include_f`.
    """
    def key(state: StateTwo):
        return (state.total_m, state.p, state.d, state.f if include_f else None)

    keys = [key(state) for state in basis.states]
    mask = np.empty((len(keys), len(keys)), dtype=bool)
    for i, key_i in enumerate(keys):
        mask[i] = [key_i == key_k for key_k in keys]
    return mask


def _product_coefficient_matrix(
    basis: PairBasis,
    kappa1: int,
    kappa2: int,
    single_matrix,
    mesh1,
    mesh2,
) -> np.ndarray:
    order = kappa1 + kappa2
    kappa_min = min(kappa1, kappa2)
    coefficient = np.zeros((len(basis.product_states),) * 2)
    for q in range(-kappa_min, kappa_min + 1):
        weight = math.sqrt(math.comb(order, kappa1 + q) * math.comb(order, kappa2 + q))
        coefficient += weight * single_matrix(0, kappa1, q)[mesh1] * single_matrix(1, kappa2, -q)[mesh2]
    if kappa2 % 2:
        coefficient = -coefficient
    return coefficient * (COULOMB_FACTOR * A_0**order)


def _single_matrix_builder(basis: PairBasis, element_kwargs: dict):
    first, second = basis.models
    singles1, gather1 = _unique_singles(basis.product_states, 0)
    singles2, gather2 = _unique_singles(basis.product_states, 1)
    mesh1 = np.ix_(gather1, gather1)
    mesh2 = np.ix_(gather2, gather2)
    cached: dict[tuple[int, int, int], np.ndarray] = {}

    def single_matrix(slot: int, kappa: int, q: int) -> np.ndarray:
        key = (slot, kappa, q)
        if key not in cached:
            model, singles = (first, singles1) if slot == 0 else (second, singles2)
            cached[key] = _single_multipole_matrix(model, singles, kappa, q, element_kwargs)
        return cached[key]

    return single_matrix, mesh1, mesh2


def interaction_coefficient_matrix(
    basis: PairBasis,
    kappa1: int,
    kappa2: int,
    cache: ElementCache | None = None,
    method: str = "numerov",
    dx: float = DEFAULT_DX,
    r_min_a0: float | None = None,
    spin_orbit: bool = True,
) -> np.ndarray:
    """Single C_{kappa1 kappa2} in the (symmetrized) basis, without masking.

    Mostly for inspection and identity checks; assembly sums the orders via
    :func:`build_interaction_operator`.
    """
    element_kwargs = dict(cache=cache, method=method, dx=dx, r_min_a0=r_min_a0, spin_orbit=spin_orbit)
    single_matrix, mesh1, mesh2 = _single_matrix_builder(basis, element_kwargs)
    product = _product_coefficient_matrix(basis, kappa1, kappa2, single_matrix, mesh1, mesh2)
    return basis.transform.T @ product @ basis.transform


def build_interaction_operator(
    basis: PairBasis,
    cache: ElementCache | None = None,
    method: str = "numerov",
    dx: float = DEFAULT_DX,
    r_min_a0: float | None = None,
    spin_orbit: bool = True,
) -> InteractionOperator:
    """Assemble the per-order interaction matrices up to the basis rho_max."""
    element_kwargs = dict(cache=cache, method=method, dx=dx, r_min_a0=r_min_a0, spin_orbit=spin_orbit)
    single_matrix, mesh1, mesh2 = _single_matrix_builder(basis, element_kwargs)

    by_rho: dict[int, np.ndarray] = {}
    for kappa1, kappa2 in interaction_orders(basis.spec.rho_max):
        rho = kappa1 + kappa2 + 1
        product = _product_coefficient_matrix(basis, kappa1, kappa2, single_matrix, mesh1, mesh2)
        if rho in by_rho:
            by_rho[rho] += product
        else:
            by_rho[rho] = product

    coefficients: dict[int, np.ndarray] = {}
    for rho, product in sorted(by_rho.items()):
        # kappa1 + kappa2 = rho - 1 even <=> this order commutes with permutation
        mask = _conserved_block_mask(basis, include_f=(rho - 1) % 2 == 0)
        symmetrized = basis.transform.T @ product @ basis.transform
        coefficients[rho] = np.where(mask, symmetrized, 0.0)
    return InteractionOperator(basis=basis, rho_max=basis.spec.rho_max, coefficients=coefficients)


def pair_field_operator(
    basis: PairBasis,
    fields: FieldConfig,
    theta_rad: float = 0.0,
    cache: ElementCache | None = None,
    method: str = "numerov",
    dx: float = DEFAULT_DX,
    r_min_a0: float | None = None,
    spin_orbit: bool = True,
) -> np.ndarray:
    """V_e x 1 + 1 x V_e + V_m x 1 + 1 x V_m in the pair basis, in joules.

    `fields` is given in the lab frame and rotated into the calculation
    frame by the interaction angle before the single-atom operators are
    evaluated.
    """
    calc_fields = rotate_config(fields, theta_rad)
    n_sym = len(basis)
    if calc_fields.is_zero:
        return np.zeros((n_sym, n_sym))
    kwargs = dict(cache=cache, method=method, dx=dx, r_min_a0=r_min_a0, spin_orbit=spin_orbit)
    first, second = basis.models
    singles1, gather1 = _unique_singles(basis.product_states, 0)
    singles2, gather2 = _unique_singles(basis.product_states, 1)
    v1 = field_operator(first, singles1, calc_fields, **kwargs)
    v2 = field_operator(second, singles2, calc_fields, **kwargs)
    same1 = (gather1[:, None] == gather1[None, :])
    same2 = (gather2[:, None] == gather2[None, :])
    product_matrix = (
        v1[np.ix_(gather1, gather1)] * same2 + same1 * v2[np.ix_(gather2, gather2)]
    )
    return basis.transform.T @ product_matrix @ basis.transform


@dataclass
class AssembledPair:
    """A materialized pair Hamiltonian at one distance and geometry."""

    matrix: np.ndarray
    r_m: float
    theta_rad: float
    below_leroy: bool


def assemble_total(
    basis: PairBasis,
    operator: InteractionOperator,
    fields: FieldConfig | None = None,
    r_m: float = math.inf,
    theta_rad: float = 0.0,
    cache: ElementCache | None = None,
    method: str = "numerov",
    dx: float = DEFAULT_DX,
    r_min_a0: float | None = None,
    spin_orbit: bool = True,
) -> AssembledPair:
    """H(R) = H_0 + H_int(R) + single-atom field terms, in joules.

    Distances at or below the Le Roy radius are computed but flagged via
    `below_leroy`.
    """
    if operator.basis is not basis:
        raise ConfigError("interaction operator was built for a different basis")
    matrix = np.diag(basis.energies_j) + (
        operator.hamiltonian_at(r_m) if math.isfinite(r_m) else 0.0
    )
    if fields is not None and not fields.is_zero:
        field_matrix = pair_field_operator(
            basis, fields, theta_rad, cache=cache, method=method, dx=dx,
            r_min_a0=r_min_a0, spin_orbit=spin_orbit,
        )
        matrix = matrix + field_matrix
    below = math.isfinite(r_m) and r_m <= basis.leroy_radius_m
    return AssembledPair(matrix=matrix, r_m=r_m, theta_rad=theta_rad, below_leroy=below)
