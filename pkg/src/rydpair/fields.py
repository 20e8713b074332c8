"""Single-atom coupling to static electric and magnetic fields.

The electric interaction is -d.E with d = e r, the magnetic interaction is
-mu.B + |d x B|^2 / (8 m_e) with mu = -(mu_B/hbar) (g_l l + g_s s).  Both are
expanded over spherical tensor operators so the matrix elements reduce to the
multipole and momentum elements of :mod:`rydpair.operators`:

    -d.E            ->  -(p_{1,0} E_0 - p_{1,1} E_- - p_{1,-1} E_+)
    J.B             ->  J_{1,0} B_0 - J_{1,1} B_- - J_{1,-1} B_+
    |d x B|^2/8m_e  ->  e^2 r^2/(12 m_e) * [ B^2
                          - sqrt(4 pi/5) ( Y_{2,0} (B_0 B_0 + B_+ B_-)
                          - sqrt(3) Y_{2,1} B_0 B_- - sqrt(3) Y_{2,-1} B_0 B_+
                          + sqrt(3/2) Y_{2,2} B_- B_- + sqrt(3/2) Y_{2,-2} B_+ B_+ ) ]

with the spherical field components F_pm = -+ (F_x +- i F_y)/sqrt(2) and
F_0 = F_z.  Fields of arbitrary relative orientation are supported; the
operator matrix is real unless a field has a y component.

All operator matrices are in joules over a basis of :class:`StateOne` with
definite mj.  Stark and Zeeman maps diagonalize diag(E_nlj) + V_e + V_m over
a scan of field magnitudes, solving each mj block separately while every
field is axial and labeling eigenstates by their maximal-overlap basis state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .angular import HalfInteger, half
from .constants import A_0, E_CHARGE, M_E, MU_B
from .errors import ConfigError
from .operators import (
    ElementCache,
    momentum_element,
    momentum_selection_allowed,
    multipole_element,
    multipole_selection_allowed,
    scalar_moment,
)
from .radial import DEFAULT_DX
from .species import SpeciesModel, StateOne, level_energy, state_energy

_SQRT2 = math.sqrt(2.0)

# e^2 a_0^2 / (12 m_e): converts <r^2/a_0^2> B^2 [T^2] to joules.
_DIAMAGNETIC_FACTOR = E_CHARGE**2 * A_0**2 / (12.0 * M_E)

# Dipole moment e a_0 in C m: converts <p_{1q}/(e a_0)> E [V/m] to joules.
_DIPOLE_SI = E_CHARGE * A_0

# Weights of sqrt(4 pi/5) r^2 Y_{2q} in the diamagnetic expansion, as
# functions of (B_+, B_-, B_0).
_DIAMAGNETIC_Q_WEIGHTS = {
    0: lambda bp, bm, b0: -(b0 * b0 + bp * bm),
    +1: lambda bp, bm, b0: math.sqrt(3.0) * b0 * bm,
    -1: lambda bp, bm, b0: math.sqrt(3.0) * b0 * bp,
    +2: lambda bp, bm, b0: -math.sqrt(1.5) * bm * bm,
    -2: lambda bp, bm, b0: -math.sqrt(1.5) * bp * bp,
}


def spherical_field_components(vec: Sequence[float]) -> tuple[complex, complex, complex]:
    """Cartesian 3-vector -> spherical components (F_+, F_-, F_0)."""
    fx, fy, fz = (float(c) for c in vec)
    f_plus = -(fx + 1j * fy) / _SQRT2
    f_minus = (fx - 1j * fy) / _SQRT2
    return f_plus, f_minus, complex(fz)


def cartesian_field_components(spherical: Sequence[complex]) -> tuple[complex, complex, complex]:
    """Inverse of :func:`spherical_field_components`; exact round trip."""
    f_plus, f_minus, f_zero = (complex(c) for c in spherical)
    fx = (f_minus - f_plus) / _SQRT2
    fy = 1j * (f_minus + f_plus) / _SQRT2
    return fx, fy, f_zero


def _as_vector(vec: Sequence[float], name: str) -> tuple[float, float, float]:
    try:
        components = tuple(float(c) for c in vec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a 3-vector of numbers, got {vec!r}") from exc
    if len(components) != 3:
        raise ConfigError(f"{name} must have 3 components, got {len(components)}")
    if not all(math.isfinite(c) for c in components):
        raise ConfigError(f"{name} components must be finite, got {components}")
    return components


@dataclass(frozen=True)
class FieldConfig:
    """Static, homogeneous fields in the lab frame.

    The electric field is in V/m, the magnetic field in tesla.  The two
    fields may point in arbitrary, non-parallel directions.
    """

    efield_vm: tuple[float, float, float] = (0.0, 0.0, 0.0)
    bfield_t: tuple[float, float, float] = (0.0, 0.0, 0.0)
    include_diamagnetic: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "efield_vm", _as_vector(self.efield_vm, "efield_vm"))
        object.__setattr__(self, "bfield_t", _as_vector(self.bfield_t, "bfield_t"))

    @property
    def has_efield(self) -> bool:
        return any(c != 0.0 for c in self.efield_vm)

    @property
    def has_bfield(self) -> bool:
        return any(c != 0.0 for c in self.bfield_t)

    @property
    def is_zero(self) -> bool:
        return not (self.has_efield or self.has_bfield)

    @property
    def is_axial(self) -> bool:
        """True when every nonzero field points along z (mj is conserved)."""
        ex, ey, _ = self.efield_vm
        bx, by, _ = self.bfield_t
        return ex == ey == bx == by == 0.0

    @property
    def needs_complex(self) -> bool:
        """A y component makes the spherical weights, hence the matrix, complex."""
        return self.efield_vm[1] != 0.0 or self.bfield_t[1] != 0.0


def _operator_dtype(*configs_complex: bool) -> type:
    return np.complex128 if any(configs_complex) else np.float64


def _require_mj(basis: Sequence[StateOne]) -> None:
    for state in basis:
        if state.mj is None:
            raise ConfigError(f"field operators need mj on every basis state, {state} has none")


def stark_operator(
    model: SpeciesModel,
    basis: Sequence[StateOne],
    efield_vm: Sequence[float],
    cache: ElementCache | None = None,
    method: str = "numerov",
    dx: float = DEFAULT_DX,
    r_min_a0: float | None = None,
    spin_orbit: bool = True,
) -> np.ndarray:
    """Matrix of -d.E over `basis`, in joules.

    Hermitian; couples Delta l = +-1 only.  Real unless E_y is nonzero.
    """
    efield = _as_vector(efield_vm, "efield_vm")
    _require_mj(basis)
    n = len(basis)
    matrix = np.zeros((n, n), dtype=_operator_dtype(efield[1] != 0.0))
    if all(c == 0.0 for c in efield):
        return matrix
    e_plus, e_minus, e_zero = spherical_field_components(efield)
    # -d.E = -(p_{1,0} E_0 - p_{1,1} E_- - p_{1,-1} E_+)
    weights = {0: -e_zero, +1: e_minus, -1: e_plus}
    for i, bra in enumerate(basis):
        for k, ket in enumerate(basis[: i + 1]):
            delta = bra.mj - ket.mj
            if not delta.is_integer or abs(delta.twice) > 2:
                continue
            q = int(delta)
            weight = weights[q]
            if weight == 0.0:
                continue
            element = multipole_element(
                model, bra, ket, 1, q, cache=cache, method=method, dx=dx,
                r_min_a0=r_min_a0, spin_orbit=spin_orbit,
            )
            if element == 0.0:
                continue
            value = weight * element * _DIPOLE_SI
            matrix[i, k] = value if matrix.dtype == np.complex128 else value.real
            matrix[k, i] = np.conj(matrix[i, k])
    return matrix


def zeeman_operator(
    model: SpeciesModel,
    basis: Sequence[StateOne],
    bfield_t: Sequence[float],
    include_diamagnetic: bool = True,
    cache: ElementCache | None = None,
    method: str = "numerov",
    dx: float = DEFAULT_DX,
    r_min_a0: float | None = None,
    spin_orbit: bool = True,
) -> np.ndarray:
    """Matrix of -mu.B (+ optional diamagnetic term) over `basis`, in joules.

    The paramagnetic part is mu_B (g_l l + g_s s).B with the momentum
    operators in units of hbar; the diamagnetic part combines the scalar
    r^2 B^2 piece with the five rank-2 pieces of the spherical expansion.
    """
    bfield = _as_vector(bfield_t, "bfield_t")
    _require_mj(basis)
    n = len(basis)
    matrix = np.zeros((n, n), dtype=_operator_dtype(bfield[1] != 0.0))
    if all(c == 0.0 for c in bfield):
        return matrix
    b_plus, b_minus, b_zero = spherical_field_components(bfield)
    b_squared = sum(c * c for c in bfield)
    # J.B = J_{1,0} B_0 - J_{1,1} B_- - J_{1,-1} B_+ and V = +mu_B (g_l l + g_s s).B
    momentum_weights = {0: b_zero, +1: -b_minus, -1: -b_plus}
    element_kwargs = dict(cache=cache, method=method, dx=dx, r_min_a0=r_min_a0, spin_orbit=spin_orbit)
    complex_output = matrix.dtype == np.complex128

    for i, bra in enumerate(basis):
        for k, ket in enumerate(basis[: i + 1]):
            delta = bra.mj - ket.mj
            if not delta.is_integer:
                continue
            q = int(delta)
            value = 0.0 + 0.0j
            if abs(q) <= 1 and momentum_selection_allowed(bra, ket, q):
                weight = momentum_weights[q]
                if weight != 0.0:
                    orbital = momentum_element(model, bra, "l", q, ket, **element_kwargs)
                    spin = momentum_element(model, bra, "s", q, ket, **element_kwargs)
                    value += MU_B * weight * (model.g_l * orbital + model.g_s * spin)
            if include_diamagnetic:
                if q == 0:
                    overlap = scalar_moment(model, bra, ket, 2, **element_kwargs)
                    value += _DIAMAGNETIC_FACTOR * b_squared * overlap
                if abs(q) <= 2 and multipole_selection_allowed(bra, ket, 2, q):
                    weight = _DIAMAGNETIC_Q_WEIGHTS[q](b_plus, b_minus, b_zero)
                    if weight != 0.0:
                        quad = multipole_element(model, bra, ket, 2, q, **element_kwargs)
                        value += _DIAMAGNETIC_FACTOR * weight * quad
            if value == 0.0:
                continue
            matrix[i, k] = value if complex_output else value.real
            matrix[k, i] = np.conj(matrix[i, k])
    return matrix


def field_operator(
    model: SpeciesModel,
    basis: Sequence[StateOne],
    config: FieldConfig,
    cache: ElementCache | None = None,
    method: str = "numerov",
    dx: float = DEFAULT_DX,
    r_min_a0: float | None = None,
    spin_orbit: bool = True,
) -> np.ndarray:
    """V_e + V_m over `basis` for the fields in `config`, in joules."""
    kwargs = dict(cache=cache, method=method, dx=dx, r_min_a0=r_min_a0, spin_orbit=spin_orbit)
    n = len(basis)
    total = np.zeros((n, n), dtype=_operator_dtype(config.needs_complex))
    if config.has_efield:
        total = total + stark_operator(model, basis, config.efield_vm, **kwargs)
    if config.has_bfield:
        total = total + zeeman_operator(
            model, basis, config.bfield_t, include_diamagnetic=config.include_diamagnetic, **kwargs
        )
    return total


def build_field_basis(
    model: SpeciesModel,
    center: StateOne,
    delta_n: int = 2,
    delta_l: int = 2,
    energy_window_ghz: float | None = None,
    mj_values: Iterable | None = None,
) -> list[StateOne]:
    """Single-atom basis around `center`: levels within the n and l windows.

    Every mj is included unless `mj_values` restricts them (a Stark map
    along z only needs one mj block).  An optional energy window (GHz x h,
    relative to the center level) prunes far-detuned levels.
    """
    if delta_n < 0 or delta_l < 0:
        raise ConfigError(f"windows must be non-negative, got delta_n={delta_n}, delta_l={delta_l}")
    if center.species != model.name:
        raise ConfigError(f"center state {center} does not belong to species {model.name}")
    wanted_mj = None if mj_values is None else {half(int(round(2 * float(m)))) for m in mj_values}
    center_energy = None
    if energy_window_ghz is not None:
        center_energy = level_energy(model, center.n, center.l, center.j).ghz
    states = []
    for n in range(max(1, center.n - delta_n), center.n + delta_n + 1):
        for l in range(max(0, center.l - delta_l), min(n - 1, center.l + delta_l) + 1):
            for j in (half(2 * l - 1), half(2 * l + 1)):
                if j < half(1):
                    continue
                if center_energy is not None:
                    level = level_energy(model, n, l, j)
                    if abs(level.ghz - center_energy) > energy_window_ghz:
                        continue
                mj = -j
                while mj <= j:
                    if wanted_mj is None or mj in wanted_mj:
                        states.append(StateOne(model.name, n, l, j, mj))
                    mj = mj + HalfInteger(1)
    if not states:
        raise ConfigError("field-map basis is empty; widen the windows")
    return sorted(states, key=lambda s: s.sort_key)


@dataclass
class SingleAtomSystem:
    """A single atom in static fields: diag(E_nlj) + V_e + V_m.

    The basis is a fixed list of states with definite mj; the Hamiltonian
    and its eigen-decomposition are computed on demand and cached.
    """

    model: SpeciesModel
    basis: tuple[StateOne, ...]
    config: FieldConfig = field(default_factory=FieldConfig)
    cache: ElementCache | None = None
    method: str = "numerov"
    dx: float = DEFAULT_DX
    r_min_a0: float | None = None
    spin_orbit: bool = True

    def __post_init__(self) -> None:
        self.basis = tuple(self.basis)
        if not self.basis:
            raise ConfigError("single-atom basis must not be empty")
        seen = set()
        for state in self.basis:
            if state.species != self.model.name:
                raise ConfigError(f"state {state} does not belong to species {self.model.name}")
            if state.mj is None:
                raise ConfigError(f"field operators need mj on every basis state, {state} has none")
            if state in seen:
                raise ConfigError(f"duplicate basis state {state}")
            seen.add(state)
        self._eigen: tuple[np.ndarray, np.ndarray] | None = None

    def level_energies_j(self) -> np.ndarray:
        return np.array([state_energy(self.model, state).joules for state in self.basis])

    def hamiltonian(self) -> np.ndarray:
        operator = field_operator(
            self.model, self.basis, self.config, cache=self.cache, method=self.method,
            dx=self.dx, r_min_a0=self.r_min_a0, spin_orbit=self.spin_orbit,
        )
        return operator + np.diag(self.level_energies_j()).astype(operator.dtype)

    def eigenstates(self) -> tuple[np.ndarray, np.ndarray]:
        """(eigenvalues in joules ascending, eigenvectors as columns)."""
        if self._eigen is None:
            values, vectors = np.linalg.eigh(self.hamiltonian())
            self._eigen = (values, vectors)
        return self._eigen

    def mj_block_indices(self) -> list[np.ndarray]:
        """Basis index groups of equal mj (one group = whole basis if fields mix mj)."""
        if not self.config.is_axial:
            return [np.arange(len(self.basis))]
        groups: dict[object, list[int]] = {}
        for index, state in enumerate(self.basis):
            groups.setdefault(state.mj, []).append(index)
        return [np.array(groups[mj]) for mj in sorted(groups)]


@dataclass
class FieldMap:
    """Eigenvalues over a field scan, sorted ascending per point.

    `labels[i, k]` is the basis index with maximal overlap on eigenstate k
    at scan point i and `overlaps[i, k]` that overlap probability; invalid
    points (eigensolver failure) carry NaN rows, ok=False and a message.
    """

    which: str
    direction: tuple[float, float, float]
    values: np.ndarray
    basis: tuple[StateOne, ...]
    energies_j: np.ndarray
    labels: np.ndarray
    overlaps: np.ndarray
    ok: np.ndarray
    errors: list[str | None]

    def energies_ghz(self) -> np.ndarray:
        from .constants import joule_to_ghz

        return joule_to_ghz(self.energies_j)


def _normalized_direction(direction) -> tuple[float, float, float]:
    named = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}
    if isinstance(direction, str):
        try:
            return named[direction]
        except KeyError:
            raise ConfigError(f"direction must be 'x', 'y', 'z' or a 3-vector, got {direction!r}") from None
    vec = _as_vector(direction, "direction")
    norm = math.sqrt(sum(c * c for c in vec))
    if norm == 0.0:
        raise ConfigError("scan direction must be a nonzero vector")
    return tuple(c / norm for c in vec)


def field_map(
    system: SingleAtomSystem,
    scan: Sequence[float],
    direction="z",
    which: str = "electric",
) -> FieldMap:
    """Diagonalize the atom-field Hamiltonian over a scan of field magnitudes.

    `which` selects the scanned field ("electric" in V/m or "magnetic" in
    tesla); the other field is held at its value in `system.config`.  While
    every field is axial each mj block is solved separately.  A failed
    point is recorded and the scan continues.
    """
    if which not in ("electric", "magnetic"):
        raise ConfigError(f"scan field must be 'electric' or 'magnetic', got {which!r}")
    unit = _normalized_direction(direction)
    values = np.asarray([float(v) for v in scan], dtype=float)
    if values.size == 0:
        raise ConfigError("field scan needs at least one point")
    if not np.all(np.isfinite(values)):
        raise ConfigError("field scan values must be finite")

    n_states = len(system.basis)
    h0 = np.diag(system.level_energies_j())
    energies = np.full((values.size, n_states), np.nan)
    labels = np.full((values.size, n_states), -1, dtype=int)
    overlaps = np.full((values.size, n_states), np.nan)
    ok = np.zeros(values.size, dtype=bool)
    errors: list[str | None] = [None] * values.size

    for point, magnitude in enumerate(values):
        vector = tuple(magnitude * c for c in unit)
        if which == "electric":
            config = replace(system.config, efield_vm=vector)
        else:
            config = replace(system.config, bfield_t=vector)
        point_system = SingleAtomSystem(
            system.model, system.basis, config, cache=system.cache, method=system.method,
            dx=system.dx, r_min_a0=system.r_min_a0, spin_orbit=system.spin_orbit,
        )
        try:
            operator = field_operator(
                point_system.model, point_system.basis, config, cache=point_system.cache,
                method=point_system.method, dx=point_system.dx,
                r_min_a0=point_system.r_min_a0, spin_orbit=point_system.spin_orbit,
            )
            hamiltonian = operator + h0.astype(operator.dtype)
            point_energies = np.empty(n_states)
            point_labels = np.empty(n_states, dtype=int)
            point_overlaps = np.empty(n_states)
            cursor = 0
            for block in point_system.mj_block_indices():
                block_values, block_vectors = np.linalg.eigh(hamiltonian[np.ix_(block, block)])
                weight = np.abs(block_vectors) ** 2
                leading = np.argmax(weight, axis=0)
                stop = cursor + block.size
                point_energies[cursor:stop] = block_values
                point_labels[cursor:stop] = block[leading]
                point_overlaps[cursor:stop] = weight[leading, np.arange(block.size)]
                cursor = stop
            order = np.argsort(point_energies, kind="stable")
            energies[point] = point_energies[order]
            labels[point] = point_labels[order]
            overlaps[point] = point_overlaps[order]
            ok[point] = True
        except np.linalg.LinAlgError as exc:
            errors[point] = f"eigensolver failed at scan value {magnitude!r}: {exc}"

    return FieldMap(
        which=which, direction=unit, values=values, basis=system.basis,
        energies_j=energies, labels=labels, overlaps=overlaps, ok=ok, errors=errors,
    )
