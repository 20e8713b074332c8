"""Species data: quantum defects, level energies, and core model parameters.

Rydberg level energies are parameterized by the modified Rydberg constant

    R* = R_inf / (1 + m_e / M_atom)

and the effective principal quantum number n* = n - delta_nlj, where the
quantum defect is expanded as

    delta_nlj = delta0 + delta2/(n-delta0)^2 + delta4/(n-delta0)^4
              + delta6/(n-delta0)^6 .

For orbital momenta beyond the measured-defect table, energies fall back to
the hydrogen fine-structure expression with a core-polarizability correction

    E = -hcR*/n^2 (1 + alpha^2/(n(j+1/2)) + alpha^2/n^2)
        - (3 alpha_d / (4 n^3 l^5)) E_h ,

with alpha_d the core dipole polarizability in atomic units.

All parameters ship in a single YAML data file (``data/species.yaml``) that
also carries the parametric core potential coefficients used by the radial
integrator.  The loader validates the schema strictly: unknown or missing
keys raise :class:`~rydpair.errors.DataFileError` so that silently ignored
typos cannot corrupt a calculation.
"""

from __future__ import annotations

import functools
import hashlib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterator, Mapping

import yaml

from .angular import HalfInteger
from .constants import ALPHA_FS, C_LIGHT, HARTREE, H_PLANCK, M_E, RYDBERG_INF, U_KG, joule_to_au, joule_to_ev, joule_to_ghz
from .errors import ConfigError, DataFileError

# Spectroscopic letters for printing orbital angular momenta.  The series
# skips "j" by convention; momenta beyond the table print as "l=<value>".
_L_LETTERS = "spdfghiklmnoqrtuvwxyz"


def l_letter(l: int) -> str:
    """Spectroscopic letter for orbital momentum ``l`` ("s", "p", ...)."""
    if 0 <= l < len(_L_LETTERS):
        return _L_LETTERS[l]
    return f"l={l}"


@dataclass(frozen=True)
class StateOne:
    """A single-atom Rydberg state |n, l, j, mj> of a given species.

    ``mj`` may be omitted where only the level (n, l, j) matters, e.g. for
    radial wave functions and level energies.  Operations that resolve the
    Zeeman structure require it and raise :class:`ConfigError` otherwise.
    """

    species: str
    n: int
    l: int
    j: HalfInteger
    mj: HalfInteger | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "j", HalfInteger(self.j))
        if self.mj is not None:
            object.__setattr__(self, "mj", HalfInteger(self.mj))
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError(f"principal quantum number must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if int(self.l) != self.l or not 0 <= self.l < self.n:
            raise ConfigError(f"orbital momentum must satisfy 0 <= l < n, got l={self.l}, n={self.n}")
        object.__setattr__(self, "l", int(self.l))
        if abs(float(self.j) - self.l) != 0.5:
            raise ConfigError(f"total angular momentum must be l +- 1/2, got j={self.j}, l={self.l}")
        if self.mj is not None:
            if not (self.j - self.mj).is_integer:
                raise ConfigError(f"mj={self.mj} has wrong half-integer parity for j={self.j}")
            if abs(self.mj) > self.j:
                raise ConfigError(f"|mj| must not exceed j, got mj={self.mj}, j={self.j}")

    @property
    def level(self) -> tuple[str, int, int, HalfInteger]:
        """The fine-structure level (species, n, l, j), ignoring mj."""
        return (self.species, self.n, self.l, self.j)

    @property
    def sort_key(self) -> tuple[str, int, int, int, int]:
        mj = self.mj if self.mj is not None else HalfInteger.from_twice(0)
        return (self.species, self.n, self.l, self.j.twice, mj.twice)

    def with_mj(self, mj: HalfInteger | float) -> "StateOne":
        return StateOne(self.species, self.n, self.l, self.j, HalfInteger(mj))

    def without_mj(self) -> "StateOne":
        return StateOne(self.species, self.n, self.l, self.j)

    def __str__(self) -> str:
        label = f"{self.species} {self.n}{l_letter(self.l)}{self.j}"
        if self.mj is not None:
            label += f" mj={self.mj}"
        return label


@dataclass(frozen=True)
class QuantumDefectSeries:
    """Fitted quantum-defect expansion coefficients for one (l, j) series."""

    l: int
    j: HalfInteger
    delta0: float
    delta2: float = 0.0
    delta4: float = 0.0
    delta6: float = 0.0
    source: str = ""

    def defect(self, n: int) -> float:
        """Evaluate delta_nlj; requires n > delta0 for the expansion to apply."""
        if n <= self.delta0:
            raise ConfigError(
                f"n={n} is at or below the series limit delta0={self.delta0} for l={self.l}, j={self.j}"
            )
        x = 1.0 / (n - self.delta0) ** 2
        return self.delta0 + x * (self.delta2 + x * (self.delta4 + x * self.delta6))


@dataclass(frozen=True)
class CorePotentialCoefficients:
    """Coefficients of the parametric core potential for one orbital momentum.

    The radial electron-core interaction inside the core region is modeled as

        V_C(r) = -(1 + (Z-1) e^{-a1 r} - r (a3 + a4 r) e^{-a2 r}) / r

    in atomic units, smoothly joining the Coulomb tail -1/r at large r.
    All-zero coefficients reduce V_C to the bare Coulomb potential.
    """

    a1: float = 0.0
    a2: float = 0.0
    a3: float = 0.0
    a4: float = 0.0


@dataclass(frozen=True)
class SpeciesModel:
    """All per-species parameters: mass, core model, and defect series.

    ``mass_u`` may be None for an idealized infinite-mass core (hydrogen
    limit), in which case R* equals the Rydberg constant itself.
    """

    name: str
    z: int
    mass_u: float | None
    alpha_d_au: float
    r_c_a0: float
    n_min: int
    high_l_n_min: int
    model_potential: Mapping[int, CorePotentialCoefficients]
    defects: Mapping[tuple[int, int], QuantumDefectSeries]
    g_s: float
    g_l: float

    def __hash__(self) -> int:
        potential = tuple(sorted((l, c.a1, c.a2, c.a3, c.a4) for l, c in self.model_potential.items()))
        defects = tuple(
            sorted((l, tj, s.delta0, s.delta2, s.delta4, s.delta6) for (l, tj), s in self.defects.items())
        )
        return hash(
            (self.name, self.z, self.mass_u, self.alpha_d_au, self.r_c_a0, potential, defects, self.g_s, self.g_l)
        )

    @property
    def rydberg_constant_per_m(self) -> float:
        """Mass-corrected Rydberg constant R* in 1/m."""
        if self.mass_u is None:
            return RYDBERG_INF
        return RYDBERG_INF / (1.0 + M_E / (self.mass_u * U_KG))

    @property
    def rydberg_energy_j(self) -> float:
        """h c R* in joules."""
        return H_PLANCK * C_LIGHT * self.rydberg_constant_per_m

    @property
    def max_defect_l(self) -> int:
        return max((l for (l, _tj) in self.defects), default=-1)

    def defect_series(self, l: int, j: HalfInteger | float) -> QuantumDefectSeries | None:
        """The fitted series for (l, j), or None beyond the measured table."""
        return self.defects.get((l, HalfInteger(j).twice))

    def potential_coefficients(self, l: int) -> CorePotentialCoefficients:
        """Core potential coefficients for ``l``; the highest tabulated row
        is reused for larger momenta, and an empty table means pure Coulomb."""
        if not self.model_potential:
            return CorePotentialCoefficients()
        if l in self.model_potential:
            return self.model_potential[l]
        return self.model_potential[max(self.model_potential)]

    def effective_n(self, n: int, l: int, j: HalfInteger | float) -> float:
        """n* = n - delta_nlj; n* = n beyond the measured-defect table."""
        return n - quantum_defect(self, n, l, j)


@dataclass(frozen=True)
class LevelEnergy:
    """A single-atom level energy with unit accessors and provenance flags.

    ``source`` records which expression produced the value ("defect-series"
    or "hydrogenic-high-l"); ``below_validated_n`` marks energies computed
    below the n range the shipped parameters were validated for.
    """

    joules: float
    source: str
    below_validated_n: bool = False

    @property
    def ghz(self) -> float:
        return joule_to_ghz(self.joules)

    @property
    def au(self) -> float:
        return joule_to_au(self.joules)

    @property
    def ev(self) -> float:
        return joule_to_ev(self.joules)


def quantum_defect(model: SpeciesModel, n: int, l: int, j: HalfInteger | float) -> float:
    """The quantum defect delta_nlj, or 0 beyond the measured-defect table."""
    _validate_level(n, l, j)
    series = model.defect_series(l, j)
    if series is None:
        return 0.0
    return series.defect(n)


def level_energy(model: SpeciesModel, n: int, l: int, j: HalfInteger | float) -> LevelEnergy:
    """Single-atom level energy relative to the ionization threshold.

    Levels with a fitted defect series use E = -hcR*/(n - delta)^2; all
    others use the hydrogenic fine-structure expression with the core
    polarizability correction.
    """
    _validate_level(n, l, j)
    series = model.defect_series(l, j)
    if series is not None:
        n_star = n - series.defect(n)
        energy = -model.rydberg_energy_j / n_star**2
        return LevelEnergy(energy, "defect-series", below_validated_n=n < model.n_min)

    jj = float(HalfInteger(j))
    bracket = 1.0 + ALPHA_FS**2 / (n * (jj + 0.5)) + ALPHA_FS**2 / n**2
    energy = -model.rydberg_energy_j / n**2 * bracket
    if model.alpha_d_au != 0.0:
        if l == 0:
            raise ConfigError(
                f"{model.name}: s states need a defect series; the polarizability "
                "fallback is singular at l=0"
            )
        energy -= HARTREE * 3.0 * model.alpha_d_au / (4.0 * n**3 * l**5)
    return LevelEnergy(energy, "hydrogenic-high-l", below_validated_n=n < model.high_l_n_min)


def state_energy(model: SpeciesModel, state: StateOne) -> LevelEnergy:
    """Convenience wrapper of :func:`level_energy` for a state object."""
    if state.species != model.name:
        raise ConfigError(f"state {state} does not belong to species {model.name}")
    return level_energy(model, state.n, state.l, state.j)


def leroy_radius(model: SpeciesModel, state1: StateOne, state2: StateOne, **radial_kwargs) -> float:
    """The Le Roy radius 2 (sqrt<r^2>_1 + sqrt<r^2>_2) in meters.

    Beyond this interatomic distance the two Rydberg electron clouds no
    longer overlap appreciably and the multipole expansion of the pair
    interaction is justified.  The radial expectation values are computed
    with the same machinery as the interaction matrix elements.
    """
    from . import radial  # deferred to avoid an import cycle

    result = 0.0
    for state in (state1, state2):
        r2_a0 = radial.radial_expectation(model, state, 2, **radial_kwargs)
        result += 2.0 * r2_a0**0.5
    from .constants import A_0

    return result * A_0


def _validate_level(n: int, l: int, j: HalfInteger | float) -> None:
    if int(n) != n or n < 1:
        raise ConfigError(f"principal quantum number must be a positive integer, got {n}")
    if int(l) != l or not 0 <= l < n:
        raise ConfigError(f"orbital momentum must satisfy 0 <= l < n, got l={l}, n={n}")
    if abs(float(HalfInteger(j)) - l) != 0.5:
        raise ConfigError(f"total angular momentum must be l +- 1/2, got j={j}, l={l}")


# ----------------------------------------------------------------------------
# Data file loading


@dataclass(frozen=True)
class SpeciesRegistry:
    """The validated contents of a species data file."""

    models: Mapping[str, SpeciesModel]
    g_s: float
    g_l: float
    format_version: int
    file_hash: str
    path: str
    raw: dict = field(repr=False)

    def get(self, name: str) -> SpeciesModel:
        try:
            return self.models[name]
        except KeyError:
            known = ", ".join(sorted(self.models))
            raise ConfigError(f"unknown species {name!r}; data file provides: {known}") from None

    def names(self) -> list[str]:
        return sorted(self.models)

    def __iter__(self) -> Iterator[SpeciesModel]:
        return iter(self.models.values())


def _check_keys(mapping: dict, required: dict, optional: dict, context: str) -> None:
    if not isinstance(mapping, dict):
        raise DataFileError(f"{context}: expected a mapping, got {type(mapping).__name__}")
    for key in mapping:
        if key not in required and key not in optional:
            raise DataFileError(f"{context}: unknown key {key!r}")
    for key in required:
        if key not in mapping:
            raise DataFileError(f"{context}: missing required key {key!r}")


def _as_float(value, context: str, allow_none: bool = False) -> float | None:
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DataFileError(f"{context}: expected a number, got {value!r}")
    return float(value)


def _as_int(value, context: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise DataFileError(f"{context}: expected an integer, got {value!r}")
    return value


def _parse_defect(record: dict, species: str, index: int) -> QuantumDefectSeries:
    context = f"species {species!r}, defects[{index}]"
    required = {"l": int, "j": float, "delta0": float, "source": str}
    optional = {"delta2": float, "delta4": float, "delta6": float}
    _check_keys(record, required, optional, context)
    l = _as_int(record["l"], f"{context}.l")
    try:
        j = HalfInteger(record["j"])
    except (ValueError, TypeError) as exc:
        raise DataFileError(f"{context}.j: {exc}") from None
    if l < 0 or abs(float(j) - l) != 0.5:
        raise DataFileError(f"{context}: inconsistent quantum numbers l={l}, j={record['j']}")
    if not isinstance(record["source"], str) or not record["source"]:
        raise DataFileError(f"{context}.source: expected a non-empty citation string")
    return QuantumDefectSeries(
        l=l,
        j=j,
        delta0=_as_float(record["delta0"], f"{context}.delta0"),
        delta2=_as_float(record.get("delta2", 0.0), f"{context}.delta2"),
        delta4=_as_float(record.get("delta4", 0.0), f"{context}.delta4"),
        delta6=_as_float(record.get("delta6", 0.0), f"{context}.delta6"),
        source=record["source"],
    )


def _parse_species(name: str, record: dict, g_s: float, g_l: float) -> SpeciesModel:
    context = f"species {name!r}"
    required = {
        "mass_u": float,
        "Z": int,
        "alpha_d_au": float,
        "r_c_a0": float,
        "model_potential": dict,
        "defects": list,
    }
    optional = {"n_min": int, "high_l_n_min": int}
    _check_keys(record, required, optional, context)

    mass_u = _as_float(record["mass_u"], f"{context}.mass_u", allow_none=True)
    if mass_u is not None and mass_u <= 0:
        raise DataFileError(f"{context}.mass_u: must be positive or null")
    z = _as_int(record["Z"], f"{context}.Z")
    if z < 1:
        raise DataFileError(f"{context}.Z: must be >= 1")
    alpha_d = _as_float(record["alpha_d_au"], f"{context}.alpha_d_au")
    if alpha_d < 0:
        raise DataFileError(f"{context}.alpha_d_au: must be >= 0")
    r_c = _as_float(record["r_c_a0"], f"{context}.r_c_a0")
    if r_c <= 0:
        raise DataFileError(f"{context}.r_c_a0: must be > 0")

    potential_raw = record["model_potential"]
    if not isinstance(potential_raw, dict):
        raise DataFileError(f"{context}.model_potential: expected a mapping of l to coefficients")
    potential: dict[int, CorePotentialCoefficients] = {}
    for l_key, coeffs in potential_raw.items():
        sub = f"{context}.model_potential[{l_key!r}]"
        l = _as_int(l_key, sub)
        if l < 0:
            raise DataFileError(f"{sub}: l must be >= 0")
        _check_keys(coeffs, {"a1": float, "a2": float, "a3": float, "a4": float}, {}, sub)
        potential[l] = CorePotentialCoefficients(
            a1=_as_float(coeffs["a1"], f"{sub}.a1"),
            a2=_as_float(coeffs["a2"], f"{sub}.a2"),
            a3=_as_float(coeffs["a3"], f"{sub}.a3"),
            a4=_as_float(coeffs["a4"], f"{sub}.a4"),
        )

    defects_raw = record["defects"]
    if not isinstance(defects_raw, list):
        raise DataFileError(f"{context}.defects: expected a list of series records")
    defects: dict[tuple[int, int], QuantumDefectSeries] = {}
    for index, entry in enumerate(defects_raw):
        series = _parse_defect(entry, name, index)
        key = (series.l, series.j.twice)
        if key in defects:
            raise DataFileError(f"{context}: duplicate defect series for l={series.l}, j={series.j}")
        defects[key] = series

    return SpeciesModel(
        name=name,
        z=z,
        mass_u=mass_u,
        alpha_d_au=alpha_d,
        r_c_a0=r_c,
        n_min=_as_int(record.get("n_min", 10), f"{context}.n_min"),
        high_l_n_min=_as_int(record.get("high_l_n_min", 10), f"{context}.high_l_n_min"),
        model_potential=potential,
        defects=defects,
        g_s=g_s,
        g_l=g_l,
    )


def default_data_path() -> Path:
    """Path of the species data file shipped with the package."""
    return Path(str(resources.files("rydpair").joinpath("data/species.yaml")))


def load_species_data(path: str | Path | None = None) -> SpeciesRegistry:
    """Load and strictly validate a species data file.

    ``path=None`` loads the packaged default.  Any unknown key, missing key,
    or ill-typed value raises :class:`DataFileError`.
    """
    file_path = Path(path) if path is not None else default_data_path()
    try:
        content = file_path.read_bytes()
    except OSError as exc:
        raise DataFileError(f"cannot read species data file {file_path}: {exc}") from exc
    try:
        raw = yaml.safe_load(content)
    except yaml.YAMLError as exc:
        raise DataFileError(f"species data file {file_path} is not valid YAML: {exc}") from exc

    _check_keys(raw, {"format_version": int, "g_factors": dict, "species": dict}, {}, "top level")
    version = _as_int(raw["format_version"], "format_version")
    if version != 1:
        raise DataFileError(f"unsupported species data format_version {version}")
    _check_keys(raw["g_factors"], {"g_s": float, "g_l": float}, {}, "g_factors")
    g_s = _as_float(raw["g_factors"]["g_s"], "g_factors.g_s")
    g_l = _as_float(raw["g_factors"]["g_l"], "g_factors.g_l")

    if not raw["species"]:
        raise DataFileError("species data file defines no species")
    models = {}
    for name, record in raw["species"].items():
        if not isinstance(name, str):
            raise DataFileError(f"species names must be strings, got {name!r}")
        models[name] = _parse_species(name, record, g_s, g_l)

    return SpeciesRegistry(
        models=models,
        g_s=g_s,
        g_l=g_l,
        format_version=version,
        file_hash=hashlib.sha256(content).hexdigest(),
        path=str(file_path),
        raw=raw,
    )


def dump_species_data(registry: SpeciesRegistry) -> str:
    """Serialize a registry back to YAML.

    The output parses back to exactly the values that were loaded, so the
    file format round-trips losslessly.
    """
    return yaml.safe_dump(registry.raw, sort_keys=False)


@functools.lru_cache(maxsize=1)
def default_registry() -> SpeciesRegistry:
    """The packaged species data, loaded once per process."""
    return load_species_data(None)
