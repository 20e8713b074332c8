"""Command-line front end: config parsing, orchestration, CSV/JSON output.

Subcommands:

    pair-potential   interaction curves over distance, plus optional
                     admixture cut, beat spectrum over angle, and
                     coherent time evolution
    stark-map        single-atom levels over an electric-field scan
    zeeman-map       single-atom levels over a magnetic-field scan
    matrix-element   one cached multipole or momentum matrix element
    state-info       energy, quantum defect, and Le Roy radius of a state
    cache            inspect or clear the element cache

Configuration comes from a YAML file (--config) with every scalar
overridable on the command line; keys carry their units in the name
(efield_mV_per_cm, r_um, theta_deg).  Results are written as CSV plus a
JSON sidecar holding the fully resolved configuration and the species
data-file hash, so a run is reproducible from its outputs alone.  The
--plot flag renders matplotlib figures to PNG files next to the CSVs.

Exit codes: 0 ok, 2 configuration error, 3 numerical failure,
4 species-data-file error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .angular import HalfInteger, half
from .constants import GHZ, MHZ, joule_to_ghz
from .errors import ConfigError, DataFileError, NumericalError
from .fields import (
    FieldConfig,
    SingleAtomSystem,
    build_field_basis,
    field_map,
)
from .operators import (
    momentum_element,
    multipole_element,
    open_cache,
)
from .pair import (
    BasisSpec,
    StateTwo,
    build_interaction_operator,
    build_pair_basis,
)
from .radial import DEFAULT_DX
from .solver import (
    admixture_cut,
    converge_basis,
    frequency_spectrum,
    solve_curves,
    time_evolution,
)
from .species import (
    StateOne,
    default_registry,
    l_letter,
    level_energy,
    leroy_radius,
    load_species_data,
    quantum_defect,
)

_DEFAULT_CACHE = Path.home() / ".cache" / "rydpair" / "elements.sqlite"
_MV_PER_CM_TO_V_PER_M = 0.1

_L_LETTERS = {l_letter(l): l for l in range(26)}


# --------------------------------------------------------------------------
# value parsing


def _parse_l(value) -> int:
    if isinstance(value, int):
        return value
    text = str(value).strip().lower()
    if text in _L_LETTERS:
        return _L_LETTERS[text]
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"cannot parse orbital momentum {value!r}") from None


def _parse_half(value) -> HalfInteger:
    """Half-integers from YAML or flags: 1.5, '3/2', 2, '2'."""
    if isinstance(value, HalfInteger):
        return value
    if isinstance(value, str) and "/" in value:
        num, _, den = value.partition("/")
        try:
            numerator, denominator = int(num), int(den)
        except ValueError:
            raise ConfigError(f"cannot parse half-integer {value!r}") from None
        if denominator == 2:
            return HalfInteger.from_twice(numerator)
        if denominator == 1:
            return HalfInteger.from_twice(2 * numerator)
        raise ConfigError(f"cannot parse half-integer {value!r}")
    try:
        doubled = 2.0 * float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"cannot parse half-integer {value!r}") from None
    rounded = round(doubled)
    if abs(doubled - rounded) > 1e-9:
        raise ConfigError(f"{value!r} is not half-integer")
    return HalfInteger.from_twice(int(rounded))


def _parse_state(record, species: str, require_mj: bool) -> StateOne:
    if not isinstance(record, dict):
        raise ConfigError(f"state must be a mapping with n, l, j[, mj], got {record!r}")
    unknown = set(record) - {"n", "l", "j", "mj", "species"}
    if unknown:
        raise ConfigError(f"unknown state keys: {sorted(unknown)}")
    missing = {"n", "l", "j"} - set(record)
    if missing:
        raise ConfigError(f"state is missing keys: {sorted(missing)}")
    mj = record.get("mj")
    if require_mj and mj is None:
        raise ConfigError(f"state {record!r} needs an mj for this command")
    return StateOne(
        species=record.get("species", species),
        n=int(record["n"]),
        l=_parse_l(record["l"]),
        j=_parse_half(record["j"]),
        mj=None if mj is None else _parse_half(mj),
    )


def _parse_vector(value, name: str) -> tuple[float, float, float]:
    if value is None:
        return (0.0, 0.0, 0.0)
    if isinstance(value, (int, float)):
        return (0.0, 0.0, float(value))  # scalar means along z
    try:
        vec = tuple(float(component) for component in value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number or a 3-vector, got {value!r}") from None
    if len(vec) != 3:
        raise ConfigError(f"{name} must have three components, got {len(vec)}")
    return vec


def _parse_species(value) -> tuple[str, str]:
    if isinstance(value, str):
        return (value, value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return (str(value[0]), str(value[1]))
    raise ConfigError(f"species must be a name or a pair of names, got {value!r}")


# --------------------------------------------------------------------------
# config plumbing


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a mapping at top level")
    return data


def _override(config: dict, key: str, value) -> None:
    if value is not None:
        config[key] = value


def _section(config: dict, name: str) -> dict:
    value = config.get(name) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"config section {name!r} must be a mapping")
    return value


def _registry(args):
    if getattr(args, "species_file", None):
        return load_species_data(args.species_file)
    return default_registry()


def _open_cache(args, registry):
    if getattr(args, "no_cache", False):
        return None
    path = Path(getattr(args, "cache", None) or _DEFAULT_CACHE)
    dx = getattr(args, "dx", None) or DEFAULT_DX
    return open_cache(path, registry, dx=dx)


def _grid_from(section: dict, name: str, default_spacing: str = "log") -> np.ndarray:
    missing = {"min", "max"} - set(section)
    if missing:
        raise ConfigError(f"{name} needs keys min and max, got {sorted(section)}")
    lo, hi = float(section["min"]), float(section["max"])
    points = int(section.get("points", 200))
    spacing = section.get("spacing", default_spacing)
    if points < 1:
        raise ConfigError(f"{name}: points must be >= 1")
    if spacing == "log":
        if lo <= 0:
            raise ConfigError(f"{name}: log spacing needs min > 0")
        return np.geomspace(lo, hi, points)
    if spacing == "linear":
        return np.linspace(lo, hi, points)
    raise ConfigError(f"{name}: spacing must be 'log' or 'linear', got {spacing!r}")


# --------------------------------------------------------------------------
# output plumbing


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: list[str], rows) -> Path:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(cell) for cell in row])
    return path


def _write_json(path: Path, payload: dict) -> Path:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def _out_dir(args) -> Path:
    out = Path(getattr(args, "out", ".") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _sidecar_base(args, registry, resolved: dict) -> dict:
    return {
        "command": args.command,
        "package_version": __version__,
        "species_file": {"path": registry.path, "sha256": registry.file_hash},
        "resolved_config": resolved,
        "outputs": [],
    }


def _state_record(state: StateOne) -> dict:
    record = {"species": state.species, "n": state.n, "l": state.l, "j": float(state.j)}
    if state.mj is not None:
        record["mj"] = float(state.mj)
    return record


# --------------------------------------------------------------------------
# pair-potential


def _resolve_pair_config(args) -> dict:
    config = _load_config(args.config)
    _override(config, "theta_deg", args.theta_deg)
    _override(config, "method", args.method)
    basis = _section(config, "basis")
    _override(basis, "delta_n", args.delta_n)
    _override(basis, "delta_l", args.delta_l)
    _override(basis, "energy_window_GHz", args.energy_window_ghz)
    _override(basis, "rho_max", args.rho_max)
    config["basis"] = basis
    distance = _section(config, "distance_um")
    _override(distance, "min", args.r_min_um)
    _override(distance, "max", args.r_max_um)
    _override(distance, "points", args.r_points)
    config["distance_um"] = distance
    fields = _section(config, "fields")
    if args.efield_mv_per_cm is not None:
        fields["efield_mV_per_cm"] = list(args.efield_mv_per_cm)
    if args.bfield_t is not None:
        fields["bfield_T"] = list(args.bfield_t)
    config["fields"] = fields
    config.setdefault("theta_deg", 0.0)
    config.setdefault("method", "numerov")
    return config


def _basis_spec_from(config: dict, target: StateTwo) -> BasisSpec:
    basis = _section(config, "basis")
    unknown = set(basis) - {
        "delta_n", "delta_l", "energy_window_GHz", "rho_max", "m_values",
        "use_inversion", "use_reflection", "use_permutation",
    }
    if unknown:
        raise ConfigError(f"unknown basis keys: {sorted(unknown)}")
    m_values = basis.get("m_values")
    if m_values is not None:
        m_values = [_parse_half(m) for m in m_values]
    return BasisSpec(
        target=target,
        delta_n=int(basis.get("delta_n", 3)),
        delta_l=int(basis.get("delta_l", 3)),
        energy_window_ghz=float(basis.get("energy_window_GHz", 30.0)),
        rho_max=int(basis.get("rho_max", 3)),
        m_values=m_values,
        use_inversion=basis.get("use_inversion"),
        use_reflection=basis.get("use_reflection"),
        use_permutation=basis.get("use_permutation"),
    )


def _field_config_from(config: dict) -> FieldConfig:
    fields = _section(config, "fields")
    unknown = set(fields) - {"efield_mV_per_cm", "bfield_T", "include_diamagnetic"}
    if unknown:
        raise ConfigError(f"unknown fields keys: {sorted(unknown)}")
    efield = _parse_vector(fields.get("efield_mV_per_cm"), "efield_mV_per_cm")
    return FieldConfig(
        efield_vm=tuple(component * _MV_PER_CM_TO_V_PER_M for component in efield),
        bfield_t=_parse_vector(fields.get("bfield_T"), "bfield_T"),
        include_diamagnetic=bool(fields.get("include_diamagnetic", True)),
    )


def _pair_from(config: dict, key: str, species: tuple[str, str]) -> StateTwo | None:
    record = config.get(key)
    if record is None:
        return None
    if not isinstance(record, dict) or {"state1", "state2"} - set(record):
        raise ConfigError(f"{key} must be a mapping with state1 and state2")
    return StateTwo(
        _parse_state(record["state1"], species[0], require_mj=True),
        _parse_state(record["state2"], species[1], require_mj=True),
    )


_PAIR_CONFIG_KEYS = {
    "species", "target", "probe", "basis", "fields", "theta_deg",
    "distance_um", "converge", "admixture", "spectrum", "evolution", "method",
}


def cmd_pair_potential(args) -> int:
    config = _resolve_pair_config(args)
    unknown = set(config) - _PAIR_CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "species" not in config:
        raise ConfigError("config needs a species name (or a pair of names)")
    species = _parse_species(config["species"])
    registry = _registry(args)
    models = (registry.get(species[0]), registry.get(species[1]))
    cache = _open_cache(args, registry)
    method = config["method"]

    target = _pair_from(config, "target", species)
    if target is None:
        raise ConfigError("config needs a target pair (target: {state1: ..., state2: ...})")
    probe = _pair_from(config, "probe", species) or target
    spec = _basis_spec_from(config, target)
    fields = _field_config_from(config)
    theta_rad = math.radians(float(config["theta_deg"]))
    r_grid_m = _grid_from(_section(config, "distance_um"), "distance_um") * 1e-6
    solver_kwargs = dict(cache=cache, method=method, dx=args.dx or DEFAULT_DX)

    converge = config.get("converge")
    report = None
    operator = None
    if converge:
        if not isinstance(converge, dict):
            raise ConfigError("config section 'converge' must be a mapping")
        curves, report = converge_basis(
            models, spec, r_grid_m, probe=probe,
            fields=None if fields.is_zero else fields, theta_rad=theta_rad,
            tolerance_ghz=float(converge.get("tolerance_GHz", 0.05)),
            max_steps=int(converge.get("max_steps", 4)),
            overlap_floor=float(converge.get("overlap_floor", 0.02)),
            **solver_kwargs,
        )
        spec = report.final_spec
        basis = build_pair_basis(models, spec, **solver_kwargs)
    else:
        basis = build_pair_basis(models, spec, **solver_kwargs)
        operator = build_interaction_operator(basis, **solver_kwargs)
        curves = solve_curves(
            basis, operator, r_grid_m, probe,
            fields=None if fields.is_zero else fields, theta_rad=theta_rad,
            **solver_kwargs,
        )

    out = _out_dir(args)
    resolved = dict(config)
    resolved["target"] = {
        "state1": _state_record(target.state1), "state2": _state_record(target.state2)
    }
    resolved["probe"] = {
        "state1": _state_record(probe.state1), "state2": _state_record(probe.state2)
    }
    sidecar = _sidecar_base(args, registry, resolved)
    sidecar["basis"] = {
        "product_states": len(basis.product_states),
        "symmetrized_states": len(basis),
        "solved_states": curves.solved_size,
        "leroy_radius_um": basis.leroy_radius_m * 1e6,
        "target_energy_GHz": joule_to_ghz(basis.target_energy_j),
        "reference_energy_GHz": joule_to_ghz(curves.reference_energy_j),
        "delta_n": spec.delta_n,
        "delta_l": spec.delta_l,
        "energy_window_GHz": spec.energy_window_ghz,
    }
    if report is not None:
        sidecar["convergence"] = {
            "converged": report.converged,
            "tolerance_GHz": report.tolerance_ghz,
            "steps": [
                {
                    "delta_n": step.spec.delta_n,
                    "delta_l": step.spec.delta_l,
                    "energy_window_GHz": step.spec.energy_window_ghz,
                    "basis_size": step.basis_size,
                    "solved_size": step.solved_size,
                    "drift_GHz": step.drift_ghz,
                }
                for step in report.steps
            ],
        }
    point_errors = [
        {"R_m": float(curves.r_m[i]), "message": message}
        for i, message in enumerate(curves.errors) if message is not None
    ]
    if point_errors:
        sidecar["solver_errors"] = point_errors

    rows = []
    for i in range(curves.r_m.size):
        if not curves.valid[i]:
            continue
        for k in range(curves.energies_j.shape[1]):
            rows.append((
                float(curves.r_m[i]), k,
                float(joule_to_ghz(curves.energies_j[i, k])),
                float(curves.overlaps[i, k]),
            ))
    curves_csv = _write_csv(out / "curves.csv", ["R_m", "curve_id", "energy_GHz", "overlap"], rows)
    sidecar["outputs"].append(curves_csv.name)
    basis_json = _write_json(out / "basis.json", basis.dump())
    sidecar["outputs"].append(basis_json.name)

    plots = []

    admix = config.get("admixture")
    epsilon = None
    if admix:
        if not isinstance(admix, dict) or "detuning_GHz" not in admix:
            raise ConfigError("config section 'admixture' needs detuning_GHz")
        epsilon = admixture_cut(
            curves,
            detuning_j=float(admix["detuning_GHz"]) * GHZ,
            bin_width_j=float(admix.get("bin_MHz", 100.0)) * MHZ,
        )
        admix_rows = [
            (float(r), float(eps)) for r, eps in zip(curves.r_m, epsilon)
            if math.isfinite(eps)
        ]
        admix_csv = _write_csv(out / "admixture.csv", ["R_m", "epsilon"], admix_rows)
        sidecar["outputs"].append(admix_csv.name)

    def _solve_at(r_um: float, theta_deg: float):
        nonlocal operator
        if operator is None:
            operator = build_interaction_operator(basis, **solver_kwargs)
        return solve_curves(
            basis, operator, [r_um * 1e-6], probe,
            fields=None if fields.is_zero else fields,
            theta_rad=math.radians(theta_deg), **solver_kwargs,
        )

    spectrum_section = config.get("spectrum")
    spectrum_rows = []
    if spectrum_section:
        if not isinstance(spectrum_section, dict) or "r_um" not in spectrum_section:
            raise ConfigError("config section 'spectrum' needs r_um")
        r_um = float(spectrum_section["r_um"])
        thetas = spectrum_section.get("theta_deg", [math.degrees(theta_rad)])
        if isinstance(thetas, (int, float)):
            thetas = [thetas]
        min_weight = float(spectrum_section.get("min_weight", 1e-6))
        for theta_deg in thetas:
            point = _solve_at(r_um, float(theta_deg))
            for freq_hz, weight in frequency_spectrum(point, r_um * 1e-6, min_weight):
                spectrum_rows.append((float(theta_deg), freq_hz / 1e6, weight))
        spectrum_csv = _write_csv(
            out / "spectrum.csv", ["theta_deg", "freq_MHz", "weight"], spectrum_rows
        )
        sidecar["outputs"].append(spectrum_csv.name)

    evolution_section = config.get("evolution")
    evolution_data = None
    if evolution_section:
        if not isinstance(evolution_section, dict) or "r_um" not in evolution_section:
            raise ConfigError("config section 'evolution' needs r_um")
        r_um = float(evolution_section["r_um"])
        theta_deg = float(evolution_section.get("theta_deg", math.degrees(theta_rad)))
        t_max_us = float(evolution_section.get("t_max_us", 1.0))
        points = int(evolution_section.get("points", 500))
        t_grid_s = np.linspace(0.0, t_max_us * 1e-6, points)
        point = _solve_at(r_um, theta_deg)
        p_probe = time_evolution(point, r_um * 1e-6, t_grid_s)
        evolution_data = (t_grid_s, p_probe)
        evolution_csv = _write_csv(
            out / "evolution.csv", ["t_us", "p_probe"],
            [(float(t * 1e6), float(p)) for t, p in zip(t_grid_s, p_probe)],
        )
        sidecar["outputs"].append(evolution_csv.name)

    if args.plot:
        from . import plotting

        plots.append(plotting.plot_potential_curves(curves, out / "curves.png"))
        if epsilon is not None:
            plots.append(plotting.plot_admixture_cut(curves, epsilon, out / "admixture.png"))
        if spectrum_rows:
            plots.append(plotting.plot_spectrum(spectrum_rows, out / "spectrum.png"))
        if evolution_data is not None:
            plots.append(plotting.plot_evolution(*evolution_data, out / "evolution.png"))
        sidecar["outputs"].extend(p.name for p in plots)

    _write_json(out / "run.json", sidecar)
    print(f"pair-potential: {len(rows)} curve points "
          f"({curves.solved_size} of {len(basis)} states solved) -> {out}")
    if cache is not None:
        cache.close()
    return 0


# --------------------------------------------------------------------------
# field maps


def _resolve_field_config(args, which: str) -> dict:
    config = _load_config(args.config)
    _override(config, "species", args.species)
    _override(config, "direction", args.direction)
    _override(config, "method", args.method)
    basis = _section(config, "basis")
    _override(basis, "delta_n", args.delta_n)
    _override(basis, "delta_l", args.delta_l)
    _override(basis, "energy_window_GHz", args.energy_window_ghz)
    config["basis"] = basis
    scan_key = "scan_mV_per_cm" if which == "electric" else "scan_T"
    scan = _section(config, scan_key)
    _override(scan, "min", args.scan_min)
    _override(scan, "max", args.scan_max)
    _override(scan, "points", args.scan_points)
    scan.setdefault("spacing", "linear")
    config[scan_key] = scan
    config.setdefault("direction", "z")
    config.setdefault("method", "numerov")
    return config


def _run_field_map(args, which: str) -> int:
    config = _resolve_field_config(args, which)
    scan_key = "scan_mV_per_cm" if which == "electric" else "scan_T"
    unknown = set(config) - {
        "species", "center", "basis", "mj", scan_key, "direction",
        "include_diamagnetic", "method",
    }
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "species" not in config:
        raise ConfigError("config needs a species name")
    if "center" not in config:
        raise ConfigError("config needs a center state (center: {n: ..., l: ..., j: ...})")
    registry = _registry(args)
    model = registry.get(str(config["species"]))
    cache = _open_cache(args, registry)
    center = _parse_state(config["center"], model.name, require_mj=False)

    basis_section = _section(config, "basis")
    mj_values = config.get("mj")
    if mj_values is not None:
        mj_values = [_parse_half(m) for m in mj_values]
    window = basis_section.get("energy_window_GHz")
    states = build_field_basis(
        model, center,
        delta_n=int(basis_section.get("delta_n", 2)),
        delta_l=int(basis_section.get("delta_l", 2)),
        energy_window_ghz=None if window is None else float(window),
        mj_values=mj_values,
    )
    include_diamagnetic = bool(config.get("include_diamagnetic", True))
    system = SingleAtomSystem(
        model=model, basis=tuple(states),
        config=FieldConfig(include_diamagnetic=include_diamagnetic),
        cache=cache, method=config["method"], dx=args.dx or DEFAULT_DX,
    )

    scan_values = _grid_from(_section(config, scan_key), scan_key, default_spacing="linear")
    to_si = _MV_PER_CM_TO_V_PER_M if which == "electric" else 1.0
    fmap = field_map(system, scan_values * to_si, direction=config["direction"], which=which)

    out = _out_dir(args)
    rows = []
    for i, value in enumerate(scan_values):
        if not fmap.ok[i]:
            continue
        energies = joule_to_ghz(fmap.energies_j[i])
        for k in range(energies.size):
            rows.append((
                float(value), float(energies[k]),
                str(fmap.basis[int(fmap.labels[i, k])]), float(fmap.overlaps[i, k]),
            ))
    csv_name = "stark_map.csv" if which == "electric" else "zeeman_map.csv"
    field_column = "field_mV_per_cm" if which == "electric" else "field_T"
    map_csv = _write_csv(out / csv_name, [field_column, "energy_GHz", "label", "overlap"], rows)

    resolved = dict(config)
    resolved["center"] = _state_record(center)
    sidecar = _sidecar_base(args, registry, resolved)
    sidecar["basis"] = {"states": len(states)}
    sidecar["outputs"].append(map_csv.name)
    point_errors = [
        {"field": float(scan_values[i]), "message": message}
        for i, message in enumerate(fmap.errors) if message is not None
    ]
    if point_errors:
        sidecar["solver_errors"] = point_errors
    if args.plot:
        from . import plotting

        unit = "E (V/m)" if which == "electric" else "B (T)"
        png = plotting.plot_field_map(fmap, out / csv_name.replace(".csv", ".png"), unit)
        sidecar["outputs"].append(png.name)
    _write_json(out / "run.json", sidecar)
    print(f"{args.command}: {len(states)} states x {scan_values.size} points -> {out}")
    if cache is not None:
        cache.close()
    return 0


def cmd_stark_map(args) -> int:
    return _run_field_map(args, "electric")


def cmd_zeeman_map(args) -> int:
    return _run_field_map(args, "magnetic")


# --------------------------------------------------------------------------
# single queries


def cmd_matrix_element(args) -> int:
    registry = _registry(args)
    model = registry.get(args.species)
    cache = _open_cache(args, registry)
    method = args.method or "numerov"
    dx = args.dx or DEFAULT_DX
    bra = StateOne(args.species, int(args.bra[0]), _parse_l(args.bra[1]),
                   _parse_half(args.bra[2]), _parse_half(args.bra[3]))
    ket = StateOne(args.species, int(args.ket[0]), _parse_l(args.ket[1]),
                   _parse_half(args.ket[2]), _parse_half(args.ket[3]))
    if args.kind == "multipole":
        value = multipole_element(model, bra, ket, kappa=args.kappa, q=args.q,
                                  cache=cache, method=method, dx=dx)
        unit = f"e a0^{args.kappa}" if args.kappa != 1 else "e a0"
        print(f"<{bra}| kappa={args.kappa} q={args.q} |{ket}> = {value!r} {unit}")
    else:
        value = momentum_element(model, bra, args.operator, args.q, ket,
                                 cache=cache, method=method, dx=dx)
        print(f"<{bra}| {args.operator}_q q={args.q} |{ket}> = {value!r} hbar")
    if cache is not None:
        stats = cache.stats()
        print(f"cache: hits={stats['hits']} misses={stats['misses']} "
              f"computes={stats['computes']} stored={stats['stored_current_version']} "
              f"({stats['path']})")
        cache.close()
    return 0


def cmd_state_info(args) -> int:
    registry = _registry(args)
    model = registry.get(args.species)
    state = StateOne(args.species, int(args.state[0]), _parse_l(args.state[1]),
                     _parse_half(args.state[2]))
    energy = level_energy(model, state.n, state.l, state.j)
    defect = quantum_defect(model, state.n, state.l, state.j)
    radius = leroy_radius(model, state, state, method=args.method or "numerov",
                          dx=args.dx or DEFAULT_DX)
    print(f"state: {state}")
    print(f"energy: {energy.ev:.6f} eV ({energy.ghz:.6f} GHz)")
    print(f"quantum defect: {defect:.8f}")
    print(f"effective n: {model.effective_n(state.n, state.l, state.j):.8f}")
    print(f"Le Roy radius (pair with itself): {radius * 1e6:.6f} um")
    return 0


def cmd_cache(args) -> int:
    registry = _registry(args)
    path = Path(args.cache or _DEFAULT_CACHE)
    cache = open_cache(path, registry, dx=args.dx or DEFAULT_DX)
    try:
        if args.action == "inspect":
            print(json.dumps(cache.stats(), indent=2, sort_keys=True))
        else:
            removed = cache.clear(all_versions=args.all_versions)
            print(f"removed {removed} cached entries from {path}")
    finally:
        cache.close()
    return 0


# --------------------------------------------------------------------------
# argument parsing


def _add_common(parser: argparse.ArgumentParser, with_out: bool = True) -> None:
    parser.add_argument("--config", help="YAML configuration file")
    parser.add_argument("--species-file", help="species data file (defaults to the packaged one)")
    parser.add_argument("--cache", help="element-cache path (default ~/.cache/rydpair/elements.sqlite)")
    parser.add_argument("--no-cache", action="store_true", help="compute without any element cache")
    parser.add_argument("--method", choices=("numerov", "whittaker"), help="radial integration route")
    parser.add_argument("--dx", type=float, help="radial grid step (sqrt-scaled coordinate)")
    if with_out:
        parser.add_argument("--out", help="output directory (default: current directory)")
        parser.add_argument("--plot", action="store_true", help="render PNG figures next to the CSVs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rydpair",
        description="Rydberg pair-interaction potentials, field maps, and matrix elements.",
    )
    parser.add_argument("--version", action="version", version=f"rydpair {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    pair = commands.add_parser(
        "pair-potential",
        help="interaction potential curves over distance (plus optional spectrum/evolution/admixture)",
    )
    _add_common(pair)
    pair.add_argument("--theta-deg", type=float, help="angle between interatomic axis and z")
    pair.add_argument("--delta-n", type=int, help="basis window in n")
    pair.add_argument("--delta-l", type=int, help="basis window in l")
    pair.add_argument("--energy-window-ghz", type=float, help="basis energy window (GHz)")
    pair.add_argument("--rho-max", type=int, help="highest multipole power of 1/R")
    pair.add_argument("--r-min-um", type=float, help="distance grid start (um)")
    pair.add_argument("--r-max-um", type=float, help="distance grid end (um)")
    pair.add_argument("--r-points", type=int, help="distance grid size")
    pair.add_argument("--efield-mv-per-cm", type=float, nargs=3, metavar=("X", "Y", "Z"),
                      help="electric field vector (mV/cm)")
    pair.add_argument("--bfield-t", type=float, nargs=3, metavar=("X", "Y", "Z"),
                      help="magnetic field vector (T)")
    pair.set_defaults(func=cmd_pair_potential)

    for name, func, scan_help in (
        ("stark-map", cmd_stark_map, "electric-field scan (mV/cm)"),
        ("zeeman-map", cmd_zeeman_map, "magnetic-field scan (T)"),
    ):
        sub = commands.add_parser(name, help=f"single-atom level map over an {scan_help}")
        _add_common(sub)
        sub.add_argument("--species", help="species name")
        sub.add_argument("--direction", help="field direction: x, y, z")
        sub.add_argument("--delta-n", type=int, help="basis window in n")
        sub.add_argument("--delta-l", type=int, help="basis window in l")
        sub.add_argument("--energy-window-ghz", type=float, help="basis energy window (GHz)")
        sub.add_argument("--scan-min", type=float, help=f"{scan_help} start")
        sub.add_argument("--scan-max", type=float, help=f"{scan_help} end")
        sub.add_argument("--scan-points", type=int, help="number of scan points")
        sub.set_defaults(func=func)

    element = commands.add_parser("matrix-element", help="one multipole or momentum matrix element")
    _add_common(element, with_out=False)
    element.add_argument("--species", required=True)
    element.add_argument("--bra", required=True, nargs=4, metavar=("N", "L", "J", "MJ"))
    element.add_argument("--ket", required=True, nargs=4, metavar=("N", "L", "J", "MJ"))
    element.add_argument("--kind", choices=("multipole", "momentum"), default="multipole")
    element.add_argument("--kappa", type=int, default=1, help="multipole order")
    element.add_argument("--q", type=int, default=0, help="spherical component")
    element.add_argument("--operator", choices=("l", "s"), default="l",
                         help="momentum operator (momentum kind only)")
    element.set_defaults(func=cmd_matrix_element)

    info = commands.add_parser("state-info", help="energy, defect, and Le Roy radius of one state")
    _add_common(info, with_out=False)
    info.add_argument("--species", required=True)
    info.add_argument("--state", required=True, nargs=3, metavar=("N", "L", "J"))
    info.set_defaults(func=cmd_state_info)

    cache = commands.add_parser("cache", help="inspect or clear the element cache")
    cache.add_argument("action", choices=("inspect", "clear"))
    cache.add_argument("--cache", help="cache path (default ~/.cache/rydpair/elements.sqlite)")
    cache.add_argument("--species-file", help="species data file the cache is stamped for")
    cache.add_argument("--dx", type=float, help="radial grid step the cache is stamped for")
    cache.add_argument("--all-versions", action="store_true",
                       help="clear entries for every version stamp, not just the active one")
    cache.set_defaults(func=cmd_cache)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except DataFileError as exc:
        print(f"species data error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
