"""Rydberg pair-interaction potentials from single-atom data.

The package computes interaction potential curves between two Rydberg
atoms from quantum-defect energies, model-potential radial wave functions,
and a multipole expansion of the electrostatic pair interaction, with
optional external electric and magnetic fields at arbitrary angle to the
interatomic axis.
"""

from .angular import HalfInteger, half, wigner_3j, wigner_6j, wigner_d
from .errors import ConfigError, DataFileError, NumericalError, RydpairError
from .fields import (
    FieldConfig,
    FieldMap,
    SingleAtomSystem,
    build_field_basis,
    field_map,
    stark_operator,
    zeeman_operator,
)
from .geometry import (
    InteractionAngle,
    interaction_angle_from_axis,
    probe_state_in_calc_frame,
    rotate_config,
    rotate_field,
    rotate_state,
)
from .operators import (
    ElementCache,
    momentum_element,
    multipole_element,
    open_cache,
    scalar_moment,
)
from .pair import (
    AssembledPair,
    BasisSpec,
    InteractionOperator,
    PairBasis,
    StateTwo,
    assemble_total,
    build_interaction_operator,
    build_pair_basis,
    interaction_coefficient_matrix,
    pair_energy_j,
    pair_field_operator,
)
from .solver import (
    ConvergenceReport,
    PotentialCurves,
    admixture_cut,
    converge_basis,
    dominant_frequency,
    frequency_spectrum,
    solve_curves,
    time_evolution,
)
from .species import (
    LevelEnergy,
    QuantumDefectSeries,
    SpeciesModel,
    SpeciesRegistry,
    StateOne,
    default_registry,
    leroy_radius,
    level_energy,
    load_species_data,
    quantum_defect,
    state_energy,
)

__version__ = "0.1.0"

__all__ = [
    "AssembledPair",
    "BasisSpec",
    "ConfigError",
    "ConvergenceReport",
    "DataFileError",
    "ElementCache",
    "FieldConfig",
    "FieldMap",
    "HalfInteger",
    "InteractionAngle",
    "InteractionOperator",
    "LevelEnergy",
    "NumericalError",
    "PairBasis",
    "PotentialCurves",
    "QuantumDefectSeries",
    "RydpairError",
    "SingleAtomSystem",
    "SpeciesModel",
    "SpeciesRegistry",
    "StateOne",
    "StateTwo",
    "admixture_cut",
    "assemble_total",
    "build_field_basis",
    "build_interaction_operator",
    "build_pair_basis",
    "converge_basis",
    "default_registry",
    "dominant_frequency",
    "field_map",
    "frequency_spectrum",
    "half",
    "interaction_angle_from_axis",
    "interaction_coefficient_matrix",
    "leroy_radius",
    "level_energy",
    "load_species_data",
    "momentum_element",
    "multipole_element",
    "open_cache",
    "pair_energy_j",
    "pair_field_operator",
    "probe_state_in_calc_frame",
    "quantum_defect",
    "rotate_config",
    "rotate_field",
    "rotate_state",
    "scalar_moment",
    "solve_curves",
    "stark_operator",
    "state_energy",
    "time_evolution",
    "wigner_3j",
    "wigner_6j",
    "wigner_d",
    "zeeman_operator",
    "__version__",
]
