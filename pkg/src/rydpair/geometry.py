"""Frame transformations between the lab frame and the calculation frame.

Pair interactions are simplest with the quantization axis along the
interatomic axis, while states and fields are specified in the lab frame.
The two frames are related by a rotation about the y axis by the angle
theta between the interatomic axis and the lab z axis; the interatomic
axis is restricted to the lab xz plane, so a single angle suffices and
the small Wigner d-matrix replaces the full D-matrix.

Fields transform with the Cartesian rotation matrix, states with

    |n l j mj>_lab = sum_mj' d^j_{mj mj'}(theta) |n l j mj'>_calc ,

and a lab-frame probe pair maps onto the calculation-frame pair basis by
rotating both constituents and projecting the tensor product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .angular import HalfInteger, wigner_d
from .errors import ConfigError
from .fields import FieldConfig
from .species import StateOne


@dataclass(frozen=True)
class InteractionAngle:
    """Angle between the interatomic axis and the lab z axis, in radians.

    The interatomic axis must lie in the lab xz plane; 0 <= theta <= pi.
    """

    theta_rad: float

    def __post_init__(self) -> None:
        theta = float(self.theta_rad)
        if not math.isfinite(theta):
            raise ConfigError(f"interaction angle must be finite, got {self.theta_rad!r}")
        if not 0.0 <= theta <= math.pi:
            raise ConfigError(f"interaction angle must be within [0, pi] rad, got {theta}")
        object.__setattr__(self, "theta_rad", theta)

    @classmethod
    def from_degrees(cls, degrees: float) -> "InteractionAngle":
        return cls(math.radians(float(degrees)))

    @property
    def degrees(self) -> float:
        return math.degrees(self.theta_rad)


def interaction_angle_from_axis(axis: Sequence[float]) -> InteractionAngle:
    """Interaction angle of an interatomic-axis vector in the lab xz plane.

    Axes with a y component describe azimuthal geometries that a single
    rotation angle cannot express; they are rejected rather than silently
    projected (full Euler-angle rotations are not supported).
    """
    x, y, z = (float(c) for c in axis)
    norm = math.sqrt(x * x + y * y + z * z)
    if norm == 0.0:
        raise ConfigError("interatomic axis must be a nonzero vector")
    if abs(y) > 1e-12 * norm:
        raise ConfigError(
            "interatomic axis must lie in the lab xz plane; azimuthal geometries "
            "need full Euler-angle rotations, which are not supported"
        )
    if x < 0.0:
        x, z = -x, -z
    return InteractionAngle(math.atan2(x, z))


def rotation_matrix(theta: float) -> np.ndarray:
    """Rotation about the y axis taking lab-frame vectors to the calculation frame."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])


def rotate_field(vec_lab: Sequence[float], theta: float) -> tuple[float, float, float]:
    """Transform a lab-frame field vector to the calculation frame."""
    fx, fy, fz = (float(c) for c in vec_lab)
    c, s = math.cos(theta), math.sin(theta)
    return (c * fx - s * fz, fy, s * fx + c * fz)


def rotate_config(config: FieldConfig, theta: float) -> FieldConfig:
    """FieldConfig with both field vectors transformed to the calculation frame."""
    return replace(
        config,
        efield_vm=rotate_field(config.efield_vm, theta),
        bfield_t=rotate_field(config.bfield_t, theta),
    )


def rotate_state(state: StateOne, theta: float) -> list[tuple[StateOne, float]]:
    """Expansion of a lab-frame state over calculation-frame mj states.

    Returns (state with mj', coefficient d^j_{mj mj'}(theta)) for every mj'
    with a nonzero coefficient; the coefficients form a unit-norm row of
    the (real, orthogonal) small Wigner d-matrix.
    """
    if state.mj is None:
        raise ConfigError(f"cannot rotate {state}: mj is not set")
    terms = []
    mjp = -state.j
    while mjp <= state.j:
        coefficient = wigner_d(state.j, state.mj, mjp, theta)
        if coefficient != 0.0:
            terms.append((state.with_mj(mjp), coefficient))
        mjp = mjp + HalfInteger(1)
    return terms


def probe_state_in_calc_frame(pair, theta: float, basis) -> np.ndarray:
    """Coefficients of a lab-frame probe pair over a calculation-frame pair basis.

    Both constituents are rotated with :func:`rotate_state` and the tensor
    product is projected onto `basis` (product or symmetry-adapted).  The
    squared coefficients sum to at most 1, with equality when the basis
    contains all mj partners of the probe pair.
    """
    amplitudes = {}
    for first, c1 in rotate_state(pair.state1, theta):
        for second, c2 in rotate_state(pair.state2, theta):
            amplitudes[(first, second)] = c1 * c2
    product_vector = np.zeros(len(basis.product_states))
    for index, product in enumerate(basis.product_states):
        product_vector[index] = amplitudes.get((product.state1, product.state2), 0.0)
    return basis.transform.conj().T @ product_vector
