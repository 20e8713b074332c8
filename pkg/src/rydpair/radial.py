"""Radial Rydberg wave functions and matrix elements.

Two independent routes compute the radial wave function of a Rydberg
valence electron, both working in atomic units on a square-root radial
grid x = sqrt(r) with the substitution

    X(x) = x^{3/2} Psi_rad(x^2),   X''(x) = g(x) X(x),
    g(x) = (2l + 1/2)(2l + 3/2) / x^2 + 8 x^2 (V(x^2) - E),

which places roughly constant resolution per oscillation across the
whole Coulomb region.  Normalization is 2 * int X^2 x^2 dx = 1 and
radial moments follow from <r^kappa> = 2 * int X_1 X_2 x^{2 + 2 kappa} dx.

* :func:`numerov_wavefunction` integrates the full parametric core model
  potential (screened Coulomb core, core polarization, spin-orbit term)
  inward with the Numerov recurrence at the measured level energy.

* :func:`whittaker_wavefunction` realizes the Coulomb approximation: the
  analytic bound solution of the pure -1/r potential at the quantum-defect
  energy, Psi_rad(r) = [nu^2 Gamma(nu+l+1) Gamma(nu-l)]^{-1/2}
  W_{nu, l+1/2}(2r/nu) / r with nu = n*.  The shape is produced by a
  high-order Runge-Kutta integration of the same x-space equation with the
  bare Coulomb potential and then pinned, in log space, to arbitrary
  precision evaluations of the Whittaker function near the outer antinode,
  so its normalization is analytic rather than numerical.

Keeping the two routes free of shared potential, energy, integrator, and
normalization machinery makes their agreement a meaningful cross check.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.integrate import simpson, solve_ivp
from scipy.special import gammaln

from .constants import ALPHA_FS, joule_to_au
from .errors import ConfigError, NumericalError
from .species import SpeciesModel, StateOne, level_energy

# Default square-root-grid step in units of sqrt(a_0).  One radial
# oscillation spans about 1.1 in x for Coulomb-like states independent of
# n, so 0.01 resolves every node with about a hundred points.
DEFAULT_DX = 0.01

# Rescale threshold for the inward integration; only shape matters before
# normalization, so the solution is renormalized whenever it grows past
# this to keep the recurrence inside floating-point range.
_RESCALE_LIMIT = 1e250


def default_r_max_a0(n: int) -> float:
    """Outer grid radius 2 n (n + 15), comfortably past the classical
    turning point 2 n^2 so the forbidden tail decays to negligible size."""
    return 2.0 * n * (n + 15.0)


def default_r_min_a0(model: SpeciesModel) -> float:
    """Inner grid radius: the core polarizability length alpha_d^(1/3),
    below which the one-electron model loses meaning; 0.01 a_0 for a bare
    Coulomb core."""
    if model.alpha_d_au > 0.0:
        return model.alpha_d_au ** (1.0 / 3.0)
    return 0.01


@dataclass(frozen=True)
class ModelPotential:
    """The parametric one-electron core potential for one (l, j) channel.

    In atomic units,

        V(r) = V_C(r) + V_P(r) + V_so(r)
        V_C(r) = -(1 + (Z-1) e^{-a1 r} - r (a3 + a4 r) e^{-a2 r}) / r
        V_P(r) = -alpha_d / (2 r^4) * (1 - e^{-(r/r_c)^6})
        V_so(r) = (g_s alpha^2 / 4) <l.s> / r^3   for r > r_c, else 0

    with <l.s> = [j(j+1) - l(l+1) - 3/4] / 2.  The spin-orbit term is only
    applied outside the cutoff radius where the expansion is meaningful.
    """

    z: int
    a1: float
    a2: float
    a3: float
    a4: float
    alpha_d_au: float
    r_c_a0: float
    l: int
    ls_coupling: float
    spin_orbit: bool = True
    g_s: float = 2.0023193043622

    @classmethod
    def for_state(cls, model: SpeciesModel, state: StateOne, spin_orbit: bool = True) -> "ModelPotential":
        coeffs = model.potential_coefficients(state.l)
        ls = 0.5 * (float(state.j) * (float(state.j) + 1.0) - state.l * (state.l + 1.0) - 0.75)
        return cls(
            z=model.z,
            a1=coeffs.a1,
            a2=coeffs.a2,
            a3=coeffs.a3,
            a4=coeffs.a4,
            alpha_d_au=model.alpha_d_au,
            r_c_a0=model.r_c_a0,
            l=state.l,
            ls_coupling=ls,
            spin_orbit=spin_orbit,
            g_s=model.g_s,
        )

    def __call__(self, r: np.ndarray | float) -> np.ndarray | float:
        r = np.asarray(r, dtype=float)
        z_eff = 1.0 + (self.z - 1.0) * np.exp(-self.a1 * r) - r * (self.a3 + self.a4 * r) * np.exp(-self.a2 * r)
        v = -z_eff / r
        if self.alpha_d_au != 0.0:
            v = v - self.alpha_d_au / (2.0 * r**4) * (1.0 - np.exp(-((r / self.r_c_a0) ** 6)))
        if self.spin_orbit and self.ls_coupling != 0.0:
            v = v + np.where(
                r > self.r_c_a0,
                self.g_s * ALPHA_FS**2 / 4.0 * self.ls_coupling / r**3,
                0.0,
            )
        return v


@dataclass(frozen=True)
class CoulombPotential:
    """The bare -1/r potential used by the Coulomb-approximation route."""

    def __call__(self, r: np.ndarray | float) -> np.ndarray | float:
        return -1.0 / np.asarray(r, dtype=float)


@dataclass(frozen=True)
class RadialGrid:
    """A uniform grid in x = sqrt(r), aligned to the lattice x_i = i dx.

    Anchoring every grid to multiples of dx makes grids of different states
    of the same species nested, so overlap integrals never interpolate.
    """

    i_min: int
    i_max: int
    dx: float

    @classmethod
    def for_range(cls, r_min_a0: float, r_max_a0: float, dx: float) -> "RadialGrid":
        if not 0.0 < r_min_a0 < r_max_a0:
            raise ConfigError(f"need 0 < r_min < r_max, got {r_min_a0}, {r_max_a0}")
        if dx <= 0.0:
            raise ConfigError(f"grid step must be positive, got {dx}")
        i_min = max(1, math.ceil(math.sqrt(r_min_a0) / dx))
        i_max = math.ceil(math.sqrt(r_max_a0) / dx)
        if i_max - i_min < 16:
            raise ConfigError("radial grid has fewer than 16 points; check r_min/r_max/dx")
        return cls(i_min=i_min, i_max=i_max, dx=dx)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.i_min, self.i_max + 1, dtype=float) * self.dx

    @property
    def r(self) -> np.ndarray:
        return self.x**2

    def __len__(self) -> int:
        return self.i_max - self.i_min + 1


@dataclass(frozen=True)
class RadialWavefunction:
    """A normalized radial wave function on the square-root grid.

    ``values`` holds X(x) = x^{3/2} Psi_rad; ``normalization_residual`` is
    zero for the numerically normalized route and records the deviation of
    the quadrature norm from one for the analytically normalized route.
    ``truncated`` flags states whose unphysical divergence toward the origin
    was cut off at the innermost amplitude minimum.
    """

    state: StateOne
    method: str
    grid: RadialGrid
    values: np.ndarray
    energy_au: float
    normalization_residual: float
    truncated: bool
    nodes: int

    @property
    def psi(self) -> np.ndarray:
        """Psi_rad(r) on the grid radii (units a_0^{-3/2})."""
        return self.values / self.grid.x**1.5


def _g_from_potential(x: np.ndarray, potential, l: int, energy_au: float) -> np.ndarray:
    centrifugal = (2 * l + 0.5) * (2 * l + 1.5) / x**2
    return centrifugal + 8.0 * x**2 * (potential(x**2) - energy_au)


def _truncate_divergence(x: np.ndarray, y: np.ndarray, g: np.ndarray) -> tuple[np.ndarray, bool]:
    """Cut off the divergence an inward integration develops below the
    classically allowed region.

    The integrated solution is only trustworthy down to the innermost
    boundary of the allowed region (g < 0); below it the exponentially
    growing unphysical solution takes over.  If the amplitude at the inner
    grid edge exceeds ten times the innermost amplitude minimum, the values
    below that minimum are zeroed and the state flagged as truncated.
    """
    allowed = np.flatnonzero(g < 0.0)
    if allowed.size == 0:
        raise NumericalError("no classically allowed region on the radial grid")
    inner = allowed[0]
    if inner == 0:
        return y, False
    k = int(np.argmin(np.abs(y[: inner + 1])))
    if abs(y[0]) > 10.0 * abs(y[k]):
        y = y.copy()
        y[:k] = 0.0
        return y, True
    return y, False


def _count_nodes(y: np.ndarray) -> int:
    good = np.abs(y) > 1e-8 * np.max(np.abs(y))
    signs = np.sign(y[good])
    return int(np.sum(signs[:-1] * signs[1:] < 0))


def numerov_wavefunction(
    model: SpeciesModel,
    state: StateOne,
    energy_au: float | None = None,
    dx: float = DEFAULT_DX,
    r_min_a0: float | None = None,
    r_max_a0: float | None = None,
    spin_orbit: bool = True,
) -> RadialWavefunction:
    """Radial wave function from Numerov integration of the model potential.

    The equation is integrated inward from the outer grid edge, where the
    forbidden-region solution is seeded with a vanishing tail, so the
    physical (decaying) solution dominates exponentially.  The energy
    defaults to the measured level energy, which compensates the
    approximate character of the core model at large radii.
    """
    if energy_au is None:
        energy_au = level_energy(model, state.n, state.l, state.j).joules * _JOULE_TO_AU
    grid = RadialGrid.for_range(
        r_min_a0 if r_min_a0 is not None else default_r_min_a0(model),
        r_max_a0 if r_max_a0 is not None else default_r_max_a0(state.n),
        dx,
    )
    x = grid.x
    potential = ModelPotential.for_state(model, state, spin_orbit=spin_orbit)
    g = _g_from_potential(x, potential, state.l, energy_au)

    n_pts = len(x)
    y = np.zeros(n_pts)
    y[-1] = 0.0
    y[-2] = 1e-10
    c = dx * dx / 12.0
    for i in range(n_pts - 2, 0, -1):
        y[i - 1] = ((2.0 + 10.0 * c * g[i]) * y[i] - (1.0 - c * g[i + 1]) * y[i + 1]) / (1.0 - c * g[i - 1])
        if abs(y[i - 1]) > _RESCALE_LIMIT:
            y[i - 1 :] /= _RESCALE_LIMIT

    y, truncated = _truncate_divergence(x, y, g)

    norm = 2.0 * simpson(y**2 * x**2, dx=dx)
    if not norm > 0.0:
        raise NumericalError(f"radial norm collapsed for {state}")
    y /= math.sqrt(norm)
    if y[int(np.argmax(np.abs(y)))] < 0.0:
        y = -y

    return RadialWavefunction(
        state=state.without_mj(),
        method="numerov",
        grid=grid,
        values=y,
        energy_au=energy_au,
        normalization_residual=0.0,
        truncated=truncated,
        nodes=_count_nodes(y),
    )


def _coulomb_shape(grid: RadialGrid, l: int, energy_au: float) -> tuple[np.ndarray, np.ndarray]:
    """Inward high-order Runge-Kutta integration of the bare-Coulomb
    x-space equation; returns (log|y|, sign) per grid point, scale-free."""
    x = grid.x
    potential = CoulombPotential()

    def rhs(t, s):
        gx = (2 * l + 0.5) * (2 * l + 1.5) / t**2 + 8.0 * t**2 * (-1.0 / t**2 - energy_au)
        return (s[1], gx * s[0])

    g_outer = (2 * l + 0.5) * (2 * l + 1.5) / x[-1] ** 2 + 8.0 * x[-1] ** 2 * (potential(x[-1] ** 2) - energy_au)
    if g_outer <= 0.0:
        raise NumericalError("outer grid edge is not in the classically forbidden region")

    log_y = np.full(len(x), -np.inf)
    sign_y = np.zeros(len(x))
    state = np.array([1.0, -math.sqrt(g_outer)])
    log_scale = 0.0
    log_y[-1] = 0.0
    sign_y[-1] = 1.0

    n_segments = 64
    boundaries = np.linspace(len(x) - 1, 0, n_segments + 1).astype(int)
    for a, b in zip(boundaries[:-1], boundaries[1:]):
        if a == b:
            continue
        t_eval = x[b:a][::-1]
        sol = solve_ivp(
            rhs,
            (x[a], x[b]),
            state,
            method="DOP853",
            t_eval=t_eval,
            rtol=1e-13,
            atol=1e-300,
        )
        if not sol.success:
            raise NumericalError(f"Coulomb shape integration failed: {sol.message}")
        seg = sol.y[0][::-1]
        with np.errstate(divide="ignore"):
            log_y[b:a] = np.log(np.abs(seg)) + log_scale
        sign_y[b:a] = np.sign(seg)
        state = sol.y[:, -1].copy()
        peak = max(abs(state[0]), abs(state[1]))
        if peak > 1e100:
            state /= peak
            log_scale += math.log(peak)

    return log_y, sign_y


def whittaker_wavefunction(
    model: SpeciesModel,
    state: StateOne,
    dx: float = DEFAULT_DX,
    r_min_a0: float | None = None,
    r_max_a0: float | None = None,
) -> RadialWavefunction:
    """Radial wave function in the Coulomb approximation.

    The bound solution of the -1/r potential at the quantum-defect energy
    E = -1/(2 nu^2) is the Whittaker function,

        Psi_rad(r) = [nu^2 Gamma(nu+l+1) Gamma(nu-l)]^{-1/2}
                     W_{nu, l+1/2}(2 r / nu) / r ,

    normalized analytically by the Gamma-function prefactor.  The shape is
    integrated in x space and pinned to arbitrary-precision values of
    W_{nu, l+1/2} near the outer antinode; the quadrature norm is then
    recorded as ``normalization_residual`` instead of being imposed.
    """
    nu = model.effective_n(state.n, state.l, state.j)
    if nu <= state.l:
        raise ConfigError(f"effective quantum number {nu:.3f} must exceed l={state.l} for {state}")
    energy_au = -0.5 / nu**2
    grid = RadialGrid.for_range(
        r_min_a0 if r_min_a0 is not None else default_r_min_a0(model),
        r_max_a0 if r_max_a0 is not None else default_r_max_a0(state.n),
        dx,
    )
    x = grid.x
    log_y, sign_y = _coulomb_shape(grid, state.l, energy_au)

    # Pin the scale-free shape to W_{nu, l+1/2} at two points near the outer
    # antinode, where the amplitude is large and the function well behaved.
    # The search must stay inside the classically allowed region: beneath the
    # inner centrifugal barrier the inward sweep is dominated by the growing
    # unphysical solution, and for near-circular states that divergence
    # overtakes the physical maximum.
    g = _g_from_potential(x, CoulombPotential(), state.l, energy_au)
    finite = np.isfinite(log_y)
    anchorable = finite & (g < 0.0)
    if not np.any(anchorable):
        raise NumericalError(f"no classically allowed region on the grid for {state}")
    peak = int(np.argmax(np.where(anchorable, log_y, -np.inf)))
    candidates = [
        i
        for i in range(max(0, peak - 40), min(len(x), peak + 41))
        if anchorable[i] and sign_y[i] != 0.0
    ]
    candidates.sort(key=lambda i: -log_y[i])
    anchors = [candidates[0]]
    for i in candidates[1:]:
        if abs(i - anchors[0]) >= 5:
            anchors.append(i)
            break
    if len(anchors) < 2:
        raise NumericalError(f"cannot place two anchor points for {state}")

    log_norm = -0.5 * (2.0 * math.log(nu) + gammaln(nu + state.l + 1.0) + gammaln(nu - state.l))
    mpmath.mp.dps = 40
    offsets = []
    flips = []
    for i in anchors:
        z = mpmath.mpf(2.0) * mpmath.mpf(x[i]) ** 2 / mpmath.mpf(nu)
        w = mpmath.whitw(mpmath.mpf(nu), mpmath.mpf(state.l) + mpmath.mpf(0.5), z)
        if w == 0:
            raise NumericalError(f"anchor point landed on a node for {state}")
        target = log_norm + float(mpmath.log(abs(w))) - 0.5 * math.log(x[i])
        offsets.append(target - log_y[i])
        flips.append(1.0 if (w > 0) == (sign_y[i] > 0) else -1.0)
    if flips[0] != flips[1] or abs(offsets[0] - offsets[1]) > 1e-6:
        raise NumericalError(
            f"anchor points disagree for {state}: offsets {offsets}, signs {flips}"
        )
    offset = 0.5 * (offsets[0] + offsets[1])

    y = np.where(finite, sign_y * np.exp(np.where(finite, log_y, -np.inf) + offset), 0.0) * flips[0]

    y, truncated = _truncate_divergence(x, y, g)

    residual = abs(2.0 * simpson(y**2 * x**2, dx=dx) - 1.0)

    return RadialWavefunction(
        state=state.without_mj(),
        method="whittaker",
        grid=grid,
        values=y,
        energy_au=energy_au,
        normalization_residual=residual,
        truncated=truncated,
        nodes=_count_nodes(y),
    )


_JOULE_TO_AU = joule_to_au(1.0)


@functools.lru_cache(maxsize=512)
def _cached_wavefunction(
    model: SpeciesModel,
    state: StateOne,
    method: str,
    dx: float,
    r_min_a0: float | None,
    r_max_a0: float | None,
    spin_orbit: bool,
) -> RadialWavefunction:
    if method == "numerov":
        return numerov_wavefunction(
            model, state, dx=dx, r_min_a0=r_min_a0, r_max_a0=r_max_a0, spin_orbit=spin_orbit
        )
    if method == "whittaker":
        return whittaker_wavefunction(model, state, dx=dx, r_min_a0=r_min_a0, r_max_a0=r_max_a0)
    raise ConfigError(f"unknown radial method {method!r}; use 'numerov' or 'whittaker'")


def wavefunction(
    model: SpeciesModel,
    state: StateOne,
    method: str = "numerov",
    dx: float = DEFAULT_DX,
    r_min_a0: float | None = None,
    r_max_a0: float | None = None,
    spin_orbit: bool = True,
) -> RadialWavefunction:
    """Memoized access to either wave function route."""
    return _cached_wavefunction(model, state.without_mj(), method, dx, r_min_a0, r_max_a0, spin_orbit)


def radial_matrix_element(
    model: SpeciesModel,
    state1: StateOne,
    state2: StateOne,
    kappa: int,
    method: str = "numerov",
    dx: float = DEFAULT_DX,
    r_min_a0: float | None = None,
    spin_orbit: bool = True,
) -> float:
    """The radial moment <state1| r^kappa |state2> in units of a_0^kappa.

    Both wave functions live on the same dx lattice with the same inner
    anchor, so the integrand is formed point by point on the shorter grid;
    beyond it the shorter state's tail is negligible by construction.
    """
    if kappa < 0 or int(kappa) != kappa:
        raise ConfigError(f"radial moment order must be a non-negative integer, got {kappa}")
    wf1 = wavefunction(model, state1, method=method, dx=dx, r_min_a0=r_min_a0, spin_orbit=spin_orbit)
    wf2 = wavefunction(model, state2, method=method, dx=dx, r_min_a0=r_min_a0, spin_orbit=spin_orbit)
    if wf1.grid.i_min != wf2.grid.i_min or wf1.grid.dx != wf2.grid.dx:
        raise ConfigError("radial grids are not aligned; states must share species and dx")
    n_common = min(len(wf1.grid), len(wf2.grid))
    x = wf1.grid.x[:n_common]
    integrand = wf1.values[:n_common] * wf2.values[:n_common] * x ** (2 + 2 * kappa)
    return 2.0 * simpson(integrand, dx=dx)


def radial_expectation(
    model: SpeciesModel,
    state: StateOne,
    kappa: int,
    method: str = "numerov",
    dx: float = DEFAULT_DX,
    r_min_a0: float | None = None,
    spin_orbit: bool = True,
) -> float:
    """<r^kappa> of a single state in units of a_0^kappa."""
    return radial_matrix_element(
        model, state, state, kappa, method=method, dx=dx, r_min_a0=r_min_a0, spin_orbit=spin_orbit
    )


def write_wavefunction(wf: RadialWavefunction, path) -> None:
    """Write (r / a_0, Psi_rad * a_0^{3/2}) as two whitespace-separated columns."""
    data = np.column_stack([wf.grid.r, wf.psi])
    header = (
        f"radial wave function for {wf.state} ({wf.method})\n"
        f"energy = {wf.energy_au:.12e} E_h, nodes = {wf.nodes}, "
        f"truncated = {wf.truncated}, norm residual = {wf.normalization_residual:.3e}\n"
        "r_a0 psi_a0^-3/2"
    )
    np.savetxt(path, data, header=header)
