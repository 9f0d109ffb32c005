"""Continuum partial-wave two-body solvers.

Conventions, fixed here once and used consistently by every routine:

* momentum-space kernel ``v(p, p')``, real and symmetric, with the radial
  measure ``int_0^inf q^2 dq``;
* transition amplitude ``t = v + v g0(E + i0) t`` with
  ``g0 = 2 mu / (p0^2 - q^2 + i0)`` and on-shell momentum
  ``p0 = sqrt(2 mu E)``;
* standing-wave amplitude ``k = v + v g2 k`` with g2 the principal-value
  part of g0;
* on-shell density ``rho(E) = mu * p0``;
* composition ``t = k / (1 + i pi rho k)``, scattering matrix
  ``S = 1 - 2 i pi rho t`` and phase shift ``delta = arctan(-pi rho k)``,
  so ``t = -exp(i delta) sin(delta) / (pi rho)``.

The principal-value singularity is handled by on-shell subtraction: the
quadrature runs over Gauss-Legendre nodes mapped to (0, inf) by
``p = c tan(pi (x + 1) / 4)`` and the on-shell point is appended as an
extra grid row, following the standard one-extra-point discretization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import operators
from .errors import ModelError, QuadratureError, SolveError

DEFAULT_NODES = 96
TOL_UNITARY = 1e-12


@dataclass(frozen=True)
class PotentialModel:
    """A partial-wave potential kernel.

    kernel(p, pp) must accept broadcasting arrays and return a real
    symmetric kernel; params are kept for reporting and for the analytic
    shortcuts available to specific families.
    """

    family: str
    params: dict
    kernel: Callable[[np.ndarray, np.ndarray], np.ndarray]

    def range_scale(self) -> float:
        return float(self.params.get("beta", self.params.get("width", 1.0)))


def yamaguchi_potential(strength: float, beta: float) -> PotentialModel:
    """Separable kernel v(p,p') = strength * g(p) g(p'), g(p) = 1/(p^2+beta^2)."""
    if beta <= 0:
        raise ModelError("beta must be positive")

    def kernel(p, pp):
        return strength / ((p**2 + beta**2) * (pp**2 + beta**2))

    return PotentialModel("yamaguchi_separable", {"strength": strength, "beta": beta}, kernel)


def gaussian_potential(depth: float, width: float) -> PotentialModel:
    """s-wave kernel of the local well -depth * exp(-(r/width)^2).

    v(p,p') = -depth * width / (2 sqrt(pi) p p')
              * (exp(-width^2 (p-p')^2 / 4) - exp(-width^2 (p+p')^2 / 4))
    """
    if width <= 0:
        raise ModelError("width must be positive")
    c = depth * width / (2.0 * math.sqrt(math.pi))

    def kernel(p, pp):
        return -c * (
            np.exp(-(width**2) * (p - pp) ** 2 / 4.0)
            - np.exp(-(width**2) * (p + pp) ** 2 / 4.0)
        ) / (p * pp)

    return PotentialModel("gaussian_local", {"depth": depth, "width": width}, kernel)


def custom_potential(kernel: Callable, **params) -> PotentialModel:
    """Wrap a user-supplied symmetric kernel (any partial wave)."""
    return PotentialModel("custom_kernel", dict(params), kernel)


def gauss_tan_nodes(n: int, scale: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre rule mapped to (0, inf) by p = scale*tan(pi(x+1)/4)."""
    if n < 2:
        raise QuadratureError("need at least 2 quadrature nodes")
    if scale <= 0:
        raise QuadratureError("map scale must be positive")
    x, w = np.polynomial.legendre.leggauss(n)
    theta = np.pi * (x + 1.0) / 4.0
    nodes = scale * np.tan(theta)
    weights = w * scale * (np.pi / 4.0) / np.cos(theta) ** 2
    return nodes, weights


@dataclass(frozen=True)
class TwoBodyChannel:
    """A single partial-wave scattering problem at fixed on-shell energy."""

    reduced_mass: float
    angular_momentum: int
    potential: PotentialModel
    nodes: np.ndarray
    weights: np.ndarray
    onshell_energy: float

    def __post_init__(self):
        if self.reduced_mass <= 0:
            raise ModelError("reduced mass must be positive")
        if self.angular_momentum < 0:
            raise ModelError("angular momentum must be >= 0")
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if nodes.ndim != 1 or np.any(nodes <= 0) or np.any(np.diff(nodes) <= 0):
            raise QuadratureError("nodes must be positive and strictly increasing")
        if weights.shape != nodes.shape or np.any(weights <= 0):
            raise QuadratureError("weights must be positive, one per node")
        if self.onshell_energy <= 0:
            raise ModelError("on-shell energy must be positive")
        p0 = self.p0
        if not (nodes[0] < p0 < nodes[-1]):
            raise QuadratureError(
                f"on-shell momentum {p0:.6g} outside grid coverage "
                f"({nodes[0]:.6g}, {nodes[-1]:.6g})"
            )
        if np.min(np.abs(nodes - p0)) < 1e-10 * p0:
            raise QuadratureError("on-shell momentum collides with a quadrature node")

    @property
    def p0(self) -> float:
        return math.sqrt(2.0 * self.reduced_mass * self.onshell_energy)

    @property
    def rho(self) -> float:
        """On-shell state density mu * p0."""
        return self.reduced_mass * self.p0

    def at_energy(self, energy: float) -> "TwoBodyChannel":
        return TwoBodyChannel(
            self.reduced_mass,
            self.angular_momentum,
            self.potential,
            self.nodes,
            self.weights,
            energy,
        )


def build_channel(
    potential: PotentialModel,
    reduced_mass: float,
    onshell_energy: float,
    n_nodes: int = DEFAULT_NODES,
    map_scale: Optional[float] = None,
    angular_momentum: int = 0,
) -> TwoBodyChannel:
    """Assemble a channel with the default tan-mapped quadrature."""
    scale = potential.range_scale() if map_scale is None else map_scale
    nodes, weights = gauss_tan_nodes(n_nodes, scale)
    return TwoBodyChannel(
        reduced_mass, angular_momentum, potential, nodes, weights, onshell_energy
    )


@dataclass(frozen=True)
class OnShellPoint:
    """On-shell amplitudes at one energy."""

    t_onshell: complex
    k_onshell: float
    phase_shift: float
    s_matrix: complex


def _extended_grid(ch: TwoBodyChannel) -> np.ndarray:
    return np.append(ch.nodes, ch.p0)


def _greens_weights(ch: TwoBodyChannel, outgoing: bool) -> np.ndarray:
    """Discretized g0 (outgoing) or g2 (standing) including the subtraction
    entry for the appended on-shell point."""
    p0 = ch.p0
    two_mu = 2.0 * ch.reduced_mass
    denom = p0**2 - ch.nodes**2
    g = np.empty(ch.nodes.size + 1, dtype=complex if outgoing else float)
    g[:-1] = ch.weights * ch.nodes**2 * two_mu / denom
    g[-1] = -(p0**2) * two_mu * np.sum(ch.weights / denom)
    if outgoing:
        g[-1] = g[-1] - 1j * math.pi * ch.rho
    return g


def _kernel_matrix(ch: TwoBodyChannel) -> np.ndarray:
    p = _extended_grid(ch)
    v = np.asarray(ch.potential.kernel(p[:, None], p[None, :]), dtype=float)
    if not np.isfinite(v).all():
        raise ModelError("potential kernel produced non-finite values")
    return v

def _nystrom_solve(ch: TwoBodyChannel, outgoing: bool, full: bool = False):
    """Solve the discretized integral equation.

    Returns the half-shell column t(p_i, p0) by default, or the full
    (n+1)x(n+1) kernel matrix when full=True.  The dtype follows the
    boundary condition: complex for outgoing, real for standing waves.
    """
    v = _kernel_matrix(ch)
    g = _greens_weights(ch, outgoing)
    m = v * g[None, :]
    a = np.eye(m.shape[0], dtype=m.dtype) - m
    rhs = v.astype(m.dtype) if full else v[:, -1].astype(m.dtype)
    try:
        x = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolveError(f"singular Nystrom system: {exc}") from exc
    if not np.isfinite(x).all():
        raise SolveError("Nystrom solve produced non-finite amplitudes")
    return x


def phase_from_k(k: float, rho: float) -> float:
    """Phase shift from a real standing-wave amplitude."""
    return math.atan(-math.pi * rho * k)


def heitler_compose(k: float, ch: TwoBodyChannel) -> OnShellPoint:
    """Unitary on-shell amplitude from a real standing-wave value.

    t = k / (1 + i pi rho k) has |S| = 1 for any real k, independent of how
    k was obtained.
    """
    kc = complex(k)
    if not np.isfinite(kc):
        raise ValueError("k must be finite")
    if abs(kc.imag) > 1e-12 * max(1.0, abs(kc)):
        raise ValueError("k must be real")
    k = kc.real
    rho = ch.rho
    t = k / (1.0 + 1j * math.pi * rho * k)
    s = 1.0 - 2j * math.pi * rho * t
    return OnShellPoint(complex(t), k, phase_from_k(k, rho), complex(s))


def solve_ls_onshell(ch: TwoBodyChannel) -> OnShellPoint:
    """On-shell outgoing amplitude by Nystrom discretization."""
    column = _nystrom_solve(ch, outgoing=True)
    t = complex(column[-1])
    rho = ch.rho
    k = (t / (1.0 - 1j * math.pi * rho * t)).real
    s = 1.0 - 2j * math.pi * rho * t
    return OnShellPoint(t, k, phase_from_k(k, rho), complex(s))


def solve_kmatrix_onshell(ch: TwoBodyChannel) -> OnShellPoint:
    """On-shell standing-wave amplitude; real arithmetic throughout.

    The principal-value kernel and every input are real, so the solved
    half-shell column is exactly real by construction.
    """
    column = _nystrom_solve(ch, outgoing=False)
    k = float(column[-1])
    composed = heitler_compose(k, ch)
    return OnShellPoint(composed.t_onshell, k, composed.phase_shift, composed.s_matrix)


def offshell_kernel(ch: TwoBodyChannel, outgoing: bool = True) -> np.ndarray:
    """Full off-shell amplitude t(p_i, p_j) on the extended grid."""
    return _nystrom_solve(ch, outgoing=outgoing, full=True)


def klein_zemach_ratio(
    ch: TwoBodyChannel, energy: float, norm_kind: str = "frobenius"
) -> float:
    """Relative distance ||t(E) - v|| / ||v|| of the off-shell amplitude from
    its own potential, on the discrete extended grid.

    This is the quantity whose decay with energy drives every high-energy
    estimate in the package.
    """
    if energy <= 0:
        raise ModelError("energy must be positive")
    at_e = ch.at_energy(energy)
    v = _kernel_matrix(at_e)
    v_norm = operators.operator_norm(v, norm_kind)
    if v_norm == 0.0:
        raise ModelError("ratio undefined for a vanishing potential")
    t = offshell_kernel(at_e, outgoing=True)
    return operators.operator_norm(t - v, norm_kind) / v_norm


# ---------------------------------------------------------------------------
# Closed-form oracle for the separable (rank-1) potential.

def yamaguchi_loop_integral(z: complex, reduced_mass: float, beta: float) -> complex:
    """Analytic loop integral I(z) = int_0^inf q^2 g(q)^2 / (z - q^2/2mu) dq
    for g(q) = 1/(q^2 + beta^2), evaluated by contour integration:

        I(z) = pi mu / (2 beta (s + i beta)^2),   s = sqrt(2 mu z), Im s >= 0.
    """
    s = complex(np.sqrt(complex(2.0 * reduced_mass * z)))
    if s.imag < 0:
        s = -s
    return math.pi * reduced_mass / (2.0 * beta * (s + 1j * beta) ** 2)


def yamaguchi_oracle(
    strength: float, beta: float, reduced_mass: float, energy: float
) -> OnShellPoint:
    """Closed-form on-shell amplitudes for the separable potential.

    t(p0,p0) = strength g(p0)^2 / (1 - strength I(E+i0)); the standing-wave
    value uses the principal-value (real) part of I.
    """
    if beta <= 0 or reduced_mass <= 0:
        raise ModelError("beta and reduced mass must be positive")
    if energy <= 0:
        raise ModelError("oracle defined for positive energies")
    p0 = math.sqrt(2.0 * reduced_mass * energy)
    rho = reduced_mass * p0
    g2 = 1.0 / (p0**2 + beta**2) ** 2
    loop = yamaguchi_loop_integral(complex(energy), reduced_mass, beta)
    den_t = 1.0 - strength * loop
    den_k = 1.0 - strength * loop.real
    if min(abs(den_t), abs(den_k)) < 1e-13 * max(1.0, abs(strength * loop)):
        raise SolveError(f"denominator pole (bound state) at energy {energy:g}")
    t = strength * g2 / den_t
    k = strength * g2 / den_k
    s = 1.0 - 2j * math.pi * rho * t
    return OnShellPoint(complex(t), float(k), phase_from_k(k, rho), complex(s))


def yamaguchi_bound_state(strength: float, beta: float, reduced_mass: float) -> float:
    """Binding energy of the single s-wave bound state, from the pole of the
    closed-form amplitude: kappa = sqrt(-pi mu strength / (2 beta)) - beta.

    Raises if the coupling does not support a bound state
    (needs strength < -2 beta^3 / (pi mu)).
    """
    if strength >= 0:
        raise ModelError("bound state requires an attractive potential")
    kappa = math.sqrt(-math.pi * reduced_mass * strength / (2.0 * beta)) - beta
    if kappa <= 0:
        raise ModelError(
            "coupling too weak for a bound state "
            f"(needs strength < {-2.0 * beta**3 / (math.pi * reduced_mass):.6g})"
        )
    return kappa**2 / (2.0 * reduced_mass)
