"""Finite N-particle model: kinetic operator, embedded pair potentials,
resolvents, and the spectator-block embedding of two-body solutions.

The model is a self-consistent finite quantum system: per-particle momentum
grids are plain sample lists (no quadrature weights), so every operator
identity holds to machine precision.  State ordering is row-major over
particle indices: the flat index of the grid tuple ``(i_0, ..., i_{N-1})``
is ``numpy.ravel_multi_index`` with C order.  Particle and pair indices are
0-based; a pair is a tuple ``(m, n)`` with ``m < n``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import operators
from .errors import ModelError, SolveError
from .operators import Role

PairKey = tuple[int, int]


@dataclass(frozen=True)
class ComplexEnergy:
    """Spectral parameter z = e0 + i*eps with eps > 0."""

    e0: float
    eps: float

    def __post_init__(self):
        if not np.isfinite(self.e0):
            raise ModelError("e0 must be finite")
        if not (self.eps > 0.0 and np.isfinite(self.eps)):
            raise ModelError("eps must be positive and finite")

    @property
    def z(self) -> complex:
        return complex(self.e0, self.eps)

    @property
    def z_conj(self) -> complex:
        return complex(self.e0, -self.eps)

    def shifted(self, delta: float) -> "ComplexEnergy":
        """Energy moved by a real shift; the regulator is unchanged."""
        return ComplexEnergy(self.e0 - delta, self.eps)


@dataclass(frozen=True)
class FewBodyOperator:
    """A dense operator on the full product space, tagged with its role."""

    matrix: np.ndarray
    role: Role = Role.OTHER
    energy: Optional[ComplexEnergy] = None

    def __post_init__(self):
        object.__setattr__(self, "matrix", operators.as_operator(self.matrix))
        operators.check_role(self.matrix, self.role)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def all_pairs(n_particles: int) -> list[PairKey]:
    """All N(N-1)/2 interacting pairs (m, n), m < n, 0-based."""
    return list(itertools.combinations(range(n_particles), 2))


@dataclass(frozen=True)
class ModelSpec:
    """Discretized N-particle system.

    masses: one positive mass per particle.
    grids: one 1-D array of momentum samples per particle.
    pair_potentials: Hermitian matrix per pair, acting on the pair product
        grid (row-major over (m, n) samples).  Pairs may be omitted, which
        means no interaction for that pair.
    """

    masses: tuple[float, ...]
    grids: tuple[np.ndarray, ...]
    pair_potentials: dict[PairKey, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.masses)
        if n < 3:
            raise ModelError(f"need at least 3 particles, got {n}")
        if len(self.grids) != n:
            raise ModelError("one grid per particle required")
        if any(m <= 0 or not np.isfinite(m) for m in self.masses):
            raise ModelError("masses must be positive and finite")
        grids = tuple(np.asarray(g, dtype=float) for g in self.grids)
        object.__setattr__(self, "grids", grids)
        for g in grids:
            if g.ndim != 1 or g.size == 0:
                raise ModelError("each grid must be a non-empty 1-D sample list")
            if not np.isfinite(g).all():
                raise ModelError("grids must be finite")
        valid = set(all_pairs(n))
        for alpha, v in self.pair_potentials.items():
            if tuple(alpha) not in valid:
                raise ModelError(f"invalid pair index {alpha!r} for N={n}")
            m, k = alpha
            d = grids[m].size * grids[k].size
            v = np.asarray(v)
            if v.shape != (d, d):
                raise ModelError(
                    f"pair potential {alpha!r} has shape {v.shape}, expected {(d, d)}"
                )
            if not operators.is_hermitian(v):
                raise ModelError(f"pair potential {alpha!r} is not Hermitian")

    @property
    def n_particles(self) -> int:
        return len(self.masses)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(g.size for g in self.grids)

    @property
    def dim(self) -> int:
        return int(np.prod(self.shape))

    def pairs(self) -> list[PairKey]:
        """Interacting pairs, in a fixed deterministic order."""
        return sorted(tuple(a) for a in self.pair_potentials)


def h0_diagonal(spec: ModelSpec) -> np.ndarray:
    """Kinetic energies sum_l q_l^2 / (2 m_l) for every grid tuple (flat)."""
    terms = [g**2 / (2.0 * m) for g, m in zip(spec.grids, spec.masses)]
    total = terms[0]
    for t in terms[1:]:
        total = np.add.outer(total, t)
    return total.reshape(-1)


def build_h0(spec: ModelSpec) -> FewBodyOperator:
    """Free Hamiltonian as a dense diagonal real operator."""
    return FewBodyOperator(np.diag(h0_diagonal(spec)).astype(complex), Role.H0)


def pair_block_indices(spec: ModelSpec, alpha: PairKey):
    """Iterate over spectator blocks of pair alpha.

    Yields ``(spectator_tuple, shift, flat_indices)`` where shift is the
    spectator kinetic energy and flat_indices enumerates the block's states
    in row-major pair order (i_m major, i_n minor).
    """
    m, n = alpha
    dims = spec.shape
    strides = np.array(
        [int(np.prod(dims[l + 1 :])) for l in range(len(dims))], dtype=int
    )
    spectators = [l for l in range(spec.n_particles) if l not in (m, n)]
    pair_flat = (
        strides[m] * np.arange(dims[m])[:, None] + strides[n] * np.arange(dims[n])
    ).reshape(-1)
    spec_ranges = [range(dims[l]) for l in spectators]
    for s in itertools.product(*spec_ranges):
        base = sum(strides[l] * i for l, i in zip(spectators, s))
        shift = sum(
            spec.grids[l][i] ** 2 / (2.0 * spec.masses[l])
            for l, i in zip(spectators, s)
        )
        yield s, float(shift), base + pair_flat


def pair_kinetic_diagonal(spec: ModelSpec, alpha: PairKey) -> np.ndarray:
    """Two-body kinetic energies on the pair product grid (row-major)."""
    m, n = alpha
    tm = spec.grids[m] ** 2 / (2.0 * spec.masses[m])
    tn = spec.grids[n] ** 2 / (2.0 * spec.masses[n])
    return np.add.outer(tm, tn).reshape(-1)


def embed_pair_potential(spec: ModelSpec, alpha: PairKey) -> FewBodyOperator:
    """Pair potential extended to the full space with spectator deltas."""
    alpha = tuple(alpha)
    if alpha not in spec.pair_potentials:
        raise ModelError(f"no potential stored for pair {alpha!r}")
    v = np.asarray(spec.pair_potentials[alpha], dtype=complex)
    out = np.zeros((spec.dim, spec.dim), dtype=complex)
    for _, _, idx in pair_block_indices(spec, alpha):
        out[np.ix_(idx, idx)] = v
    return FewBodyOperator(out, Role.V)


def build_v(spec: ModelSpec) -> FewBodyOperator:
    """Total interaction: sum of all embedded pair potentials."""
    out = np.zeros((spec.dim, spec.dim), dtype=complex)
    for alpha in spec.pairs():
        out += embed_pair_potential(spec, alpha).matrix
    return FewBodyOperator(out, Role.V)


def _resolvent_parts(h: np.ndarray, z: ComplexEnergy):
    """Diagonals of G0, G1, G2 for a real diagonal Hamiltonian h.

    Computed from the split formulas so g1 + g2 == g0 holds exactly:
    g1 = -i*eps/d, g2 = (e0-h)/d with d = (e0-h)^2 + eps^2.
    """
    delta = z.e0 - h
    den = delta**2 + z.eps**2
    g1 = -1j * (z.eps / den)
    g2 = delta / den
    return g1, g2


def green_functions(
    spec: ModelSpec, z: ComplexEnergy
) -> tuple[FewBodyOperator, FewBodyOperator, FewBodyOperator]:
    """Free resolvent G0 = (z - H0)^-1 and its anti-Hermitian / Hermitian
    parts G1, G2.  All three are diagonal; G1 + G2 = G0 exactly."""
    h = h0_diagonal(spec)
    g1, g2 = _resolvent_parts(h, z)
    g0 = g2 + g1
    return (
        FewBodyOperator(np.diag(g0), Role.G0, z),
        FewBodyOperator(np.diag(g1), Role.G1, z),
        FewBodyOperator(np.diag(g2.astype(complex)), Role.G2, z),
    )


def embed_two_body_solution(
    spec: ModelSpec, alpha: PairKey, z: ComplexEnergy, kind: str = "t_matrix"
) -> FewBodyOperator:
    """Two-body transition (t) or standing-wave (k) operator of pair alpha,
    embedded in the full space.

    The operator is block-diagonal over spectator tuples; within the block
    carrying spectator labels {q_l} the pair problem is solved by direct
    inversion at the shifted energy z' = z - sum_spectators q_l^2/(2 m_l).
    """
    alpha = tuple(alpha)
    if alpha not in spec.pair_potentials:
        raise ModelError(f"no potential stored for pair {alpha!r}")
    if kind not in ("t_matrix", "k_matrix"):
        raise ValueError(f"unknown kind {kind!r}")
    v = np.asarray(spec.pair_potentials[alpha], dtype=complex)
    h_pair = pair_kinetic_diagonal(spec, alpha)
    out = np.zeros((spec.dim, spec.dim), dtype=complex)
    for s, shift, idx in pair_block_indices(spec, alpha):
        zp = z.shifted(shift)
        g1, g2 = _resolvent_parts(h_pair, zp)
        g = (g2 + g1) if kind == "t_matrix" else g2
        try:
            block = operators.solve_resolvent_system(v * g, v)
        except SolveError as exc:
            raise SolveError(
                f"pair {alpha!r} block solve failed at spectator tuple {s}: {exc}",
                condition=exc.condition,
            ) from exc
        out[np.ix_(idx, idx)] = block
    role = Role.PAIR_T if kind == "t_matrix" else Role.PAIR_K
    return FewBodyOperator(out, role, z)


def pair_spectral_radius(spec: ModelSpec) -> float:
    """Largest two-body kinetic energy over the interacting pairs.

    Used as the reference scale for "high energy" sweeps.
    """
    pairs = spec.pairs() or all_pairs(spec.n_particles)
    return max(float(pair_kinetic_diagonal(spec, a).max()) for a in pairs)


# ---------------------------------------------------------------------------
# Potential families and the seeded reference model.

def make_pair_potential(
    family: str,
    shape: tuple[int, int],
    strength: float = 1.0,
    scale: float = 1.0,
    rng: Optional[np.random.Generator] = None,
    grids: Optional[tuple[np.ndarray, np.ndarray]] = None,
) -> np.ndarray:
    """Build a Hermitian pair potential matrix on a (d_m, d_n) product grid.

    Families:
      random_hermitian  -- strength * (A + A^H)/2, A complex standard normal
                           (requires rng); normalized by the pair dimension.
      separable_rank1   -- strength * outer(u, u) with u_ij = 1/(q_m^2+q_n^2+scale^2)
                           (requires grids).
      gaussian_well     -- -strength * exp(-((h_i - h_j)/scale)^2) on pair
                           kinetic labels h (requires grids); real symmetric.
    """
    d = shape[0] * shape[1]
    if family == "random_hermitian":
        if rng is None:
            raise ModelError("random_hermitian requires an rng")
        a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        return strength * (a + a.conj().T) / (2.0 * np.sqrt(d))
    if family == "separable_rank1":
        if grids is None:
            raise ModelError("separable_rank1 requires the pair grids")
        qm, qn = grids
        u = (1.0 / (np.add.outer(qm**2, qn**2) + scale**2)).reshape(-1)
        return strength * np.outer(u, u).astype(complex)
    if family == "gaussian_well":
        if grids is None:
            raise ModelError("gaussian_well requires the pair grids")
        qm, qn = grids
        h = (np.add.outer(qm**2, qn**2)).reshape(-1)
        return (-strength * np.exp(-((np.subtract.outer(h, h) / scale) ** 2))).astype(
            complex
        )
    raise ModelError(f"unknown potential family {family!r}")


REFERENCE_SEED = 1234
REFERENCE_EPS = 0.1


def make_reference_model(
    seed: int = REFERENCE_SEED,
    n_particles: int = 3,
    grid_size: int = 4,
    strength: float = 0.4,
    family: str = "random_hermitian",
) -> ModelSpec:
    """Seeded reference system: distinct masses, identical per-particle grids
    on (0, 2), and one random Hermitian potential per pair."""
    rng = np.random.default_rng(seed)
    masses = tuple(1.0 + 0.2 * l for l in range(n_particles))
    grid = np.linspace(0.25, 1.75, grid_size)
    grids = tuple(grid.copy() for _ in range(n_particles))
    pots = {}
    for alpha in all_pairs(n_particles):
        m, n = alpha
        shape = (grids[m].size, grids[n].size)
        pots[alpha] = make_pair_potential(
            family,
            shape,
            strength=strength,
            rng=rng,
            grids=(grids[m], grids[n]),
        )
    return ModelSpec(masses=masses, grids=grids, pair_potentials=pots)
