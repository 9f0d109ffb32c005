"""Exact coupled equations for the N-body transition operator and their
high-energy forms, with the error and unitarity diagnostics that compare
the two.

Route map on the finite model (all solves direct, hence exact up to
rounding):

* ``solve_ls_exact``        T = (1 - V G0)^-1 V
* ``solve_faddeev_system``  components T^a = T_a + T_a G0 sum_{b!=a} T^b
* ``solve_heitler_exact``   K = (1 - V G2)^-1 V, then T = (1 - K G1)^-1 K
* ``kmatrix_impulse``       K ~ sum_a K_a (single-collision dominance)
* ``solve_asym_faddeev``    components coupled through G1 only
* ``finite_sum_T``          one-iteration closed form
                            T = sum_a T_a (1 + G1 sum_{b!=a} T_b)

The first three agree identically for any Hermitian interaction; the last
three approach them as the energy grows above the pair kinetic scale.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import model as mdl
from . import operators as ops
from .errors import SolveError
from .model import ComplexEnergy, FewBodyOperator, ModelSpec, PairKey
from .operators import FLOOR_NORM, Role
from .report import SWEEP_COLUMNS, SweepReport

PAIR_MODES = ("heitler_pair", "g1_approx")
K_MODES = ("direct", "faddeev_decomposed")


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    """||a - b||_F normalized by ||b||_F with an underflow floor."""
    return float(
        np.linalg.norm(a - b) / max(np.linalg.norm(b), FLOOR_NORM)
    )


@dataclass(frozen=True)
class FaddeevSolution:
    """Per-pair components and their sum; total == sum(components) exactly."""

    components: dict[PairKey, np.ndarray]
    total: np.ndarray
    method: str
    energy: ComplexEnergy

    @classmethod
    def from_components(cls, components, method, energy):
        pairs = sorted(components)
        total = np.zeros_like(next(iter(components.values())))
        for alpha in pairs:
            total = total + components[alpha]
        return cls(dict(components), total, method, energy)


@dataclass(frozen=True)
class HeitlerSolution:
    """Standing-wave operator K plus the transition operator built from it."""

    t_total: np.ndarray
    k_total: np.ndarray
    k_components: Optional[dict[PairKey, np.ndarray]]
    method: str
    energy: ComplexEnergy


@dataclass(frozen=True)
class KernelDiagnostics:
    """Norms controlling the convergence of the high-energy forms.

    Per pair: ||T_a G0||, ||T_a G1||, ||K_a G2|| plus the potential
    baselines ||v_a G0/G1/G2||; per ordered pair couple (a != b):
    ||T_a G1 T_b G1|| and ||K_a G2 K_b G2||.
    """

    energy: ComplexEnergy
    norm_kind: str
    t_g0: dict[PairKey, float]
    t_g1: dict[PairKey, float]
    k_g2: dict[PairKey, float]
    tt_g1: dict[tuple[PairKey, PairKey], float]
    kk_g2: dict[tuple[PairKey, PairKey], float]
    v_g0: dict[PairKey, float]
    v_g1: dict[PairKey, float]
    v_g2: dict[PairKey, float]


def solve_ls_exact(spec: ModelSpec, z: ComplexEnergy) -> FewBodyOperator:
    """Full transition operator by direct inversion."""
    v = mdl.build_v(spec).matrix
    g0 = mdl.green_functions(spec, z)[0].matrix
    t = ops.solve_resolvent_system(v @ g0, v)
    return FewBodyOperator(t, Role.T, z)


def pair_operators(
    spec: ModelSpec, z: ComplexEnergy, kind: str
) -> dict[PairKey, np.ndarray]:
    """Embedded per-pair operators used as inputs to the coupled systems.

    kind:
      t_matrix     -- pair transition operators (coupled through G0);
      k_matrix     -- pair standing-wave operators (coupled through G2);
      heitler_pair -- solutions of T_a = K_a + K_a G1 T_a;
      g1_approx    -- solutions of T_a = v_a + v_a G1 T_a.
    """
    if kind in ("t_matrix", "k_matrix"):
        return {
            alpha: mdl.embed_two_body_solution(spec, alpha, z, kind).matrix
            for alpha in spec.pairs()
        }
    g1 = mdl.green_functions(spec, z)[1].matrix
    out = {}
    if kind == "heitler_pair":
        for alpha in spec.pairs():
            k_a = mdl.embed_two_body_solution(spec, alpha, z, "k_matrix").matrix
            out[alpha] = ops.solve_resolvent_system(k_a @ g1, k_a)
    elif kind == "g1_approx":
        for alpha in spec.pairs():
            v_a = mdl.embed_pair_potential(spec, alpha).matrix
            out[alpha] = ops.solve_resolvent_system(v_a @ g1, v_a)
    else:
        raise ValueError(f"unknown pair operator kind {kind!r}")
    return out


def _coupled_components(
    pair_ops: dict[PairKey, np.ndarray], g: np.ndarray
) -> dict[PairKey, np.ndarray]:
    """Solve X_a = T_a + T_a g sum_{b != a} X_b as one stacked linear system."""
    pairs = sorted(pair_ops)
    n = len(pairs)
    d = g.shape[0]
    coupling = {alpha: pair_ops[alpha] @ g for alpha in pairs}
    big = np.zeros((n * d, n * d), dtype=complex)
    rhs = np.zeros((n * d, d), dtype=complex)
    for i, alpha in enumerate(pairs):
        rhs[i * d : (i + 1) * d] = pair_ops[alpha]
        for j, beta in enumerate(pairs):
            if i != j:
                big[i * d : (i + 1) * d, j * d : (j + 1) * d] = coupling[alpha]
    try:
        x = ops.solve_resolvent_system(big, rhs)
    except SolveError as exc:
        raise SolveError(f"coupled component system failed: {exc}", exc.condition)
    return {alpha: x[i * d : (i + 1) * d] for i, alpha in enumerate(pairs)}


def solve_faddeev_system(spec: ModelSpec, z: ComplexEnergy) -> FaddeevSolution:
    """Exact component decomposition coupled through the full resolvent."""
    t_pairs = pair_operators(spec, z, "t_matrix")
    if not t_pairs:
        zero = np.zeros((spec.dim, spec.dim), dtype=complex)
        return FaddeevSolution({}, zero, "exact_faddeev", z)
    g0 = mdl.green_functions(spec, z)[0].matrix
    comps = _coupled_components(t_pairs, g0)
    return FaddeevSolution.from_components(comps, "exact_faddeev", z)


def solve_heitler_exact(
    spec: ModelSpec, z: ComplexEnergy, k_mode: str = "direct"
) -> HeitlerSolution:
    """Standing-wave route: Hermitian K first, then the unitary T."""
    if k_mode not in K_MODES:
        raise ValueError(f"unknown k_mode {k_mode!r}")
    v = mdl.build_v(spec).matrix
    _, g1_op, g2_op = mdl.green_functions(spec, z)
    g1, g2 = g1_op.matrix, g2_op.matrix
    k_components = None
    if k_mode == "direct":
        k_total = ops.solve_resolvent_system(v @ g2, v)
    else:
        k_pairs = pair_operators(spec, z, "k_matrix")
        if k_pairs:
            k_components = _coupled_components(k_pairs, g2)
            k_total = sum(k_components.values())
        else:
            k_total = np.zeros_like(v)
    if not ops.is_hermitian(k_total, tol=ops.TOL_HERM * 100):
        raise SolveError("standing-wave operator lost Hermiticity")
    t_total = ops.solve_resolvent_system(k_total @ g1, k_total)
    return HeitlerSolution(t_total, k_total, k_components, "exact_heitler", z)


def kmatrix_impulse(spec: ModelSpec, z: ComplexEnergy) -> FewBodyOperator:
    """Single-collision standing-wave operator: the plain sum of pair K_a."""
    total = np.zeros((spec.dim, spec.dim), dtype=complex)
    for alpha in spec.pairs():
        total += mdl.embed_two_body_solution(spec, alpha, z, "k_matrix").matrix
    return FewBodyOperator(total, Role.K, z)


def solve_asym_faddeev(
    spec: ModelSpec, z: ComplexEnergy, pair_mode: str = "heitler_pair"
) -> FaddeevSolution:
    """High-energy component system, coupled through G1 only.

    Solving it exactly is identical to solving T = K + K G1 T with the
    impulse K (pair_mode heitler_pair) or with K replaced by the bare
    potential sum (pair_mode g1_approx).
    """
    if pair_mode not in PAIR_MODES:
        raise ValueError(f"unknown pair_mode {pair_mode!r}")
    t_pairs = pair_operators(spec, z, pair_mode)
    if not t_pairs:
        zero = np.zeros((spec.dim, spec.dim), dtype=complex)
        return FaddeevSolution({}, zero, "asym_system", z)
    g1 = mdl.green_functions(spec, z)[1].matrix
    comps = _coupled_components(t_pairs, g1)
    return FaddeevSolution.from_components(comps, "asym_system", z)


def finite_sum_T(
    spec: ModelSpec, z: ComplexEnergy, pair_mode: str = "heitler_pair"
) -> FewBodyOperator:
    """Closed-form first-iteration solution of the high-energy system:
    T = sum_a T_a (1 + G1 sum_{b!=a} T_b).  No linear solve involved."""
    if pair_mode not in PAIR_MODES:
        raise ValueError(f"unknown pair_mode {pair_mode!r}")
    t_pairs = pair_operators(spec, z, pair_mode)
    total = np.zeros((spec.dim, spec.dim), dtype=complex)
    if not t_pairs:
        return FewBodyOperator(total, Role.T, z)
    g1 = mdl.green_functions(spec, z)[1].matrix
    pairs = sorted(t_pairs)
    sum_all = np.zeros_like(total)
    for alpha in pairs:
        sum_all += t_pairs[alpha]
    for alpha in pairs:
        others = sum_all - t_pairs[alpha]
        total += t_pairs[alpha] + t_pairs[alpha] @ (g1 @ others)
    return FewBodyOperator(total, Role.T, z)


def truncation_bound(
    pair_ops: dict[PairKey, np.ndarray],
    g1: np.ndarray,
    norm_kind: str = "frobenius",
) -> float:
    """Conservative bound on ||finite_sum - coupled solution||.

    (#ordered couples) * max_{a!=b} ||T_a G1 T_b G1||
                       * max_a (1 + ||G1|| ||sum_{b!=a} T_b||)
                       * max_a ||T_a||
    """
    pairs = sorted(pair_ops)
    if len(pairs) < 2:
        return 0.0
    norm = lambda m: ops.operator_norm(m, norm_kind)
    g1_norm = norm(g1)
    tg1 = {alpha: pair_ops[alpha] @ g1 for alpha in pairs}
    max_cross = max(
        norm(tg1[a] @ tg1[b]) for a in pairs for b in pairs if a != b
    )
    sum_all = sum(pair_ops[a] for a in pairs)
    max_neighbors = max(norm(sum_all - pair_ops[a]) for a in pairs)
    max_t = max(norm(pair_ops[a]) for a in pairs)
    n_ordered = len(pairs) * (len(pairs) - 1)
    return n_ordered * max_cross * (1.0 + g1_norm * max_neighbors) * max_t


def kernel_diagnostics(
    spec: ModelSpec,
    z: ComplexEnergy,
    norm_kind: str = "frobenius",
    pair_mode: str = "heitler_pair",
) -> KernelDiagnostics:
    """All kernel-norm families at one energy.

    ||T_a G0|| uses the pair transition operators; ||T_a G1|| and the
    cross norms use the pair operators the high-energy system actually
    couples (pair_mode); ||K_a G2|| uses the standing-wave pairs.
    """
    g0, g1, g2 = (g.matrix for g in mdl.green_functions(spec, z))
    norm = lambda m: ops.operator_norm(m, norm_kind)
    t_ls = pair_operators(spec, z, "t_matrix")
    t_asym = pair_operators(spec, z, pair_mode)
    k_pairs = pair_operators(spec, z, "k_matrix")
    pairs = spec.pairs()
    v_emb = {a: mdl.embed_pair_potential(spec, a).matrix for a in pairs}
    tg1 = {a: t_asym[a] @ g1 for a in pairs}
    kg2 = {a: k_pairs[a] @ g2 for a in pairs}
    return KernelDiagnostics(
        energy=z,
        norm_kind=norm_kind,
        t_g0={a: norm(t_ls[a] @ g0) for a in pairs},
        t_g1={a: norm(tg1[a]) for a in pairs},
        k_g2={a: norm(kg2[a]) for a in pairs},
        tt_g1={
            (a, b): norm(tg1[a] @ tg1[b]) for a in pairs for b in pairs if a != b
        },
        kk_g2={
            (a, b): norm(kg2[a] @ kg2[b]) for a in pairs for b in pairs if a != b
        },
        v_g0={a: norm(v_emb[a] @ g0) for a in pairs},
        v_g1={a: norm(v_emb[a] @ g1) for a in pairs},
        v_g2={a: norm(v_emb[a] @ g2) for a in pairs},
    )


def _max_rel_dev(measured: dict, baseline: dict) -> float:
    return max(
        abs(measured[a] - baseline[a]) / max(baseline[a], FLOOR_NORM)
        for a in measured
    )


def _sweep_point(
    spec: ModelSpec,
    e0: float,
    eps: float,
    pair_mode: str,
    norm_kind: str,
) -> tuple:
    z = ComplexEnergy(e0, eps)
    g1 = mdl.green_functions(spec, z)[1].matrix
    t_ls = solve_ls_exact(spec, z).matrix
    heitler = solve_heitler_exact(spec, z, "direct")
    k_imp = kmatrix_impulse(spec, z).matrix
    asym_sol = solve_asym_faddeev(spec, z, pair_mode)
    finite = finite_sum_T(spec, z, pair_mode).matrix
    diag = kernel_diagnostics(spec, z, norm_kind, pair_mode)
    pair_ops = pair_operators(spec, z, pair_mode)

    gap = float(np.linalg.norm(finite - asym_sol.total))
    t_f_norm = max(float(np.linalg.norm(finite)), FLOOR_NORM)
    g1_norm = float(np.linalg.norm(g1))
    defect_bound = gap * (1.0 + 2.0 * g1_norm * t_f_norm) / t_f_norm

    def maxval(d):
        return max(d.values()) if d else 0.0

    return (
        e0,
        eps,
        relative_error(k_imp, heitler.k_total),
        relative_error(asym_sol.total, t_ls),
        relative_error(finite, t_ls),
        ops.unitarity_defect(t_ls, g1),
        ops.unitarity_defect(asym_sol.total, g1),
        ops.unitarity_defect(finite, g1),
        gap,
        truncation_bound(pair_ops, g1, norm_kind),
        defect_bound,
        maxval(diag.t_g0),
        maxval(diag.t_g1),
        maxval(diag.k_g2),
        maxval(diag.tt_g1),
        maxval(diag.kk_g2),
        maxval(diag.v_g0),
        maxval(diag.v_g1),
        maxval(diag.v_g2),
        _max_rel_dev(diag.t_g0, diag.v_g0),
        _max_rel_dev(diag.t_g1, diag.v_g1),
        _max_rel_dev(diag.k_g2, diag.v_g2),
    )


def loglog_slope(x, y) -> float:
    """Least-squares slope of log(y) against log(x)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0)
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def asym_error_sweep(
    spec: ModelSpec,
    energies,
    eps: float,
    pair_mode: str = "heitler_pair",
    norm_kind: str = "frobenius",
    threads: int = 1,
) -> SweepReport:
    """Per-energy errors, unitarity defects, and kernel norms.

    Energies must be positive and increasing; the regulator eps is held
    fixed across the sweep.  Rows are deterministic functions of the model.
    """
    energies = [float(e) for e in energies]
    if not energies or any(e <= 0 for e in energies):
        raise ValueError("energies must be positive")
    if sorted(energies) != energies:
        raise ValueError("energies must be increasing")

    def point(e0):
        try:
            return _sweep_point(spec, e0, eps, pair_mode, norm_kind), None
        except SolveError as exc:
            return None, f"energy={e0:.12g}: {exc}"

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(point, energies))
    else:
        results = [point(e0) for e0 in energies]

    rows = tuple(r for r, _ in results if r is not None)
    errors = tuple(e for _, e in results if e is not None)
    columns = SWEEP_COLUMNS
    idx_tg1 = columns.index("tg1_max")
    idx_ttg1 = columns.index("ttg1_max")
    summary = {}
    if len(rows) >= 2:
        summary["loglog_slope_ttg1_vs_tg1"] = loglog_slope(
            [r[idx_tg1] for r in rows], [r[idx_ttg1] for r in rows]
        )
    return SweepReport(
        mode="sweep",
        columns=columns,
        rows=rows,
        summary=summary,
        norm_kind=norm_kind,
        errors=errors,
    )
