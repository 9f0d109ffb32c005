"""The self-check suite behind the CLI ``validate`` mode.

Each check runs one of the package's cross-route identities or trend
properties on the configured model and channel, and reports the measured
value against its frozen threshold.  A run passes iff every measured value
is within threshold.
"""

from __future__ import annotations

import numpy as np

from . import asym, model as mdl, operators as ops, twobody as tb
from .config import RunConfig, build_channel_at, build_model_spec
from .model import ComplexEnergy
from .report import VALIDATE_COLUMNS, SweepReport


def _ratio(numer: float, denom: float) -> float:
    return numer / max(denom, ops.FLOOR_NORM)


def _model_checks(cfg: RunConfig):
    spec = build_model_spec(cfg.model, cfg.seed)
    energies = cfg.energies.resolve()
    eps = cfg.eps
    z = ComplexEnergy(energies[0], eps)

    t_ls = asym.solve_ls_exact(spec, z).matrix
    heitler = asym.solve_heitler_exact(spec, z, "direct")
    decomposed = asym.solve_heitler_exact(spec, z, "faddeev_decomposed")
    faddeev = asym.solve_faddeev_system(spec, z)
    g0, g1, g2 = (g.matrix for g in mdl.green_functions(spec, z))

    yield "heitler_vs_ls", asym.relative_error(heitler.t_total, t_ls), 1e-10
    yield "faddeev_vs_ls", asym.relative_error(faddeev.total, t_ls), 1e-10
    yield (
        "k_mode_equivalence",
        asym.relative_error(decomposed.t_total, heitler.t_total),
        1e-10,
    )

    k_imp = asym.kmatrix_impulse(spec, z).matrix
    direct16 = ops.solve_resolvent_system(k_imp @ g1, k_imp)
    asym_sol = asym.solve_asym_faddeev(spec, z, cfg.pair_mode)
    if cfg.pair_mode == "g1_approx":
        v = mdl.build_v(spec).matrix
        direct16 = ops.solve_resolvent_system(v @ g1, v)
    yield (
        "asym_system_vs_direct_solve",
        asym.relative_error(asym_sol.total, direct16),
        1e-10,
    )

    t_pairs = asym.pair_operators(spec, z, "heitler_pair")
    k_pairs = asym.pair_operators(spec, z, "k_matrix")
    recon = max(
        asym.relative_error(
            ops.solve_resolvent_system(-t_pairs[a] @ g1, t_pairs[a]), k_pairs[a]
        )
        for a in spec.pairs()
    )
    yield "pair_reconstruction_identity", recon, 1e-10

    emb_err = 0.0
    for a in spec.pairs():
        v_a = mdl.embed_pair_potential(spec, a).matrix
        for kind, g in (("t_matrix", g0), ("k_matrix", g2)):
            emb = mdl.embed_two_body_solution(spec, a, z, kind).matrix
            direct = ops.solve_resolvent_system(v_a @ g, v_a)
            emb_err = max(emb_err, asym.relative_error(emb, direct))
    yield "embedding_consistency", emb_err, 1e-10

    yield (
        "resolvent_split_exact",
        float(np.linalg.norm(g0 - (g1 + g2), "fro")),
        0.0,
    )
    v_total = mdl.build_v(spec).matrix
    yield (
        "interaction_hermiticity",
        _ratio(float(np.linalg.norm(v_total - v_total.conj().T)), float(np.linalg.norm(v_total))),
        1e-12,
    )

    sweep = asym.asym_error_sweep(
        spec, energies, eps, cfg.pair_mode, cfg.norm_kind
    )
    col = {name: i for i, name in enumerate(sweep.columns)}

    def series(name):
        return [row[col[name]] for row in sweep.rows]

    yield "sweep_defect_ls_max", max(series("defect_ls")), 1e-10
    yield "sweep_defect_asym_max", max(series("defect_asym")), 1e-10
    if len(sweep.rows) >= 2:
        yield (
            "finite_sum_error_trend",
            _ratio(series("err_finite")[-1], series("err_finite")[0]),
            1.0,
        )
        trend = max(
            _ratio(series(name)[-1], series(name)[0])
            for name in ("tg1_max", "ttg1_max", "kg2_max")
        )
        yield "kernel_norm_trend", trend, 1.0
        slope = sweep.summary.get("loglog_slope_ttg1_vs_tg1", float("nan"))
        yield "second_order_slope_dev", abs(slope - 2.0), 0.4
    bound_ratio = max(
        _ratio(g, b)
        for g, b in zip(series("gap_finite_asym"), series("truncation_bound"))
    ) if sweep.rows else 0.0
    yield "truncation_bound_holds", bound_ratio, 1.0


def _channel_checks(cfg: RunConfig):
    ch_cfg = cfg.channel
    e_scale = ch_cfg.range**2 / (2.0 * ch_cfg.reduced_mass)
    energies = np.geomspace(0.1, 100.0, 10) * e_scale

    route_err = 0.0
    s_dev = 0.0
    oracle_err = 0.0
    for energy in energies:
        ch = build_channel_at(ch_cfg, float(energy))
        direct = tb.solve_ls_onshell(ch)
        via_k = tb.solve_kmatrix_onshell(ch)
        route_err = max(
            route_err,
            abs(via_k.t_onshell - direct.t_onshell) / abs(direct.t_onshell),
        )
        s_dev = max(s_dev, abs(abs(via_k.s_matrix) - 1.0))
        if ch_cfg.potential == "yamaguchi_separable":
            want = tb.yamaguchi_oracle(
                ch_cfg.strength, ch_cfg.range, ch_cfg.reduced_mass, float(energy)
            )
            oracle_err = max(
                oracle_err,
                abs(direct.t_onshell - want.t_onshell) / abs(want.t_onshell),
            )
    yield "twobody_route_equivalence", route_err, 1e-6
    yield "twobody_composed_unitarity", s_dev, 1e-12
    if ch_cfg.potential == "yamaguchi_separable":
        yield "twobody_oracle_agreement", oracle_err, 1e-6
        try:
            e_b = tb.yamaguchi_bound_state(
                ch_cfg.strength, ch_cfg.range, ch_cfg.reduced_mass
            )
        except Exception:
            e_b = None
        if e_b is not None:
            ch = build_channel_at(ch_cfg, e_b)
            decay = _ratio(
                tb.klein_zemach_ratio(ch, 100.0 * e_b),
                tb.klein_zemach_ratio(ch, e_b),
            )
            yield "klein_zemach_decay", decay, 1.0


def run_validation(cfg: RunConfig) -> SweepReport:
    """All invariant checks on the configured model; pass iff every row passes."""
    rows = []
    for name, measured, threshold in _model_checks(cfg):
        status = "pass" if measured <= threshold else "fail"
        rows.append((name, float(measured), float(threshold), status))
    for name, measured, threshold in _channel_checks(cfg):
        status = "pass" if measured <= threshold else "fail"
        rows.append((name, float(measured), float(threshold), status))
    n_failed = sum(1 for r in rows if r[3] == "fail")
    return SweepReport(
        mode="validate",
        columns=VALIDATE_COLUMNS,
        rows=tuple(rows),
        summary={"checks": len(rows), "failed": n_failed},
        norm_kind=cfg.norm_kind,
    )
