"""Run configuration: TOML schema, validation, canonical form, and hashing.

A config file holds exactly one top-level table named after the run mode
(``two-body``, ``few-body``, ``sweep`` or ``validate``) with optional
sub-tables ``model``, ``channel`` and ``energies``.  Parsing materializes
every documented default, so the canonical re-emission of a parsed config
always re-parses to the identical RunConfig.

Documented defaults: 96 quadrature nodes; frobenius norms; the regulator
eps is 0.05 times the natural energy scale (the pair kinetic radius for
few-body modes, beta^2/(2 mu) for two-body) and 0.1 in validate mode;
few-body energies are geometric from 2x to 200x the pair kinetic radius
(5 points), two-body energies geometric from 0.1x to 10x beta^2/(2 mu)
(10 points).  Energy ranges given relative to a reference scale are
converted to absolute values at parse time.
"""

from __future__ import annotations

import hashlib
import sys
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import model as mdl
from . import twobody as tb
from .errors import ConfigError

MODES = ("two-body", "few-body", "sweep", "validate")
NORM_KINDS = ("frobenius", "spectral")
FORMATS = ("csv", "json")
PAIR_MODES = ("heitler_pair", "g1_approx")
SPACINGS = ("geometric", "linear")

REFERENCE_CHANNEL = {
    "reduced_mass": 0.7,
    "angular_momentum": 0,
    "potential": "yamaguchi_separable",
    "strength": -4.0,
    "range": 1.3,
    "nodes": tb.DEFAULT_NODES,
}


@dataclass(frozen=True)
class ModelConfig:
    n_particles: int = 3
    masses: tuple[float, ...] = (1.0, 1.2, 1.4)
    grid_size: int = 4
    grid_min: float = 0.25
    grid_max: float = 1.75
    potential: str = "random_hermitian"
    strength: float = 0.4
    scale: float = 1.0
    potential_matrices: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ChannelConfig:
    reduced_mass: float = 0.7
    angular_momentum: int = 0
    potential: str = "yamaguchi_separable"
    strength: float = -4.0
    range: float = 1.3
    nodes: int = tb.DEFAULT_NODES


@dataclass(frozen=True)
class EnergyGrid:
    values: tuple[float, ...] = ()
    start: float = 0.0
    stop: float = 0.0
    count: int = 0
    spacing: str = "geometric"

    def resolve(self) -> tuple[float, ...]:
        if self.values:
            return self.values
        if self.count == 1:
            return (self.start,)
        fn = np.geomspace if self.spacing == "geometric" else np.linspace
        return tuple(float(x) for x in fn(self.start, self.stop, self.count))


@dataclass(frozen=True)
class RunConfig:
    mode: str
    seed: int = mdl.REFERENCE_SEED
    eps: float = 0.0
    norm_kind: str = "frobenius"
    format: str = "csv"
    output: str = ""
    threads: int = 1
    pair_mode: str = "heitler_pair"
    energies: EnergyGrid = EnergyGrid()
    model: Optional[ModelConfig] = None
    channel: Optional[ChannelConfig] = None


def _require(cond: bool, where: str, message: str):
    if not cond:
        raise ConfigError(f"{where}: {message}")


def _take(table: dict, where: str, key: str, kind, default):
    value = table.pop(key, default)
    if isinstance(value, bool) and kind is not bool:
        raise ConfigError(f"{where}.{key}: expected {kind.__name__}")
    if kind is float and isinstance(value, int):
        value = float(value)
    _require(isinstance(value, kind), f"{where}.{key}", f"expected {kind.__name__}")
    return value


def _reject_unknown(table: dict, where: str):
    if table:
        name = sorted(table)[0]
        raise ConfigError(f"{where}.{name}: unknown field")


def _parse_model(table: dict, where: str) -> ModelConfig:
    n = _take(table, where, "n_particles", int, 3)
    _require(n >= 3, f"{where}.n_particles", "must be >= 3")
    default_masses = [1.0 + 0.2 * l for l in range(n)]
    masses = _take(table, where, "masses", list, default_masses)
    _require(len(masses) == n, f"{where}.masses", f"expected {n} entries")
    _require(
        all(isinstance(m, (int, float)) and m > 0 for m in masses),
        f"{where}.masses",
        "must be positive numbers",
    )
    grid_size = _take(table, where, "grid_size", int, 4)
    _require(grid_size >= 1, f"{where}.grid_size", "must be >= 1")
    grid_min = _take(table, where, "grid_min", float, 0.25)
    grid_max = _take(table, where, "grid_max", float, 1.75)
    _require(0 <= grid_min <= grid_max, f"{where}.grid_min", "need 0 <= min <= max")
    potential = _take(table, where, "potential", str, "random_hermitian")
    families = ("random_hermitian", "separable_rank1", "gaussian_well")
    _require(potential in families, f"{where}.potential", f"one of {families}")
    strength = _take(table, where, "strength", float, 0.4)
    scale = _take(table, where, "scale", float, 1.0)
    _require(scale > 0, f"{where}.scale", "must be positive")
    raw_matrices = _take(table, where, "potential_matrices", dict, {})
    matrices = {}
    for key, rows in raw_matrices.items():
        loc = f"{where}.potential_matrices.{key}"
        parts = key.split("-")
        _require(
            len(parts) == 2 and all(p.isdigit() for p in parts),
            loc,
            'key must look like "0-1"',
        )
        m, k = int(parts[0]), int(parts[1])
        _require(0 <= m < k < n, loc, f"pair out of range for N={n}")
        arr = np.asarray(rows, dtype=float)
        _require(
            arr.ndim == 2 and arr.shape[0] == arr.shape[1],
            loc,
            "must be a square matrix (list of equal rows)",
        )
        _require(np.allclose(arr, arr.T, atol=0), loc, "must be symmetric")
        matrices[f"{m}-{k}"] = tuple(tuple(float(x) for x in row) for row in arr)
    _reject_unknown(table, where)
    return ModelConfig(
        n_particles=n,
        masses=tuple(float(m) for m in masses),
        grid_size=grid_size,
        grid_min=grid_min,
        grid_max=grid_max,
        potential=potential,
        strength=strength,
        scale=scale,
        potential_matrices=matrices,
    )


def _parse_channel(table: dict, where: str) -> ChannelConfig:
    ref = REFERENCE_CHANNEL
    mu = _take(table, where, "reduced_mass", float, ref["reduced_mass"])
    _require(mu > 0, f"{where}.reduced_mass", "must be positive")
    ell = _take(table, where, "angular_momentum", int, ref["angular_momentum"])
    _require(ell >= 0, f"{where}.angular_momentum", "must be >= 0")
    potential = _take(table, where, "potential", str, ref["potential"])
    _require(
        potential in ("yamaguchi_separable", "gaussian_local"),
        f"{where}.potential",
        "config files support yamaguchi_separable or gaussian_local",
    )
    strength = _take(table, where, "strength", float, ref["strength"])
    rng = _take(table, where, "range", float, ref["range"])
    _require(rng > 0, f"{where}.range", "must be positive")
    nodes = _take(table, where, "nodes", int, ref["nodes"])
    _require(nodes >= 2, f"{where}.nodes", "must be >= 2")
    _reject_unknown(table, where)
    return ChannelConfig(
        reduced_mass=mu,
        angular_momentum=ell,
        potential=potential,
        strength=strength,
        range=rng,
        nodes=nodes,
    )


def _parse_energies(
    table: dict, where: str, default_range: tuple, scale_options: dict
) -> EnergyGrid:
    values = _take(table, where, "values", list, [])
    d_start, d_stop, d_count, d_ref = default_range
    start = _take(table, where, "start", float, d_start)
    stop = _take(table, where, "stop", float, d_stop)
    count = _take(table, where, "count", int, d_count)
    spacing = _take(table, where, "spacing", str, "geometric")
    reference = _take(table, where, "reference", str, d_ref)
    _require(spacing in SPACINGS, f"{where}.spacing", f"must be one of {SPACINGS}")
    _require(
        reference in scale_options,
        f"{where}.reference",
        f"must be one of {tuple(scale_options)}",
    )
    _reject_unknown(table, where)
    scale = scale_options[reference]
    if values:
        _require(
            all(isinstance(v, (int, float)) and v > 0 for v in values),
            f"{where}.values",
            "must be positive numbers",
        )
        vals = tuple(sorted(float(v) * scale for v in values))
        return EnergyGrid(values=vals)
    _require(count >= 1, f"{where}.count", "must be >= 1")
    _require(start > 0, f"{where}.start", "must be positive")
    _require(stop >= start, f"{where}.stop", "must be >= start")
    return EnergyGrid(
        values=(),
        start=start * scale,
        stop=stop * scale,
        count=count,
        spacing=spacing,
    )


def build_model_spec(cfg: ModelConfig, seed: int) -> "mdl.ModelSpec":
    """Materialize the ModelSpec; the rng consumes pairs in sorted order."""
    rng = np.random.default_rng(seed)
    grid = np.linspace(cfg.grid_min, cfg.grid_max, cfg.grid_size)
    grids = tuple(grid.copy() for _ in range(cfg.n_particles))
    pots = {}
    for alpha in mdl.all_pairs(cfg.n_particles):
        m, n = alpha
        key = f"{m}-{n}"
        if key in cfg.potential_matrices:
            pots[alpha] = np.asarray(cfg.potential_matrices[key], dtype=complex)
            continue
        pots[alpha] = mdl.make_pair_potential(
            cfg.potential,
            (grids[m].size, grids[n].size),
            strength=cfg.strength,
            scale=cfg.scale,
            rng=rng,
            grids=(grids[m], grids[n]),
        )
    return mdl.ModelSpec(
        masses=cfg.masses, grids=grids, pair_potentials=pots
    )


def build_channel_at(cfg: ChannelConfig, energy: float) -> "tb.TwoBodyChannel":
    if cfg.potential == "yamaguchi_separable":
        pot = tb.yamaguchi_potential(cfg.strength, cfg.range)
    else:
        pot = tb.gaussian_potential(cfg.strength, cfg.range)
    return tb.build_channel(
        pot,
        cfg.reduced_mass,
        energy,
        n_nodes=cfg.nodes,
        angular_momentum=cfg.angular_momentum,
    )


def parse_config(text: str, mode: Optional[str] = None, **overrides) -> RunConfig:
    """Parse and validate a config document, materializing all defaults.

    mode, when given, must match the file's top-level table.  overrides
    (seed, norm_kind, format, output, threads) are applied before defaults
    are materialized, so command-line flags participate in the hash.
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config syntax: {exc}") from exc
    if len(data) != 1:
        raise ConfigError(
            f"config: expected exactly one top-level mode table, got {sorted(data)}"
        )
    (file_mode,) = data
    if file_mode not in MODES:
        raise ConfigError(f"config.{file_mode}: unknown mode table")
    if mode is not None and mode != file_mode:
        raise ConfigError(
            f"config.{file_mode}: file mode does not match requested mode {mode!r}"
        )
    table = dict(data[file_mode])
    if not isinstance(table, dict):
        raise ConfigError(f"config.{file_mode}: must be a table")
    where = file_mode

    unknown = set(overrides) - {"seed", "norm_kind", "format", "output", "threads"}
    if unknown:
        raise ConfigError(f"overrides: unknown {sorted(unknown)}")
    for key, value in overrides.items():
        if value is not None:
            table[key] = value

    seed = _take(table, where, "seed", int, mdl.REFERENCE_SEED)
    norm_kind = _take(table, where, "norm_kind", str, "frobenius")
    _require(norm_kind in NORM_KINDS, f"{where}.norm_kind", f"one of {NORM_KINDS}")
    fmt = _take(table, where, "format", str, "csv")
    _require(fmt in FORMATS, f"{where}.format", f"one of {FORMATS}")
    output = _take(table, where, "output", str, "")
    threads = _take(table, where, "threads", int, 1)
    _require(threads >= 1, f"{where}.threads", "must be >= 1")
    pair_mode = _take(table, where, "pair_mode", str, "heitler_pair")
    _require(pair_mode in PAIR_MODES, f"{where}.pair_mode", f"one of {PAIR_MODES}")
    eps_explicit = "eps" in table
    eps_raw = _take(table, where, "eps", float, -1.0)
    if eps_explicit:
        _require(
            eps_raw > 0 and np.isfinite(eps_raw), f"{where}.eps", "must be positive"
        )

    model_cfg = None
    channel_cfg = None
    energies = EnergyGrid()
    if file_mode in ("few-body", "sweep", "validate"):
        model_cfg = _parse_model(dict(table.pop("model", {})), f"{where}.model")
        spec = build_model_spec(model_cfg, seed)
        rho = mdl.pair_spectral_radius(spec)
        energies = _parse_energies(
            dict(table.pop("energies", {})),
            f"{where}.energies",
            (2.0, 200.0, 5, "pair_spectral_radius"),
            {"absolute": 1.0, "pair_spectral_radius": rho},
        )
        if file_mode == "validate":
            channel_cfg = _parse_channel(
                dict(table.pop("channel", {})), f"{where}.channel"
            )
            eps = eps_raw if eps_raw > 0 else mdl.REFERENCE_EPS
        else:
            eps = eps_raw if eps_raw > 0 else 0.05 * rho
    else:
        channel_cfg = _parse_channel(dict(table.pop("channel", {})), f"{where}.channel")
        e_scale = channel_cfg.range**2 / (2.0 * channel_cfg.reduced_mass)
        energies = _parse_energies(
            dict(table.pop("energies", {})),
            f"{where}.energies",
            (0.1, 10.0, 10, "potential_scale"),
            {"absolute": 1.0, "potential_scale": e_scale},
        )
        eps = eps_raw if eps_raw > 0 else 0.05 * e_scale
    _require(eps > 0, f"{where}.eps", "must be positive")
    _reject_unknown(table, where)
    return RunConfig(
        mode=file_mode,
        seed=seed,
        eps=eps,
        norm_kind=norm_kind,
        format=fmt,
        output=output,
        threads=threads,
        pair_mode=pair_mode,
        energies=energies,
        model=model_cfg,
        channel=channel_cfg,
    )


def _toml_scalar(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not np.isfinite(value):
            raise ConfigError("cannot emit non-finite value")
        text = repr(value)
        return text if any(c in text for c in ".e") else text + ".0"
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, (tuple, list)):
        return "[" + ", ".join(_toml_scalar(v) for v in value) + "]"
    raise ConfigError(f"cannot emit value of type {type(value).__name__}")


def canonical_text(cfg: RunConfig) -> str:
    """Deterministic TOML re-emission; parsing it reproduces cfg exactly."""
    lines = [f"[{cfg.mode}]"]
    scalars = {
        "eps": cfg.eps,
        "format": cfg.format,
        "norm_kind": cfg.norm_kind,
        "output": cfg.output,
        "pair_mode": cfg.pair_mode,
        "seed": cfg.seed,
        "threads": cfg.threads,
    }
    for key in sorted(scalars):
        lines.append(f"{key} = {_toml_scalar(scalars[key])}")
    if cfg.channel is not None:
        lines.append("")
        lines.append(f"[{cfg.mode}.channel]")
        ch = cfg.channel
        for key in (
            "angular_momentum",
            "nodes",
            "potential",
            "range",
            "reduced_mass",
            "strength",
        ):
            lines.append(f"{key} = {_toml_scalar(getattr(ch, key))}")
    lines.append("")
    lines.append(f"[{cfg.mode}.energies]")
    lines.append('reference = "absolute"')  # energies were materialized at parse
    e = cfg.energies
    if e.values:
        lines.append(f"values = {_toml_scalar(e.values)}")
    else:
        for key in ("count", "spacing", "start", "stop"):
            lines.append(f"{key} = {_toml_scalar(getattr(e, key))}")
    if cfg.model is not None:
        lines.append("")
        lines.append(f"[{cfg.mode}.model]")
        m = cfg.model
        for key in (
            "grid_max",
            "grid_min",
            "grid_size",
            "masses",
            "n_particles",
            "potential",
            "scale",
            "strength",
        ):
            lines.append(f"{key} = {_toml_scalar(getattr(m, key))}")
        if m.potential_matrices:
            lines.append("")
            lines.append(f"[{cfg.mode}.model.potential_matrices]")
            for key in sorted(m.potential_matrices):
                lines.append(f"{key} = {_toml_scalar(m.potential_matrices[key])}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: RunConfig) -> str:
    """Hash of the computation-determining part of the canonical form.

    The output path, serialization format and thread count do not change
    any computed number, so they are pinned before hashing.
    """
    pinned = replace(cfg, output="", format="csv", threads=1)
    return hashlib.sha256(canonical_text(pinned).encode("utf-8")).hexdigest()[:16]
