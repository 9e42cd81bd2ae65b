"""Command-line front end: spectrum | rates | sweep | oracle | design.

Every command resolves a :class:`RunConfig` from flags and an optional flat
``key=value`` config file (flags override the file), then emits one
deterministic CSV or JSON table.  CSV starts with a single ``# key=value ...``
metadata line carrying the fully resolved physics parameters; parsing that
parameter set back yields an equal RunConfig.  Floats are printed with 17
significant digits so files are byte-stable across runs.

Default units put omega_m = 1 ("units of omega_m"), which keeps emitted data
dimensionless and portable; pass ``--units si`` to work in rad/s.

Exit codes: 0 success (including a reported unstable model), 1 configuration
error, 2 numeric failure (singular loop at a frequency where a rate is
required).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, design, netalg, oracle, spectra
from .design import SystemConfig, Topology
from .errors import (
    ConfigError,
    NoNetCooling,
    SingularLoop,
    UnitError,
    UnstableModel,
)
from .netalg import FilterCavityParams, OptoCavityParams

_TOPOLOGIES = ("notch", "bandpass", "none")
_UNITS = ("omega_m", "si")
_FORMATS = ("csv", "json")
_ELEMENTS = ("loop", "filter")
_SWEEP_PARAMS = ("delta", "kappa_f", "kappa", "g")


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run parameters.

    ``delta`` is stored resolved (an ``auto`` request is replaced by the
    optimal detuning before construction, so the metadata echoes the resolved
    value); ``delta_from_auto`` records the request for callers and does not
    affect equality or metadata.  The output path never enters metadata, so
    identical configurations written to different locations stay
    byte-identical.
    """

    topology: str = "none"
    units: str = "omega_m"
    kappa: float | None = None
    omega_m: float = 1.0
    g: float | None = None
    delta: float | None = None
    kappa1: float | None = None
    kappa2: float | None = None
    kappa_loss: float = 0.0
    delta_f: float | None = None
    gamma_m: float = 0.0
    n_th: float = 0.0
    tau: float = 0.0
    omega_min: float | None = None
    omega_max: float | None = None
    points: int | None = None
    element: str = "loop"
    sweep_param: str | None = None
    sweep_min: float | None = None
    sweep_max: float | None = None
    sweep_points: int | None = None
    fmt: str = "csv"
    output: str | None = field(default=None, compare=False)
    delta_from_auto: bool = field(default=False, compare=False)


def fmt17(x: float) -> str:
    """17-significant-digit float formatting (exact float64 round trip)."""
    return f"{x:.17g}"


@dataclass(frozen=True)
class OutputTable:
    """Columns and rows plus the metadata echoed into every output file.

    ``None`` cells mark values undefined at that row (a flagged singular point
    or an undefined occupation); they render as empty CSV fields / JSON nulls.
    NaN or infinite cells are rejected outright.
    """

    meta: tuple[tuple[str, str], ...]
    columns: tuple[str, ...]
    rows: tuple[tuple[float | None, ...], ...]

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ConfigError("row width does not match column count")
            for cell in row:
                if cell is not None and not math.isfinite(cell):
                    raise ConfigError(f"non-finite cell {cell!r} in output row")


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------


def _read_config_file(path: str | Path) -> dict[str, str]:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    raw: dict[str, str] = {}
    for lineno, line in enumerate(p.read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{p}:{lineno}: expected key=value, got {line!r}")
        key, value = stripped.split("=", 1)
        key = key.strip().replace("-", "_")
        if key.startswith("_"):
            continue  # informational keys (version, auto-detuning echo)
        if key in raw:
            raise ConfigError(f"{p}:{lineno}: duplicate key {key!r} (ambiguous)")
        raw[key] = value.strip()
    return raw


_FLOAT_KEYS = (
    "kappa", "omega_m", "g", "kappa_f", "kappa1", "kappa2", "kappa_loss",
    "delta_f", "gamma_m", "n_th", "tau", "omega_min", "omega_max",
    "sweep_min", "sweep_max",
)
_INT_KEYS = ("points", "sweep_points")
_CHOICE_KEYS = {
    "topology": _TOPOLOGIES,
    "units": _UNITS,
    "format": _FORMATS,
    "element": _ELEMENTS,
    "sweep_param": _SWEEP_PARAMS,
}
_KNOWN_KEYS = set(_FLOAT_KEYS) | set(_INT_KEYS) | set(_CHOICE_KEYS) | {"delta", "output"}


def _to_float(key: str, value: str) -> float:
    try:
        out = float(value)
    except ValueError:
        raise ConfigError(f"--{key.replace('_', '-')}: expected a number, got {value!r}") from None
    if not math.isfinite(out):
        raise ConfigError(f"--{key.replace('_', '-')}: value must be finite, got {value!r}")
    return out


def _to_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"--{key.replace('_', '-')}: expected an integer, got {value!r}") from None


def resolve_config(raw: dict[str, str]) -> RunConfig:
    """Validate and resolve a merged key->string mapping into a RunConfig."""
    unknown = set(raw) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    for key, choices in _CHOICE_KEYS.items():
        if key in raw and raw[key] not in choices:
            raise ConfigError(
                f"--{key.replace('_', '-')}: must be one of {choices}, got {raw[key]!r}"
            )

    vals: dict[str, object] = {}
    for key in _FLOAT_KEYS:
        if key in raw:
            vals[key] = _to_float(key, raw[key])
    for key in _INT_KEYS:
        if key in raw:
            vals[key] = _to_int(key, raw[key])

    units = raw.get("units", "omega_m")
    if units == "omega_m":
        omega_m = vals.get("omega_m", 1.0)
        if omega_m != 1.0:
            raise UnitError(
                "in omega_m units the mechanical frequency is 1 by definition; "
                "pass --units si to use a dimensionful --omega-m"
            )
    else:
        if "omega_m" not in vals:
            raise ConfigError("--units si requires an explicit --omega-m")
        omega_m = vals["omega_m"]
        if omega_m <= 0:
            raise ConfigError(f"--omega-m must be > 0, got {omega_m}")

    topology = raw.get("topology", "none")

    if "kappa_f" in vals and ("kappa1" in vals or "kappa2" in vals):
        raise ConfigError("give either --kappa-f or --kappa1/--kappa2, not both")
    kappa1 = kappa2 = None
    if "kappa_f" in vals:
        kappa1 = kappa2 = vals["kappa_f"]
    else:
        kappa1 = vals.get("kappa1")
        kappa2 = vals.get("kappa2")
        if (kappa1 is None) != (kappa2 is None):
            raise ConfigError("--kappa1 and --kappa2 must be given together")

    delta_f = vals.get("delta_f")
    if delta_f is None:
        if topology == "notch":
            delta_f = omega_m
        elif topology == "bandpass":
            delta_f = -omega_m

    delta_from_auto = False
    delta: float | None
    raw_delta = raw.get("delta")
    if raw_delta is None:
        delta = -omega_m
    elif raw_delta == "auto":
        if topology != "notch":
            raise ConfigError("--delta auto is defined for the notch topology only")
        if "kappa" not in vals:
            raise ConfigError("missing required flag --kappa (needed to resolve --delta auto)")
        if kappa1 is None or kappa1 != kappa2:
            raise ConfigError("--delta auto needs a symmetric controller (--kappa-f)")
        delta = design.optimal_detuning(omega_m, vals["kappa"], kappa1)
        delta_from_auto = True
    else:
        delta = _to_float("delta", raw_delta)

    return RunConfig(
        topology=topology,
        units=units,
        kappa=vals.get("kappa"),
        omega_m=omega_m,
        g=vals.get("g"),
        delta=delta,
        kappa1=kappa1,
        kappa2=kappa2,
        kappa_loss=vals.get("kappa_loss", 0.0),
        delta_f=delta_f,
        gamma_m=vals.get("gamma_m", 0.0),
        n_th=vals.get("n_th", 0.0),
        tau=vals.get("tau", 0.0),
        omega_min=vals.get("omega_min"),
        omega_max=vals.get("omega_max"),
        points=vals.get("points"),
        element=raw.get("element", "loop"),
        sweep_param=raw.get("sweep_param"),
        sweep_min=vals.get("sweep_min"),
        sweep_max=vals.get("sweep_max"),
        sweep_points=vals.get("sweep_points"),
        fmt=raw.get("format", "csv"),
        output=raw.get("output"),
        delta_from_auto=delta_from_auto,
    )


def parse_config(source: str | Path | Sequence[str]) -> RunConfig:
    """Build a RunConfig from a config-file path or an argv-style flag list."""
    if isinstance(source, (str, Path)):
        return resolve_config(_read_config_file(source))
    ns = _flag_parser().parse_args(list(source))
    return resolve_config(_merge_namespace(ns))


def metadata_pairs(cfg: RunConfig) -> tuple[tuple[str, str], ...]:
    """Resolved parameter set as ordered (key, value) string pairs.

    Keys starting with underscore are informational and ignored on re-parse.
    """
    pairs: list[tuple[str, str]] = [("_version", __version__)]
    pairs.append(("topology", cfg.topology))
    pairs.append(("units", cfg.units))
    for key in (
        "kappa", "omega_m", "g", "delta", "kappa1", "kappa2", "kappa_loss",
        "delta_f", "gamma_m", "n_th", "tau", "omega_min", "omega_max",
    ):
        value = getattr(cfg, key)
        if value is not None:
            pairs.append((key, fmt17(value)))
    if cfg.points is not None:
        pairs.append(("points", str(cfg.points)))
    if cfg.element != "loop":
        pairs.append(("element", cfg.element))
    if cfg.sweep_param is not None:
        pairs.append(("sweep_param", cfg.sweep_param))
        for key in ("sweep_min", "sweep_max"):
            value = getattr(cfg, key)
            if value is not None:
                pairs.append((key, fmt17(value)))
        if cfg.sweep_points is not None:
            pairs.append(("sweep_points", str(cfg.sweep_points)))
    pairs.append(("format", cfg.fmt))
    return tuple(pairs)


def emit_metadata(cfg: RunConfig) -> str:
    """Canonical config-file text for the resolved configuration."""
    return "".join(f"{k}={v}\n" for k, v in metadata_pairs(cfg))


# ---------------------------------------------------------------------------
# Model construction from a RunConfig
# ---------------------------------------------------------------------------


def _require(cfg: RunConfig, *keys: str) -> None:
    for key in keys:
        if getattr(cfg, key) is None:
            raise ConfigError(f"missing required flag --{key.replace('_', '-')}")


def _filter_from(cfg: RunConfig) -> FilterCavityParams:
    if cfg.kappa1 is None or cfg.kappa2 is None:
        raise ConfigError("missing required flag --kappa-f (or --kappa1/--kappa2)")
    _require(cfg, "delta_f")
    return FilterCavityParams(
        kappa1=cfg.kappa1,
        kappa2=cfg.kappa2,
        kappa_loss=cfg.kappa_loss,
        delta_f=cfg.delta_f,
    )


def system_config(cfg: RunConfig) -> SystemConfig:
    """Materialize the physics objects behind a RunConfig."""
    _require(cfg, "kappa", "g", "delta")
    cav = OptoCavityParams(kappa=cfg.kappa, delta=cfg.delta, g=cfg.g, omega_m=cfg.omega_m)
    topology = Topology(cfg.topology)
    filt = _filter_from(cfg) if topology is not Topology.NONE else None
    return SystemConfig(cav=cav, filt=filt, topology=topology, delay=cfg.tau)


def _grid(cfg: RunConfig) -> np.ndarray:
    _require(cfg, "omega_min", "omega_max", "points")
    if cfg.points < 2:
        raise ConfigError("--points must be >= 2 for spectrum commands")
    if not cfg.omega_min < cfg.omega_max:
        raise ConfigError("--omega-min must be below --omega-max")
    return np.linspace(cfg.omega_min, cfg.omega_max, cfg.points)


def _bath(cfg: RunConfig) -> spectra.MechanicalBath:
    return spectra.MechanicalBath(gamma_m=cfg.gamma_m, n_th=cfg.n_th)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_spectrum(cfg: RunConfig) -> OutputTable:
    """Shaped spectrum vs the bare-cavity reference, or the filter response."""
    grid = _grid(cfg)
    meta = metadata_pairs(cfg)

    if cfg.element == "filter":
        filt = _filter_from(cfg)
        rows = []
        for w in grid:
            s = netalg.scattering(filt, w)
            rows.append((float(w), abs(s[0, 0]) ** 2, abs(s[1, 0]) ** 2))
        return OutputTable(meta=meta, columns=("omega", "R2", "T2"), rows=tuple(rows))

    config = system_config(cfg)
    chi_cl = design.closed_loop_response(config)
    # Reference curve: the same cavity without feedback at the conventional
    # optimum delta = -omega_m, the baseline the shaped spectra are judged by.
    bare = OptoCavityParams(
        kappa=cfg.kappa, delta=-cfg.omega_m, g=cfg.g, omega_m=cfg.omega_m
    )
    g = cfg.g
    rows = []
    for w in grid:
        unc = g * g * abs(netalg.chi(bare, w)) ** 2
        try:
            sigma = g * g * abs(chi_cl(w)) ** 2
        except SingularLoop:
            sigma = None  # flagged row: frequency kept, value left empty
        rows.append((float(w), sigma, unc))
    return OutputTable(
        meta=meta, columns=("omega", "Sigma", "Sigma_uncontrolled"), rows=tuple(rows)
    )


def _rates_cells(config: SystemConfig, bath: spectra.MechanicalBath):
    rates = spectra.scattering_rates(
        design.closed_loop_response(config), config.cav.g, config.cav.omega_m
    )
    try:
        n_steady = spectra.steady_phonon(rates, bath)
    except NoNetCooling:
        n_steady = None
    return rates, n_steady


def cmd_rates(cfg: RunConfig) -> OutputTable:
    """One-row table of the sideband rates and cooling figures."""
    config = system_config(cfg)
    rates, n_steady = _rates_cells(config, _bath(cfg))
    feasible = None
    if config.topology is Topology.BANDPASS and config.filt.is_symmetric_ideal:
        feasible = float(
            design.bandpass_ground_state_feasible(
                cfg.kappa, config.filt.kappa_f, cfg.omega_m
            )
        )
    row = (
        rates.a_plus,
        rates.a_minus,
        rates.gamma_opt,
        rates.n_min,
        n_steady,
        float(rates.gamma_opt > 0),
        feasible,
    )
    return OutputTable(
        meta=metadata_pairs(cfg),
        columns=(
            "a_plus", "a_minus", "gamma_opt", "n_min", "n_steady",
            "net_cooling", "bandpass_feasible",
        ),
        rows=(row,),
    )


def cmd_sweep(cfg: RunConfig) -> OutputTable:
    """Rates and stability along a parameter grid."""
    _require(cfg, "sweep_param", "sweep_min", "sweep_max", "sweep_points")
    if cfg.sweep_points < 1:
        raise ConfigError("--sweep-points must be >= 1")
    if cfg.sweep_points > 1 and not cfg.sweep_min < cfg.sweep_max:
        raise ConfigError("--sweep-min must be below --sweep-max")
    grid = np.linspace(cfg.sweep_min, cfg.sweep_max, cfg.sweep_points)
    table = design.sweep(system_config(cfg), cfg.sweep_param, grid, bath=_bath(cfg))
    rows = []
    for row in table.rows:
        r = row.rates
        rows.append(
            (
                row.value,
                r.a_plus if r else None,
                r.a_minus if r else None,
                r.gamma_opt if r else None,
                r.n_min if r else None,
                None if row.stable is None else float(row.stable),
                float(row.singular),
            )
        )
    return OutputTable(
        meta=metadata_pairs(cfg),
        columns=(
            cfg.sweep_param, "a_plus", "a_minus", "gamma_opt", "n_min",
            "stable", "singular",
        ),
        rows=tuple(rows),
    )


def cmd_oracle(cfg: RunConfig) -> OutputTable:
    """Lyapunov cross-check of the rate-equation occupation."""
    config = system_config(cfg)
    bath = _bath(cfg)
    try:
        report = oracle.consistency_check(config, bath)
        row = (1.0, report.n_oracle, report.n_rate, report.rel_dev)
    except UnstableModel:
        row = (0.0, None, None, None)  # reported, not fatal
    return OutputTable(
        meta=metadata_pairs(cfg),
        columns=("stable", "n_oracle", "n_rate", "rel_dev"),
        rows=(row,),
    )


def cmd_design(cfg: RunConfig) -> OutputTable:
    """Resolved optimal detuning, controller detuning, and feasibility."""
    _require(cfg, "kappa")
    if cfg.kappa1 is None or cfg.kappa1 != cfg.kappa2 or cfg.kappa_loss != 0.0:
        raise ConfigError("design needs a symmetric lossless controller (--kappa-f)")
    if cfg.delta_f is None:
        raise ConfigError("design needs a topology (or explicit --delta-f)")
    delta_c = design.optimal_detuning(cfg.omega_m, cfg.kappa, cfg.kappa1)
    feasible = design.bandpass_ground_state_feasible(cfg.kappa, cfg.kappa1, cfg.omega_m)
    row = (delta_c, cfg.delta_f, cfg.delta, float(feasible))
    return OutputTable(
        meta=metadata_pairs(cfg),
        columns=("delta_c", "delta_f", "delta", "bandpass_feasible"),
        rows=(row,),
    )


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "rates": cmd_rates,
    "sweep": cmd_sweep,
    "oracle": cmd_oracle,
    "design": cmd_design,
}


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def render_csv(table: OutputTable) -> str:
    lines = ["# " + " ".join(f"{k}={v}" for k, v in table.meta)]
    lines.append(",".join(table.columns))
    for row in table.rows:
        lines.append(",".join("" if c is None else fmt17(c) for c in row))
    return "\n".join(lines) + "\n"


def render_json(table: OutputTable) -> str:
    payload = {
        "meta": dict(table.meta),
        "columns": list(table.columns),
        "rows": [list(row) for row in table.rows],
    }
    return json.dumps(payload, indent=2, sort_keys=False) + "\n"


def render(table: OutputTable, fmt: str) -> str:
    return render_csv(table) if fmt == "csv" else render_json(table)


# ---------------------------------------------------------------------------
# Argument plumbing
# ---------------------------------------------------------------------------


def _flag_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config")
    p.add_argument("--topology", choices=_TOPOLOGIES)
    p.add_argument("--units", choices=_UNITS)
    p.add_argument("--kappa")
    p.add_argument("--omega-m", dest="omega_m")
    p.add_argument("--g")
    p.add_argument("--delta")
    p.add_argument("--kappa-f", dest="kappa_f")
    p.add_argument("--kappa1")
    p.add_argument("--kappa2")
    p.add_argument("--kappa-loss", dest="kappa_loss")
    p.add_argument("--delta-f", dest="delta_f")
    p.add_argument("--gamma-m", dest="gamma_m")
    p.add_argument("--n-th", dest="n_th")
    p.add_argument("--tau")
    p.add_argument("--omega-min", dest="omega_min")
    p.add_argument("--omega-max", dest="omega_max")
    p.add_argument("--points")
    p.add_argument("--element", choices=_ELEMENTS)
    p.add_argument("--sweep-param", dest="sweep_param", choices=_SWEEP_PARAMS)
    p.add_argument("--sweep-min", dest="sweep_min")
    p.add_argument("--sweep-max", dest="sweep_max")
    p.add_argument("--sweep-points", dest="sweep_points")
    p.add_argument("--format", dest="format", choices=_FORMATS)
    p.add_argument("--output", "-o", dest="output")
    return p


def _merge_namespace(ns: argparse.Namespace) -> dict[str, str]:
    raw = _read_config_file(ns.config) if ns.config else {}
    for key, value in vars(ns).items():
        if key in ("config", "command") or value is None:
            continue
        raw[key] = str(value)
    return raw


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfcool",
        description="Coherent-feedback loop shaping for optomechanical cooling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    flags = _flag_parser()
    sub.add_parser("spectrum", parents=[flags], help="emit Sigma(omega) or a filter response")
    sub.add_parser("rates", parents=[flags], help="emit the sideband rates and cooling figures")
    sub.add_parser("sweep", parents=[flags], help="emit rates along a parameter grid")
    sub.add_parser("oracle", parents=[flags], help="emit the Lyapunov cross-check")
    sub.add_parser("design", parents=[flags], help="emit the resolved design point")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        ns = build_parser().parse_args(argv)
        cfg = resolve_config(_merge_namespace(ns))
        table = _COMMANDS[ns.command](cfg)
        text = render(table, cfg.fmt)
        if cfg.output:
            Path(cfg.output).write_text(text, encoding="utf-8", newline="")
        else:
            sys.stdout.write(text)
    except ConfigError as exc:
        print(f"cfcool: config error: {exc}", file=sys.stderr)
        return 1
    except SingularLoop as exc:
        print(f"cfcool: numeric failure: {exc}", file=sys.stderr)
        return 2
    return 0
