"""Experiment orchestration: figure-data sweeps, table verification and
reproduction, result persistence, and configuration handling.

Outputs are one CSV per data series plus a JSON manifest per run; CSV
content is a pure function of the configuration (timestamps live only in
the manifest), so repeated runs with fixed seeds are byte-identical.
"""

from __future__ import annotations

import csv
import datetime
import io
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .metrics import gate_fidelity, nl_variance, state_fidelity, wigner
from .numerics import DEFAULT_FOCK_CUTOFF, QGrid, default_grid
from .optimize import (
    GATE_FIDELITY_MAX,
    GATE_FIDELITY_ROWS,
    NL_VARIANCE_MIN,
    NL_VARIANCE_ROWS,
    GaConfig,
    Objective,
    evaluate_table_row,
    optimize_bloch_ga,
    optimize_gaussian,
)
from .states import StateSpec, build_state, fit_trisqueezed, make_cubic_phase

EXPERIMENTS = (
    "fig_wigner",
    "fig_state_fidelity",
    "fig_gate_fidelity",
    "fig_gate_fidelity_opt",
    "fig_nl_variance",
    "fig_nl_variance_opt",
    "table_msbqc",
    "table_mbqc",
)

SWEEP_SCHEMES = ("gaussian_squeezed", "fock_truncation", "operator_truncation", "trisqueezed")

_CSV_HEADER = [
    "experiment", "scheme", "a", "r", "metric", "value",
    "op_s", "op_t", "op_d", "f", "s", "t",
    "n_photons", "seed", "expected", "delta",
    "grid_half_extent", "grid_points", "fock_cutoff",
    "input_squeeze", "outcome", "error",
]


@dataclass(frozen=True)
class RunConfig:
    """Configuration of one experiment run; field names are the config-file
    key names."""

    experiment: str
    a_values: tuple = (0.02, 0.173)
    r_start: float = 0.0
    r_stop: float = 1.2
    r_count: int = 41
    input_squeeze: float = 0.5
    outcome: float = 0.0
    seed: int = 2024
    out_dir: str = "results"
    mode: str = "verify"              # tables: verify | reproduce
    n_max: int = 5                    # tables: reproduce N = 0..n_max
    grid_half_extent: float | None = None
    grid_points: int | None = None
    fock_cutoff: int = DEFAULT_FOCK_CUTOFF
    wigner_span: float = 8.0
    wigner_points: int = 201
    ga: GaConfig = field(default_factory=GaConfig)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.r_count < 2:
            raise ValueError("sweep needs at least 2 points")
        if self.mode not in ("verify", "reproduce"):
            raise ValueError(f"mode must be verify or reproduce, got {self.mode!r}")
        object.__setattr__(self, "a_values", tuple(float(a) for a in self.a_values))

    def r_values(self) -> np.ndarray:
        return np.linspace(self.r_start, self.r_stop, self.r_count)

    def sweep_grid(self, n_fock: int | None = None) -> QGrid:
        if self.grid_half_extent is not None:
            return QGrid(self.grid_half_extent, self.grid_points or 8192)
        r_max = max(abs(self.r_start), abs(self.r_stop))
        grid = default_grid(r_max, n_fock=n_fock)
        if self.grid_points is not None:
            grid = QGrid(grid.half_extent, self.grid_points)
        return grid

    def to_mapping(self) -> dict:
        out = {
            "experiment": self.experiment,
            "a_values": ",".join(repr(a) for a in self.a_values),
            "r_start": repr(self.r_start),
            "r_stop": repr(self.r_stop),
            "r_count": str(self.r_count),
            "input_squeeze": repr(self.input_squeeze),
            "outcome": repr(self.outcome),
            "seed": str(self.seed),
            "out_dir": self.out_dir,
            "mode": self.mode,
            "n_max": str(self.n_max),
            "fock_cutoff": str(self.fock_cutoff),
            "wigner_span": repr(self.wigner_span),
            "wigner_points": str(self.wigner_points),
        }
        if self.grid_half_extent is not None:
            out["grid_half_extent"] = repr(self.grid_half_extent)
        if self.grid_points is not None:
            out["grid_points"] = str(self.grid_points)
        for key, val in vars(self.ga).items():
            out[f"ga_{key}"] = repr(val)
        return out

    @classmethod
    def from_mapping(cls, experiment: str, mapping: dict) -> "RunConfig":
        m = dict(mapping)
        m.pop("experiment", None)
        kwargs = {"experiment": experiment}
        if "a_values" in m:
            kwargs["a_values"] = tuple(float(x) for x in str(m.pop("a_values")).split(",") if x)
        for name, conv in (
            ("r_start", float), ("r_stop", float), ("r_count", int),
            ("input_squeeze", float), ("outcome", float), ("seed", int),
            ("out_dir", str), ("mode", str), ("n_max", int),
            ("grid_half_extent", float), ("grid_points", int), ("fock_cutoff", int),
            ("wigner_span", float), ("wigner_points", int),
        ):
            if name in m:
                kwargs[name] = conv(m.pop(name))
        ga_keys = {k[3:]: v for k, v in list(m.items()) if k.startswith("ga_")}
        for k in list(m):
            if k.startswith("ga_"):
                m.pop(k)
        if ga_keys:
            kwargs["ga"] = GaConfig.from_mapping(ga_keys)
        if m:
            raise ValueError(f"unrecognized config keys: {sorted(m)}")
        return cls(**kwargs)


def parse_config_text(text: str) -> dict:
    """Flat `key = value` lines; '#' starts a comment."""
    mapping = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        mapping[key.strip()] = value.strip()
    return mapping


def load_config(path: str | Path, experiment: str, overrides: dict | None = None) -> RunConfig:
    mapping = parse_config_text(Path(path).read_text()) if path else {}
    if overrides:
        mapping.update(overrides)
    return RunConfig.from_mapping(experiment, mapping)


@dataclass
class ResultSet:
    """Rows plus the manifest needed to re-derive any of them."""

    experiment: str
    rows: list
    manifest: dict
    records: list = field(default_factory=list)

    def error_count(self) -> int:
        return sum(1 for row in self.rows if row.get("error"))

    def csv_text(self) -> str:
        extra = sorted({k for row in self.rows for k in row} - set(_CSV_HEADER))
        header = _CSV_HEADER + extra
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=header, restval="", lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow(row)
        return buf.getvalue()

    def write(self, out_dir: str | Path) -> Path:
        out = Path(os.environ.get("CVWORKBENCH_OUT", "") or out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{self.experiment}.csv"
        csv_path.write_text(self.csv_text())
        manifest = dict(self.manifest)
        manifest["written_at"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
        (out / f"{self.experiment}_manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n"
        )
        if self.records:
            (out / f"{self.experiment}_records.json").write_text(
                json.dumps(self.records, indent=2, sort_keys=True) + "\n"
            )
        return csv_path


def _manifest(config: RunConfig, grid: QGrid | None = None) -> dict:
    manifest = {
        "experiment": config.experiment,
        "config": config.to_mapping(),
        "version": __version__,
    }
    if grid is not None:
        manifest["grid_half_extent"] = grid.half_extent
        manifest["grid_points"] = grid.point_count
    return manifest


def _base_row(config: RunConfig, grid: QGrid, scheme: str, a: float, r: float | None) -> dict:
    return {
        "experiment": config.experiment,
        "scheme": scheme,
        "a": repr(a),
        "r": "" if r is None else repr(float(r)),
        "grid_half_extent": repr(grid.half_extent),
        "grid_points": str(grid.point_count),
        "fock_cutoff": str(config.fock_cutoff),
        "input_squeeze": repr(config.input_squeeze),
        "outcome": repr(config.outcome),
    }


def _scheme_state(scheme: str, a: float, r: float, grid: QGrid, config: RunConfig):
    """Build one sweep scheme; the trisqueezed scheme re-derives its (f, s, t)
    from the fidelity fit at this sweep point. Returns (wave, extras)."""
    if scheme == "trisqueezed":
        f, s, t = fit_trisqueezed(a, r, grid)
        spec = StateSpec(family="trisqueezed", f=complex(f), s=s, t=t)
        wave = build_state(spec, grid)
        return wave, {"f": repr(f), "s": repr(s), "t": repr(t)}
    spec_kwargs = {"r": r} if scheme == "gaussian_squeezed" else {"a": a, "r": r}
    wave = build_state(StateSpec(family=scheme, **spec_kwargs), grid)
    return wave, {}


def run_state_fidelity_sweep(config: RunConfig) -> ResultSet:
    grid = config.sweep_grid(n_fock=config.fock_cutoff)
    rows = []
    for a in config.a_values:
        for r in config.r_values():
            target = make_cubic_phase(a, float(r), grid)
            for scheme in SWEEP_SCHEMES:
                row = _base_row(config, grid, scheme, a, r)
                row["metric"] = "state_fidelity"
                try:
                    wave, extras = _scheme_state(scheme, a, float(r), grid, config)
                    row.update(extras)
                    row["value"] = repr(state_fidelity(wave, target))
                except Exception as exc:  # annotate and continue
                    row["error"] = f"{type(exc).__name__}: {exc}"
                rows.append(row)
    return ResultSet(config.experiment, rows, _manifest(config, grid))


def run_gate_fidelity_sweep(config: RunConfig, optimized: bool) -> ResultSet:
    grid = config.sweep_grid(n_fock=config.fock_cutoff)
    objective_cache = {}
    rows = []
    for a in config.a_values:
        objective = objective_cache.setdefault(
            a, Objective(GATE_FIDELITY_MAX, a=a, input_squeeze=config.input_squeeze,
                         outcome=config.outcome)
        )
        for r in config.r_values():
            for scheme in SWEEP_SCHEMES:
                row = _base_row(config, grid, scheme, a, r)
                row["metric"] = "gate_fidelity"
                try:
                    wave, extras = _scheme_state(scheme, a, float(r), grid, config)
                    row.update(extras)
                    if optimized:
                        spec = _sweep_spec(scheme, a, float(r), extras)
                        record = optimize_gaussian(spec, objective, dof=("s", "t"), grid=grid)
                        row["value"] = repr(record.value)
                        row["op_s"] = repr(record.parameters["s"])
                        row["op_t"] = repr(record.parameters["t"])
                    else:
                        row["value"] = repr(
                            gate_fidelity(wave, a, config.input_squeeze, config.outcome)
                        )
                except Exception as exc:
                    row["error"] = f"{type(exc).__name__}: {exc}"
                rows.append(row)
    return ResultSet(config.experiment, rows, _manifest(config, grid))


def _sweep_spec(scheme: str, a: float, r: float, extras: dict) -> StateSpec:
    if scheme == "trisqueezed":
        return StateSpec(
            family="trisqueezed",
            f=complex(float(extras["f"])),
            s=float(extras["s"]),
            t=float(extras["t"]),
        )
    if scheme == "gaussian_squeezed":
        return StateSpec(family="gaussian_squeezed", r=r)
    return StateSpec(family=scheme, a=a, r=r)


def run_variance_sweep(config: RunConfig, optimized: bool) -> ResultSet:
    grid = config.sweep_grid(n_fock=config.fock_cutoff)
    rows = []
    for a in config.a_values:
        objective = Objective(NL_VARIANCE_MIN, a=a)
        for r in config.r_values():
            reference = _base_row(config, grid, "cubic_phase_analytic", a, r)
            reference["metric"] = "nl_variance"
            reference["value"] = repr(float(np.exp(-2.0 * r) / 2.0))
            rows.append(reference)
            for scheme in SWEEP_SCHEMES:
                row = _base_row(config, grid, scheme, a, r)
                row["metric"] = "nl_variance"
                try:
                    wave, extras = _scheme_state(scheme, a, float(r), grid, config)
                    row.update(extras)
                    if optimized:
                        spec = _sweep_spec(scheme, a, float(r), extras)
                        record = optimize_gaussian(spec, objective, dof=("s", "t"), grid=grid)
                        row["value"] = repr(record.value)
                        row["op_s"] = repr(record.parameters["s"])
                        row["op_t"] = repr(record.parameters["t"])
                    else:
                        row["value"] = repr(nl_variance(wave, a))
                except Exception as exc:
                    row["error"] = f"{type(exc).__name__}: {exc}"
                rows.append(row)
    return ResultSet(config.experiment, rows, _manifest(config, grid))


def run_table(config: RunConfig, which: str | None = None) -> ResultSet:
    which = which or config.experiment
    if which == "table_msbqc":
        table, kind = GATE_FIDELITY_ROWS, GATE_FIDELITY_MAX
    elif which == "table_mbqc":
        table, kind = NL_VARIANCE_ROWS, NL_VARIANCE_MIN
    else:
        raise ValueError(f"unknown table {which!r}")
    a = 0.173
    objective = Objective(kind, a=a, input_squeeze=config.input_squeeze,
                          outcome=config.outcome)
    rows = []
    if config.grid_half_extent is not None:
        grid = QGrid(config.grid_half_extent, config.grid_points or 8192)
    else:
        grid = default_grid(1.5, n_fock=16)
        if config.grid_points is not None:
            grid = QGrid(grid.half_extent, config.grid_points)
    if config.mode == "verify":
        for entry in table:
            row = _base_row(config, grid, "bloch", a, entry.r)
            row.update({
                "metric": kind,
                "n_photons": str(entry.n_photons),
                "expected": repr(entry.expected),
            })
            try:
                value = evaluate_table_row(entry, objective, grid=grid)
                row["value"] = repr(value)
                row["delta"] = repr(value - entry.expected)
            except Exception as exc:
                row["error"] = f"{type(exc).__name__}: {exc}"
            rows.append(row)
    else:
        records = []
        for index, entry in enumerate(table):
            if entry.n_photons > config.n_max:
                continue
            row = _base_row(config, grid, "bloch", a, None)
            row.update({
                "metric": kind,
                "n_photons": str(entry.n_photons),
                "expected": repr(entry.expected),
                "seed": str(config.seed + index),
            })
            try:
                record = optimize_bloch_ga(
                    entry.n_photons, objective, seed=config.seed + index,
                    config=config.ga, grid=grid,
                )
                records.append(record.to_json_dict())
                row["value"] = repr(record.value)
                row["delta"] = repr(record.value - entry.expected)
                for name, val in record.parameters.items():
                    row[f"param_{name}"] = repr(val)
            except Exception as exc:
                row["error"] = f"{type(exc).__name__}: {exc}"
            rows.append(row)
        return ResultSet(config.experiment, rows, _manifest(config, grid), records)
    return ResultSet(config.experiment, rows, _manifest(config, grid))


def run_wigner(config: RunConfig) -> ResultSet:
    a, r = 0.173, 0.3
    grid = config.sweep_grid(n_fock=config.fock_cutoff)
    axis = np.linspace(-config.wigner_span, config.wigner_span, config.wigner_points)
    out = Path(os.environ.get("CVWORKBENCH_OUT", "") or config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    np.savetxt(out / "wigner_axis.csv", axis, delimiter=",")
    rows = []
    panels = ("cubic_phase",) + SWEEP_SCHEMES[1:]  # phi_c, phi_1, phi_2, phi_3
    for scheme in panels:
        row = _base_row(config, grid, scheme, a, r)
        row["metric"] = "wigner_min"
        try:
            if scheme == "cubic_phase":
                wave, extras = build_state(StateSpec(family="cubic_phase", a=a, r=r), grid), {}
            else:
                wave, extras = _scheme_state(scheme, a, r, grid, config)
            row.update(extras)
            wgrid = wigner(wave, axis, axis)
            np.savetxt(out / f"wigner_{scheme}.csv", wgrid.values, delimiter=",")
            row["value"] = repr(wgrid.minimum())
            row["mass"] = repr(wgrid.mass())
        except Exception as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return ResultSet(config.experiment, rows, _manifest(config, grid))


def run_experiment(config: RunConfig) -> ResultSet:
    runner = {
        "fig_wigner": run_wigner,
        "fig_state_fidelity": run_state_fidelity_sweep,
        "fig_gate_fidelity": lambda c: run_gate_fidelity_sweep(c, optimized=False),
        "fig_gate_fidelity_opt": lambda c: run_gate_fidelity_sweep(c, optimized=True),
        "fig_nl_variance": lambda c: run_variance_sweep(c, optimized=False),
        "fig_nl_variance_opt": lambda c: run_variance_sweep(c, optimized=True),
        "table_msbqc": run_table,
        "table_mbqc": run_table,
    }[config.experiment]
    return runner(config)
