"""Command-line front end.

Subcommands:
  sensitivity   degrade an observed series and score every step
  simulate      run one model with a fixed parameter set
  ensemble      sampled ensemble + guided search + verdicts + flux maps
  calibrate     guided search only
  fluxmap       re-filter an existing ensemble file into a flux map
  sufficiency   recompute verdicts for an existing ensemble file

Configuration is a key=value text file; command-line flags override file
values.  Every run is deterministic given its configuration: all
randomness flows from the single master seed, which is recorded in the
header of every output file.

Exit codes: 0 success, 2 configuration error, 3 input data error,
4 computation error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from . import corruption, experiment, mapping, sampling
from .errors import ComputationError, ConfigError, DataError, FluxmapError
from .metrics import MetricId
from .models import core as models
from .series import FLOW_COLUMN, Forcing, Series, load_forcing, load_series, write_table_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4

_PLAIN_KEYS = {
    "forcing", "obs", "obs_column", "model", "metrics", "size", "seed",
    "warmup", "deltas", "threads", "batch", "out", "ensemble_file",
    "sce_repeats", "sce_max_evals", "sce_complexes", "sce_tol", "sce_window",
}
_PREFIX_KEYS = ("range.", "param.", "init.", "sce_hmv.")


def load_config_file(path) -> dict[str, str]:
    """Parse `key = value` lines; '#' starts a comment; keys validated."""
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot open config {path}: {exc.strerror}")
    entries: dict[str, str] = {}
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path} line {lineno}: expected key = value")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key in entries:
                raise ConfigError(f"{path} line {lineno}: duplicate key {key!r}")
            if key not in _PLAIN_KEYS and not key.startswith(_PREFIX_KEYS):
                raise ConfigError(f"{path} line {lineno}: unknown key {key!r}")
            entries[key] = value
    return entries


@dataclass(frozen=True)
class RunConfig:
    """Merged and validated settings for one command invocation."""

    entries: dict[str, str]

    def has(self, key: str) -> bool:
        return key in self.entries

    def raw(self, key: str, default: str | None = None) -> str:
        if key in self.entries:
            return self.entries[key]
        if default is None:
            raise ConfigError(f"missing required setting {key!r}")
        return default

    def get_int(self, key: str, default: int | None = None) -> int:
        text = self.raw(key, None if default is None else str(default))
        try:
            value = int(text)
        except ValueError:
            raise ConfigError(f"{key} must be an integer, got {text!r}")
        return value

    def get_float(self, key: str, default: float | None = None) -> float:
        text = self.raw(key, None if default is None else repr(default))
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"{key} must be a number, got {text!r}")

    def get_path(self, key: str) -> str:
        path = self.raw(key)
        if not os.path.exists(path):
            raise ConfigError(f"{key} file does not exist: {path}")
        return path

    def model(self) -> models.ModelId:
        try:
            return models.ModelId.parse(self.raw("model"))
        except DataError as exc:
            raise ConfigError(str(exc))

    def metrics(self) -> list[MetricId]:
        text = self.raw("metrics", "nse,kgess,wia")
        out = []
        for part in text.split(","):
            try:
                out.append(MetricId.parse(part))
            except DataError as exc:
                raise ConfigError(str(exc))
        if not out:
            raise ConfigError("metrics list is empty")
        return out

    def deltas(self) -> list[float]:
        text = self.raw("deltas", "0.05")
        try:
            values = [float(p) for p in text.split(",") if p.strip()]
        except ValueError:
            raise ConfigError(f"deltas must be numbers, got {text!r}")
        if not values:
            raise ConfigError("deltas list is empty")
        for v in values:
            if not v > 0.0:
                raise ConfigError(f"deltas must be > 0, got {v}")
        return values

    def prefixed(self, prefix: str) -> dict[str, float]:
        out = {}
        for key, text in self.entries.items():
            if key.startswith(prefix):
                try:
                    out[key[len(prefix):]] = float(text)
                except ValueError:
                    raise ConfigError(f"{key} must be a number, got {text!r}")
        return out

    def space(self, model: models.ModelId) -> sampling.ParameterSpace:
        ranges = dict(models.DEFAULT_RANGES[str(model)])
        for key, text in self.entries.items():
            if not key.startswith("range."):
                continue
            name = key[len("range."):]
            if name not in ranges:
                raise ConfigError(f"range override for unknown parameter {name!r}")
            parts = text.split(",")
            if len(parts) != 2:
                raise ConfigError(f"{key} must be 'low,high', got {text!r}")
            try:
                ranges[name] = (float(parts[0]), float(parts[1]))
            except ValueError:
                raise ConfigError(f"{key} must be numeric bounds, got {text!r}")
        try:
            return sampling.ParameterSpace.from_ranges(
                models.param_names(model), ranges
            )
        except DataError as exc:
            raise ConfigError(str(exc))

    def sce_config(self, model: models.ModelId, ndim: int, seed: int) -> sampling.SceConfig:
        complexes = self.get_int(
            "sce_complexes", experiment.DEFAULT_COMPLEXES[model]
        )
        base = sampling.default_sce_config(
            ndim, complexes, seed, max_evals=self.get_int("sce_max_evals", 50_000)
        )
        return replace(
            base,
            convergence_tol=self.get_float("sce_tol", base.convergence_tol),
            convergence_window=self.get_int("sce_window", base.convergence_window),
        )


def _merge_config(args: argparse.Namespace) -> RunConfig:
    entries = load_config_file(args.config) if getattr(args, "config", None) else {}
    overrides = {
        "model": getattr(args, "model", None),
        "size": getattr(args, "size", None),
        "seed": getattr(args, "seed", None),
        "warmup": getattr(args, "warmup", None),
        "threads": getattr(args, "threads", None),
        "out": getattr(args, "out", None),
    }
    metric_list = getattr(args, "metric", None)
    if metric_list:
        overrides["metrics"] = ",".join(metric_list)
    delta_list = getattr(args, "delta", None)
    if delta_list:
        overrides["deltas"] = ",".join(str(d) for d in delta_list)
    for key, value in overrides.items():
        if value is not None:
            entries[key] = str(value)
    return RunConfig(entries=entries)


def _out_dir(config: RunConfig) -> str:
    out = config.raw("out", ".")
    os.makedirs(out, exist_ok=True)
    return out


def _load_observed(config: RunConfig) -> Series:
    path = config.get_path("obs") if config.has("obs") else config.get_path("forcing")
    return load_series(path, config.raw("obs_column", FLOW_COLUMN))


def _load_aligned(config: RunConfig) -> tuple[Forcing, Series, int]:
    forcing = load_forcing(config.get_path("forcing"))
    warmup = config.get_int("warmup", models.DEFAULT_WARMUP_DAYS)
    obs_full = _load_observed(config)
    if obs_full.n == forcing.n and obs_full.start_date == forcing.start_date:
        obs = obs_full.drop_first(warmup)
    else:
        obs = obs_full
    return forcing, obs, warmup


# --- subcommands ---------------------------------------------------------

def cmd_sensitivity(args) -> int:
    config = _merge_config(args)
    seed = config.get_int("seed", 0)
    obs = load_series(args.obs, args.column)
    out = _out_dir(config)

    curves = corruption.degradation_table(obs, seed)
    residuals = corruption.residual_table(obs, seed)
    comments = [f"seed = {seed}", f"observed = {args.obs}", f"n = {obs.n}"]
    corruption.write_degradation_csv(
        os.path.join(out, "degradation.csv"), curves, comments
    )
    corruption.write_residuals_csv(
        os.path.join(out, "residuals.csv"), residuals, obs, comments
    )

    by_key = {(c.metric, c.regime): c for c in curves}
    regimes = list(corruption.ErrorRegime)
    columns = {"metric": [str(m) for m in MetricId]}
    for regime in regimes:
        columns[str(regime)] = [
            by_key[(m, regime)].values[corruption.N_STEPS] for m in MetricId
        ]
    write_table_csv(
        os.path.join(out, "step20_table.csv"),
        comments + [f"step = {corruption.N_STEPS}"],
        columns,
    )
    return EXIT_OK


def _params_from_config(config: RunConfig, model: models.ModelId):
    values = config.prefixed("param.")
    try:
        return models.params_from_mapping(model, values)
    except DataError as exc:
        raise ConfigError(str(exc))


def cmd_simulate(args) -> int:
    config = _merge_config(args)
    model = config.model()
    forcing = load_forcing(config.get_path("forcing"))
    warmup = config.get_int("warmup", models.DEFAULT_WARMUP_DAYS)
    params = _params_from_config(config, model)
    init = config.prefixed("init.") or None
    output = models.simulate(model, params, forcing, warmup, init, want_trace=True)

    out = _out_dir(config)
    table = output.flux_table
    columns = {
        "flow_mm": list(output.flow.values),
        "intensity_mm": list(table[:, models.FLUX_INTENSITY]),
        "wetness_mm": list(table[:, models.FLUX_WETNESS]),
        "slow_mm": list(table[:, models.FLUX_SLOW]),
        "aet_mm": list(table[:, models.FLUX_AET]),
    }
    state_names = _module_state_names(model)
    trace = output.state_trace[warmup:]
    for j, name in enumerate(state_names):
        columns[name + "_mm"] = list(trace[:, j])
    comments = [
        f"model = {model}",
        f"warmup = {warmup}",
    ] + [f"param.{n} = {float(v)!r}" for n, v in zip(
        models.param_names(model), params.to_array()
    )]
    balance = output.mass_balance_error
    tolerance = 1e-6 * output.precip_total
    path = os.path.join(out, "simulation.csv")
    write_table_csv(
        path, comments, columns, date_anchor=output.flow.start_date,
        footer_comments=[
            f"mass_balance_error_mm = {balance!r}",
            f"mass_balance_tolerance_mm = {tolerance!r}",
            f"degenerate = {output.degenerate}",
        ],
    )
    return EXIT_OK


def _module_state_names(model: models.ModelId) -> tuple[str, ...]:
    from .models import sacramento, simhyd

    return simhyd.STATE_NAMES if model is models.ModelId.SIMHYD else sacramento.STATE_NAMES


def _sce_for_metric(config: RunConfig, model, space, forcing, obs, warmup,
                    metric, seed, threads):
    objective = experiment.make_objective(model, metric, forcing, obs, warmup)
    sce_config = config.sce_config(model, space.ndim, seed)
    repeats = config.get_int("sce_repeats", 10)
    hmv, results = sampling.sce_repeats(
        objective, space, sce_config, repeats=repeats, threads=threads
    )
    return hmv, results, sce_config


def _write_sce_json(path, metric, hmv, results, space, seed):
    payload = {
        "metric": str(metric),
        "seed": seed,
        "sce_hmv": hmv,
        "repeats": [json.loads(r.to_json(space)) for r in results],
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(payload, indent=2) + "\n")


def cmd_calibrate(args) -> int:
    config = _merge_config(args)
    model = config.model()
    forcing, obs, warmup = _load_aligned(config)
    space = config.space(model)
    seed = config.get_int("seed", 0)
    threads = config.get_int("threads", 1)
    out = _out_dir(config)
    for metric in config.metrics():
        hmv, results, _ = _sce_for_metric(
            config, model, space, forcing, obs, warmup, metric, seed, threads
        )
        _write_sce_json(
            os.path.join(out, f"sce_{metric}.json"), metric, hmv, results,
            space, seed,
        )
    return EXIT_OK


def cmd_ensemble(args) -> int:
    config = _merge_config(args)
    model = config.model()
    forcing, obs, warmup = _load_aligned(config)
    space = config.space(model)
    size = config.get_int("size", 10_000)
    if size < 1:
        raise ConfigError(f"size must be >= 1, got {size}")
    seed = config.get_int("seed", 0)
    threads = config.get_int("threads", 1)
    batch = config.get_int("batch", 10_000)
    metrics = config.metrics()
    deltas = config.deltas()
    out = _out_dir(config)

    matrix = sampling.lhs_matrix(space, size, seed)
    best: dict[MetricId, float] = {}

    def tracked(records):
        for r in records:
            for metric, value in r.metric_values.items():
                if metric not in best or value > best[metric]:
                    best[metric] = value
            yield r

    ensemble_path = os.path.join(out, "ensemble.csv")
    comments = [
        f"model = {model}", f"size = {size}", f"seed = {seed}",
        f"warmup = {warmup}",
        f"metrics = {','.join(str(m) for m in metrics)}",
    ]
    experiment.write_ensemble_csv(
        ensemble_path,
        tracked(experiment.evaluate_matrix(
            model, matrix, forcing, obs, metrics, warmup,
            threads=threads, batch=batch,
        )),
        space, comments,
    )

    for metric in metrics:
        if metric not in best:
            raise ComputationError(
                f"no ensemble run produced a usable {metric} value"
            )
        sce_hmv, results, _ = _sce_for_metric(
            config, model, space, forcing, obs, warmup, metric, seed, threads
        )
        _write_sce_json(
            os.path.join(out, f"sce_{metric}.json"), metric, sce_hmv, results,
            space, seed,
        )
        verdict = experiment.verdict_from_values(metric, best[metric], sce_hmv)
        with open(os.path.join(out, f"verdict_{metric}.json"), "w",
                  encoding="utf-8") as fh:
            fh.write(verdict.to_json() + "\n")

        for delta in deltas:
            filt = experiment.AcceptabilityFilter.from_hmv(
                metric, delta, verdict.hmv
            )
            accepted = experiment.acceptable_runs(
                experiment.iter_ensemble_csv(ensemble_path, space), filt
            )
            points = mapping.build_points(
                accepted, metric, verdict.hmv, filt.threshold
            )
            mapping.export_fluxmap(
                points, verdict.hmv, filt.threshold,
                os.path.join(out, f"fluxmap_{metric}_delta{delta:g}.csv"),
                metric, size, seed,
            )
    return EXIT_OK


def cmd_fluxmap(args) -> int:
    config = _merge_config(args)
    model = config.model()
    space = config.space(model)
    path = config.get_path("ensemble_file")
    seed = config.get_int("seed", 0) if config.has("seed") else None
    out = _out_dir(config)
    sce_values = config.prefixed("sce_hmv.")
    for metric in config.metrics():
        size = 0
        ensemble_hmv = None
        for r in experiment.iter_ensemble_csv(path, space):
            size += 1
            value = r.metric_values.get(metric)
            if value is not None and (ensemble_hmv is None or value > ensemble_hmv):
                ensemble_hmv = value
        if ensemble_hmv is None:
            raise ComputationError(f"no run in {path} has a usable {metric} value")
        hmv = max(ensemble_hmv, sce_values.get(str(metric), ensemble_hmv))
        for delta in config.deltas():
            filt = experiment.AcceptabilityFilter.from_hmv(metric, delta, hmv)
            accepted = experiment.acceptable_runs(
                experiment.iter_ensemble_csv(path, space), filt
            )
            points = mapping.build_points(accepted, metric, hmv, filt.threshold)
            mapping.export_fluxmap(
                points, hmv, filt.threshold,
                os.path.join(out, f"fluxmap_{metric}_delta{delta:g}.csv"),
                metric, size, seed,
            )
    return EXIT_OK


def cmd_sufficiency(args) -> int:
    config = _merge_config(args)
    model = config.model()
    space = config.space(model)
    path = config.get_path("ensemble_file")
    out = _out_dir(config)
    sce_values = config.prefixed("sce_hmv.")
    for metric in config.metrics():
        key = str(metric)
        if key not in sce_values:
            raise ConfigError(f"missing setting sce_hmv.{key}")
        verdict = experiment.sufficiency(
            experiment.iter_ensemble_csv(path, space), sce_values[key], metric
        )
        with open(os.path.join(out, f"verdict_{metric}.json"), "w",
                  encoding="utf-8") as fh:
            fh.write(verdict.to_json() + "\n")
    return EXIT_OK


# --- argument parsing ----------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fluxmap",
        description="Ensemble evaluation of conceptual rainfall-runoff models "
                    "with runoff-mode flux mapping.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, config=True):
        if config:
            p.add_argument("--config", help="key=value settings file")
        p.add_argument("--seed", type=int, help="master seed (default 0)")
        p.add_argument("--out", help="output directory (default .)")

    p = sub.add_parser("sensitivity", help="degrade an observed series and "
                       "score every corruption step")
    p.add_argument("--obs", required=True, help="CSV with the observed series")
    p.add_argument("--column", default=FLOW_COLUMN,
                   help=f"column to read (default {FLOW_COLUMN})")
    common(p)
    p.set_defaults(fn=cmd_sensitivity)

    p = sub.add_parser("simulate", help="run one model with fixed parameters")
    common(p)
    p.add_argument("--model", help="simhyd or sacramento")
    p.add_argument("--warmup", type=int, help="days excluded from scoring")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("ensemble", help="sampled ensemble, guided search, "
                       "verdicts, flux maps")
    common(p)
    p.add_argument("--model", help="simhyd or sacramento")
    p.add_argument("--metric", action="append",
                   help="metric id, repeatable (default all)")
    p.add_argument("--size", type=int, help="ensemble size")
    p.add_argument("--warmup", type=int)
    p.add_argument("--delta", action="append", type=float,
                   help="acceptability distance, repeatable")
    p.add_argument("--threads", type=int, help="worker threads (default 1)")
    p.set_defaults(fn=cmd_ensemble)

    p = sub.add_parser("calibrate", help="guided search only")
    common(p)
    p.add_argument("--model", help="simhyd or sacramento")
    p.add_argument("--metric", action="append")
    p.add_argument("--warmup", type=int)
    p.add_argument("--threads", type=int)
    p.set_defaults(fn=cmd_calibrate)

    p = sub.add_parser("fluxmap", help="re-filter an existing ensemble file")
    common(p)
    p.add_argument("--model", help="simhyd or sacramento")
    p.add_argument("--metric", action="append")
    p.add_argument("--delta", action="append", type=float)
    p.set_defaults(fn=cmd_fluxmap)

    p = sub.add_parser("sufficiency", help="recompute verdicts for an "
                       "existing ensemble file")
    common(p)
    p.add_argument("--model", help="simhyd or sacramento")
    p.add_argument("--metric", action="append")
    p.set_defaults(fn=cmd_sufficiency)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FluxmapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
