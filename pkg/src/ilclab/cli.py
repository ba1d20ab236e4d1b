"""Command-line entry point.

Subcommands: `synthesize` (gains and diagnostics only), `run` (policy
trials from a JSON config), `game` (same but forcing all four
coalitions), and `casestudy` (the built-in printer benchmark). All of
them write into an output directory: trials.csv, signals.csv, game.csv,
reference.csv, and analysis.json, except `synthesize`, which writes
analysis.json only. Floats are serialized with 17 significant digits so
re-parsing reproduces them bit-exactly.
"""
from __future__ import annotations

from . import _threads  # noqa: F401  (must run before numpy loads)

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, DivergenceError, NumericalError
from .game import Coalition
from .lti import ContinuousTransferFunction
from .ilc import Weights
from .runner import (
    Discretization,
    ExperimentConfig,
    ExperimentResult,
    ReferenceSpec,
    analyze_setup,
    case_study_config,
    run_experiment,
)

_TOP_KEYS = {
    "plant", "controller", "sample_time", "horizon_samples", "trials",
    "weights", "reference", "policies", "discretization", "u0", "tolerances",
}
_TF_KEYS = {"num", "den"}
_WEIGHT_KEYS = {"q", "r", "s", "w", "wr"}
_REFERENCE_KEYS = {
    "kind", "amplitude", "start_sample", "width_samples",
    "smoothing_samples", "samples",
}
_DISCRETIZATION_KEYS = {"plant_method", "controller_method"}

# Signal dumps are heavy; by default only these trials land in signals.csv.
_SIGNAL_TRIALS = (0, 1, 5, 10, 30)


def _require_mapping(value, name: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{name} must be a JSON object, got {type(value).__name__}")
    return value


def _reject_unknown(mapping: dict, allowed: set, name: str) -> None:
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigError(f"unknown {name} keys {unknown}; allowed: {sorted(allowed)}")


def _number(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    return float(value)


def _integer(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    return value


def _number_list(value, name: str) -> list[float]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{name} must be a nonempty JSON array of numbers")
    return [_number(v, f"{name}[{i}]") for i, v in enumerate(value)]


def _parse_tf(raw, name: str) -> ContinuousTransferFunction:
    raw = _require_mapping(raw, name)
    _reject_unknown(raw, _TF_KEYS, name)
    for key in _TF_KEYS:
        if key not in raw:
            raise ConfigError(f"{name} is missing required key {key!r}")
    return ContinuousTransferFunction(
        num=tuple(_number_list(raw["num"], f"{name}.num")),
        den=tuple(_number_list(raw["den"], f"{name}.den")),
    )


def _parse_weights(raw) -> Weights:
    raw = _require_mapping(raw, "weights")
    _reject_unknown(raw, _WEIGHT_KEYS, "weights")
    values = {k: _number(v, f"weights.{k}") for k, v in raw.items()}
    defaults = {"q": 1e3, "r": 1e-2, "s": 1e-3, "w": 1e3, "wr": 1e3}
    try:
        return Weights(**{**defaults, **values})
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_reference(raw) -> ReferenceSpec:
    raw = _require_mapping(raw, "reference")
    _reject_unknown(raw, _REFERENCE_KEYS, "reference")
    if "kind" not in raw:
        raise ConfigError("reference is missing required key 'kind'")
    kwargs = {"kind": raw["kind"]}
    for key in ("amplitude",):
        if key in raw:
            kwargs[key] = _number(raw[key], f"reference.{key}")
    for key in ("start_sample", "width_samples", "smoothing_samples"):
        if key in raw:
            kwargs[key] = _integer(raw[key], f"reference.{key}")
    if "samples" in raw:
        kwargs["samples"] = tuple(_number_list(raw["samples"], "reference.samples"))
    return ReferenceSpec(**kwargs)


def _parse_discretization(raw) -> Discretization:
    raw = _require_mapping(raw, "discretization")
    _reject_unknown(raw, _DISCRETIZATION_KEYS, "discretization")
    return Discretization(**raw)


def _parse_policies(raw) -> tuple[Coalition, ...]:
    if not isinstance(raw, list):
        raise ConfigError("policies must be a JSON array of policy names")
    out = []
    for name in raw:
        try:
            out.append(Coalition(name))
        except ValueError as exc:
            valid = ", ".join(c.value for c in Coalition)
            raise ConfigError(f"unknown policy {name!r}; valid: {valid}") from exc
    return tuple(out)


def _parse_tolerances(raw) -> dict:
    raw = _require_mapping(raw, "tolerances")
    return {k: _number(v, f"tolerances.{k}") for k, v in raw.items()}


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Validate a raw JSON object into an ExperimentConfig."""
    raw = _require_mapping(raw, "config")
    _reject_unknown(raw, _TOP_KEYS, "config")
    for required in ("plant", "controller", "horizon_samples"):
        if required not in raw:
            raise ConfigError(f"config is missing required key {required!r}")
    kwargs = {
        "plant": _parse_tf(raw["plant"], "plant"),
        "controller": _parse_tf(raw["controller"], "controller"),
        "horizon_samples": _integer(raw["horizon_samples"], "horizon_samples"),
    }
    if "sample_time" in raw:
        kwargs["sample_time"] = _number(raw["sample_time"], "sample_time")
    if "trials" in raw:
        kwargs["trials"] = _integer(raw["trials"], "trials")
    if "weights" in raw:
        kwargs["weights"] = _parse_weights(raw["weights"])
    if "reference" in raw:
        kwargs["reference"] = _parse_reference(raw["reference"])
    if "policies" in raw:
        kwargs["policies"] = _parse_policies(raw["policies"])
    if "discretization" in raw:
        kwargs["discretization"] = _parse_discretization(raw["discretization"])
    if "u0" in raw:
        kwargs["u0"] = np.asarray(_number_list(raw["u0"], "u0"))
    if "tolerances" in raw:
        kwargs["tolerances"] = _parse_tolerances(raw["tolerances"])
    return ExperimentConfig(**kwargs)


def _apply_override(raw: dict, assignment: str) -> None:
    """Apply one --set key.path=value override to the raw config dict."""
    key, sep, text = assignment.partition("=")
    if not sep or not key:
        raise ConfigError(f"override {assignment!r} is not of the form key=value")
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text  # bare strings are allowed unquoted
    node = raw
    parts = key.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override {key!r} descends into a non-object")
    node[parts[-1]] = value


def parse_config(path, overrides=()) -> ExperimentConfig:
    """Load, override, and validate a JSON experiment config."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    raw = _require_mapping(raw, "config")
    for assignment in overrides:
        _apply_override(raw, assignment)
    return config_from_dict(raw)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    return format(float(x), ".17g")


def _signal_trial_indices(total: int, all_trials: bool) -> list[int]:
    if all_trials:
        return list(range(total))
    keep = set(_SIGNAL_TRIALS) | {total - 1}
    return sorted(k for k in keep if 0 <= k < total)


def _write_text(path: Path, lines) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for line in lines:
                fh.write(line)
                fh.write("\n")
    except OSError as exc:
        raise OSError(f"failed writing {path}: {exc}") from exc


def _trials_rows(result: ExperimentResult):
    yield "policy,trial,J_total,J_Q,J_R,J_S,J_W,J_Wr,err_norm,actual_err_norm"
    for policy in result.config.policies:
        for rec in result.records[policy]:
            c = rec.cost
            yield ",".join(
                [policy.value, str(rec.trial)]
                + [_fmt(v) for v in (
                    c.total, c.q_item, c.r_item, c.s_item, c.w_item, c.wr_item,
                    rec.err_norm, rec.actual_err_norm,
                )]
            )


def _signals_rows(result: ExperimentResult, all_trials: bool):
    yield "policy,trial,t,r,u,y,e,e_hat,u_mix"
    ts = result.config.sample_time
    keep = _signal_trial_indices(result.config.trials, all_trials)
    for policy in result.config.policies:
        for k in keep:
            rec = result.records[policy][k]
            for t in range(result.config.horizon_samples):
                yield ",".join(
                    [policy.value, str(rec.trial), _fmt(t * ts)]
                    + [_fmt(sig[t]) for sig in (
                        rec.r, rec.u, rec.y, rec.e, rec.e_hat, rec.u_mix,
                    )]
                )


def _game_rows(result: ExperimentResult):
    yield ("trial,V0,v_empty_raw,v_input,v_trajectory,v_grand,"
           "superadditive,internally_stable")
    for rep in result.game_reports or ():
        yield ",".join(
            [str(rep.trial)]
            + [_fmt(v) for v in (
                rep.baseline_V0, rep.v_empty, rep.v_input,
                rep.v_trajectory, rep.v_grand,
            )]
            + [_fmt(rep.superadditive), _fmt(rep.internally_stable)]
        )


def _reference_rows(result: ExperimentResult):
    yield "t,y_d"
    ts = result.config.sample_time
    for t, value in enumerate(result.y_d.values):
        yield f"{_fmt(t * ts)},{_fmt(value)}"


def _prepare_out_dir(out_dir: Path, names, force: bool) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    existing = [name for name in names if (out_dir / name).exists()]
    if existing and not force:
        raise ConfigError(
            f"refusing to overwrite {existing} in {out_dir}; pass --force"
        )


def _write_analysis(path: Path, analysis: dict, seed) -> None:
    payload = dict(analysis)
    payload["seed"] = seed
    _write_text(path, [json.dumps(payload, indent=2, sort_keys=True)])


def emit_outputs(
    result: ExperimentResult, out_dir, *, force: bool = False,
    all_trials: bool = False, seed=None,
) -> list[Path]:
    """Write the four CSVs plus analysis.json for one completed run."""
    out_dir = Path(out_dir)
    names = ["trials.csv", "signals.csv", "game.csv", "reference.csv", "analysis.json"]
    _prepare_out_dir(out_dir, names, force)
    _write_text(out_dir / "trials.csv", _trials_rows(result))
    _write_text(out_dir / "signals.csv", _signals_rows(result, all_trials))
    _write_text(out_dir / "game.csv", _game_rows(result))
    _write_text(out_dir / "reference.csv", _reference_rows(result))
    _write_analysis(out_dir / "analysis.json", result.analysis, seed)
    return [out_dir / name for name in names]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ilclab",
        description="Trial-domain learning control lab: gain synthesis, "
        "policy runs, cooperative-game checks, printer benchmark.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, config_required=True):
        if config_required:
            p.add_argument("--config", required=True, help="JSON experiment config")
            p.add_argument(
                "--set", dest="overrides", action="append", default=[],
                metavar="KEY=VALUE", help="override a config entry (dotted path)",
            )
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--force", action="store_true",
                       help="overwrite existing output files")
        p.add_argument("--seed", type=int, default=None,
                       help="seed recorded in analysis.json")

    p_syn = sub.add_parser("synthesize", help="gains and diagnostics, no trials")
    common(p_syn)

    p_run = sub.add_parser("run", help="run the configured policies")
    common(p_run)
    p_run.add_argument("--all-trials", action="store_true",
                       help="dump every trial into signals.csv")

    p_game = sub.add_parser("game", help="run all four coalitions and the game checks")
    common(p_game)
    p_game.add_argument("--all-trials", action="store_true",
                        help="dump every trial into signals.csv")

    p_case = sub.add_parser("casestudy", help="printer benchmark preset")
    common(p_case, config_required=False)
    scale = p_case.add_mutually_exclusive_group()
    scale.add_argument("--samples", type=int, default=501,
                       help="horizon length N+1 (default: 501)")
    scale.add_argument("--full", action="store_true",
                       help="full-length horizon (N+1 = 4501)")
    p_case.add_argument("--all-trials", action="store_true",
                        help="dump every trial into signals.csv")
    return parser


def _dispatch(args) -> int:
    out_dir = Path(args.out)
    if args.subcommand == "casestudy":
        samples = 4501 if args.full else args.samples
        config = case_study_config(samples=samples)
    else:
        config = parse_config(args.config, args.overrides)
        if args.subcommand == "game":
            config = dataclasses.replace(config, policies=tuple(Coalition))

    if args.subcommand == "synthesize":
        _, _, _, analysis = analyze_setup(config)
        _prepare_out_dir(out_dir, ["analysis.json"], args.force)
        _write_analysis(out_dir / "analysis.json", analysis, args.seed)
        print(f"analysis written to {out_dir / 'analysis.json'}")
        return 0

    result = run_experiment(config)
    emit_outputs(
        result, out_dir, force=args.force,
        all_trials=getattr(args, "all_trials", False), seed=args.seed,
    )
    a = result.analysis
    print(
        f"{args.subcommand}: {len(config.policies)} policies x "
        f"{config.trials} trials on {config.horizon_samples} samples -> {out_dir}"
    )
    print(
        "convergence norm {norm:.6g} | cooperation margin {margin:.6g} | "
        "trackability residual {res:.6g}".format(
            norm=a["convergence"]["norm"],
            margin=a["cooperation_margin"]["min_eig_sym"],
            res=a["trackability"]["residual_norm"],
        )
    )
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 4
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
