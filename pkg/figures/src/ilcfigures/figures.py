"""Render figures from an ilclab output directory.

Input is the CSV contract only: trials.csv for per-trial costs,
signals.csv for time-domain traces, reference.csv (when present) for
the target. Rendering is deterministic so regenerated files stay
byte-identical.
"""
from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

WHICH_CHOICES = ("outputs", "costs", "both")
FORMAT_CHOICES = ("png", "svg")

# fixed salt keeps svg element ids stable between renders
matplotlib.rcParams["svg.hashsalt"] = "ilclab-figures"

_LINE_STYLE = {
    "empty": dict(color="#999999", linestyle=":"),
    "input_only": dict(color="#d95f02", linestyle="--"),
    "trajectory_only": dict(color="#7570b3", linestyle="-."),
    "grand": dict(color="#1b9e77", linestyle="-"),
}


@dataclass(frozen=True)
class FigureSpec:
    """What to draw and where the experiment output lives."""

    input_dir: Path
    which: str = "both"
    output_format: str = "png"
    trial_to_plot: int | None = None  # None means the last dumped trial

    def __post_init__(self):
        object.__setattr__(self, "input_dir", Path(self.input_dir))
        if self.which not in WHICH_CHOICES:
            raise ValueError(f"which must be one of {WHICH_CHOICES}, got {self.which!r}")
        if self.output_format not in FORMAT_CHOICES:
            raise ValueError(
                f"output_format must be one of {FORMAT_CHOICES}, "
                f"got {self.output_format!r}"
            )


@dataclass
class ExperimentTables:
    """Parsed CSV content of one output directory."""

    costs: dict[str, list[tuple[int, float]]]
    signals: dict[tuple[str, int], dict[str, np.ndarray]]
    reference: np.ndarray | None
    reference_times: np.ndarray | None = None

    @property
    def policies(self) -> list[str]:
        return sorted(self.costs)

    def signal_trials(self, policy: str) -> list[int]:
        return sorted(trial for p, trial in self.signals if p == policy)


def _read_rows(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def load_tables(input_dir: Path) -> ExperimentTables:
    """Read the CSV triple; trials.csv and signals.csv are mandatory."""
    input_dir = Path(input_dir)
    missing = [
        name for name in ("trials.csv", "signals.csv")
        if not (input_dir / name).is_file()
    ]
    if missing:
        raise FileNotFoundError(
            f"{input_dir} is not an experiment output directory, missing {missing}"
        )

    costs: dict[str, list[tuple[int, float]]] = defaultdict(list)
    for row in _read_rows(input_dir / "trials.csv"):
        costs[row["policy"]].append((int(row["trial"]), float(row["J_total"])))
    for trace in costs.values():
        trace.sort()

    grouped: dict[tuple[str, int], dict[str, list[float]]] = defaultdict(
        lambda: defaultdict(list)
    )
    for row in _read_rows(input_dir / "signals.csv"):
        key = (row["policy"], int(row["trial"]))
        for column in ("t", "r", "u", "y", "e", "e_hat", "u_mix"):
            grouped[key][column].append(float(row[column]))
    signals = {
        key: {column: np.asarray(vals) for column, vals in cols.items()}
        for key, cols in grouped.items()
    }

    reference = None
    reference_times = None
    ref_path = input_dir / "reference.csv"
    if ref_path.is_file():
        rows = _read_rows(ref_path)
        reference = np.asarray([float(row["y_d"]) for row in rows])
        reference_times = np.asarray([float(row["t"]) for row in rows])

    return ExperimentTables(
        costs=dict(costs),
        signals=signals,
        reference=reference,
        reference_times=reference_times,
    )


def _require_policy(tables: ExperimentTables, policy: str, trial: int) -> dict:
    key = (policy, trial)
    if key in tables.signals:
        return tables.signals[key]
    available = sorted(tables.signals)
    raise KeyError(
        f"signals for policy {policy!r} at trial {trial} not found; "
        f"available (policy, trial) keys: {available}"
    )


def _pick_trial(tables: ExperimentTables, spec: FigureSpec, policy: str) -> int:
    trials = tables.signal_trials(policy)
    if not trials:
        raise KeyError(
            f"no signal rows for policy {policy!r}; "
            f"available policies: {sorted({p for p, _ in tables.signals})}"
        )
    if spec.trial_to_plot is None:
        return trials[-1]
    if spec.trial_to_plot not in trials:
        raise KeyError(
            f"trial {spec.trial_to_plot} of policy {policy!r} is not in the dump; "
            f"available trials: {trials}"
        )
    return spec.trial_to_plot


def _target_trace(tables: ExperimentTables) -> tuple[np.ndarray, np.ndarray]:
    if tables.reference is not None:
        return tables.reference_times, tables.reference
    # the trial-0 trajectory is pinned to the target under every policy,
    # so any dumped trial 0 reproduces it when reference.csv is absent
    for (policy, trial), cols in sorted(tables.signals.items()):
        if trial == 0:
            return cols["t"], cols["r"]
    raise KeyError(
        "no reference.csv and no trial-0 signals to recover the target from"
    )


def plot_outputs(spec: FigureSpec, tables: ExperimentTables | None = None) -> Path:
    """Target, best joint output, input-player-only output, learned trajectory."""
    if tables is None:
        tables = load_tables(spec.input_dir)
    times, target = _target_trace(tables)

    grand_trial = _pick_trial(tables, spec, "grand")
    grand = _require_policy(tables, "grand", grand_trial)
    solo_trial = _pick_trial(tables, spec, "input_only")
    solo = _require_policy(tables, "input_only", solo_trial)

    fig, (ax_out, ax_ref) = plt.subplots(
        2, 1, figsize=(7.0, 6.0), sharex=True, constrained_layout=True
    )
    ax_out.plot(times, target, color="#333333", linewidth=1.8, label="target")
    ax_out.plot(
        grand["t"], grand["y"],
        label=f"both players, trial {grand_trial}", **_LINE_STYLE["grand"],
    )
    ax_out.plot(
        solo["t"], solo["y"],
        label=f"input player only, trial {solo_trial}", **_LINE_STYLE["input_only"],
    )
    ax_out.set_ylabel("output")
    ax_out.legend(loc="upper right", fontsize=8)
    ax_out.grid(True, alpha=0.3)

    ax_ref.plot(times, target, color="#333333", linewidth=1.8, label="target")
    ax_ref.plot(
        grand["t"], grand["r"],
        label=f"learned trajectory, trial {grand_trial}", **_LINE_STYLE["grand"],
    )
    ax_ref.set_xlabel("time [s]")
    ax_ref.set_ylabel("trajectory")
    ax_ref.legend(loc="upper right", fontsize=8)
    ax_ref.grid(True, alpha=0.3)

    out = spec.input_dir / f"outputs.{spec.output_format}"
    _save(fig, out)
    return out


def plot_costs(spec: FigureSpec, tables: ExperimentTables | None = None) -> Path:
    """Per-trial total cost of every policy on a log scale."""
    if tables is None:
        tables = load_tables(spec.input_dir)
    policies = tables.policies
    if not any(tables.costs.values()):
        raise ValueError("trials.csv has no data rows to plot")
    if len(policies) < 2:
        raise ValueError(
            f"cost comparison needs at least two policies, found {policies}"
        )

    fig, ax = plt.subplots(figsize=(7.0, 4.2), constrained_layout=True)
    for policy in policies:
        trace = tables.costs[policy]
        trials = [trial for trial, _ in trace]
        totals = [total for _, total in trace]
        style = _LINE_STYLE.get(policy, {})
        if len(trace) == 1:
            ax.plot(trials, totals, marker="o", label=policy, **style)
        else:
            ax.plot(trials, totals, label=policy, **style)
    ax.set_yscale("log")
    ax.set_xlabel("trial")
    ax.set_ylabel("total cost")
    ax.legend(loc="upper right", fontsize=8)
    ax.grid(True, which="both", alpha=0.3)

    out = spec.input_dir / f"costs.{spec.output_format}"
    _save(fig, out)
    return out


def _save(fig, path: Path) -> None:
    # dropping the date metadata keeps svg output byte-stable
    fig.savefig(path, dpi=150, metadata={"Date": None})
    plt.close(fig)


def render(spec: FigureSpec) -> list[Path]:
    """Render the requested figure set; returns the written paths."""
    tables = load_tables(spec.input_dir)
    written = []
    if spec.which in ("outputs", "both"):
        written.append(plot_outputs(spec, tables))
    if spec.which in ("costs", "both"):
        written.append(plot_costs(spec, tables))
    return written
