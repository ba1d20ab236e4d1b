"""Cooperative-game bookkeeping for the two learning players.

The input player and the trajectory player can each stay out of the
learning or join in, giving four coalitions: nobody (bare feedback
loop), input only, trajectory only, or both (the joint update). Each
coalition runs its own full trial history; a coalition's worth at trial
k is how much it improves on the input-only baseline cost at the same
trial. Superadditivity of those values is what makes cooperation stick.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from math import isfinite

import numpy as np

from .ilc import GainSet, Weights, update_end_to_end, update_noilc, update_serial_only
from .lifted import signal_values

# Relative slack on the game inequalities: the values are differences of
# large quadratic costs, so exact comparisons would be noise-driven.
GAME_SLACK = 1e-9


class Coalition(Enum):
    """Which players take part in the between-trial update."""

    EMPTY = "empty"
    INPUT_ONLY = "input_only"
    TRAJECTORY_ONLY = "trajectory_only"
    GRAND = "grand"


@dataclass(frozen=True)
class GameTrialReport:
    """Characteristic values and stability flags for one trial.

    v_empty carries the raw baseline-minus-cost value of the no-player
    run; the conventional normalization pins the empty coalition to zero
    and is applied by consumers, not here.
    """

    trial: int
    baseline_V0: float
    v_empty: float
    v_input: float
    v_trajectory: float
    v_grand: float
    superadditive: bool
    internally_stable: bool


def coalition_policy(
    coalition: Coalition, u_k, y_d, gains: GainSet, trajectory_map, weights: Weights
) -> tuple[np.ndarray, np.ndarray]:
    """Next trial's (input, trajectory) under the given coalition.

    Nobody: zero input, trajectory pinned to the target. Input only:
    the one-player input update against the fixed target. Trajectory
    only: zero input, trajectory at its no-feedforward optimum. Both:
    the joint update.
    """
    u_k = signal_values(u_k)
    y_d = signal_values(y_d)
    coalition = Coalition(coalition)
    if coalition is Coalition.EMPTY:
        return np.zeros_like(y_d), y_d.copy()
    if coalition is Coalition.INPUT_ONLY:
        return update_noilc(u_k, y_d, gains), y_d.copy()
    if coalition is Coalition.TRAJECTORY_ONLY:
        return np.zeros_like(y_d), update_serial_only(y_d, trajectory_map, weights)
    r_next, u_next = update_end_to_end(u_k, y_d, gains)
    return u_next, r_next


def characteristic_value(
    coalition: Coalition, trial_cost: float, baseline_V0: float
) -> float:
    """Worth of a coalition at one trial: baseline cost minus its own cost."""
    del coalition  # same rule for every coalition; kept for call-site clarity
    if not (isfinite(trial_cost) and isfinite(baseline_V0)):
        raise ValueError("costs must be finite")
    if trial_cost < 0.0 or baseline_V0 < 0.0:
        raise ValueError("costs must be nonnegative")
    return baseline_V0 - trial_cost


def _normalize_traces(costs) -> dict[Coalition, list[float]]:
    normalized = {Coalition(key): list(map(float, trace)) for key, trace in costs.items()}
    missing = [c.value for c in Coalition if c not in normalized]
    if missing:
        raise ValueError(f"game analysis needs all four coalitions, missing {missing}")
    lengths = {c.value: len(t) for c, t in normalized.items()}
    if len(set(lengths.values())) != 1 or next(iter(lengths.values())) == 0:
        raise ValueError(f"coalition cost traces differ in length: {lengths}")
    return normalized


def analyze_game(costs) -> list[GameTrialReport]:
    """Per-trial characteristic values from the four coalitions' cost traces.

    `costs` maps each Coalition (or its string value) to that
    coalition's own per-trial total costs, all runs started from the
    same zero input against the same target.
    """
    traces = _normalize_traces(costs)
    reports = []
    for k, baseline in enumerate(traces[Coalition.INPUT_ONLY]):
        values = {
            c: characteristic_value(c, traces[c][k], baseline) for c in Coalition
        }
        v_grand = values[Coalition.GRAND]
        slack = GAME_SLACK * (1.0 + abs(v_grand))
        v_input = values[Coalition.INPUT_ONLY]
        v_trajectory = values[Coalition.TRAJECTORY_ONLY]
        reports.append(
            GameTrialReport(
                trial=k,
                baseline_V0=baseline,
                v_empty=values[Coalition.EMPTY],
                v_input=v_input,
                v_trajectory=v_trajectory,
                v_grand=v_grand,
                superadditive=v_input + v_trajectory <= v_grand + slack,
                internally_stable=v_grand >= max(v_input, v_trajectory) - slack,
            )
        )
    return reports


def game_summary(reports: list[GameTrialReport]) -> dict:
    """Fractions of trials passing each check plus the final-trial verdict."""
    if not reports:
        raise ValueError("no game reports to summarize")
    n = len(reports)
    return {
        "trials": n,
        "superadditive_fraction": sum(r.superadditive for r in reports) / n,
        "internally_stable_fraction": sum(r.internally_stable for r in reports) / n,
        "final_superadditive": reports[-1].superadditive,
        "final_internally_stable": reports[-1].internally_stable,
    }
