"""Trial-domain experiment engine.

Builds the discrete closed loop from continuous plant and controller
models, lifts its two sensitivities onto the horizon, synthesizes the
learning gains once, then drives each requested policy across trials
while recording signals and cost breakdowns. Also owns reference
generation (step, smoothed pulse, custom) and the desktop-printer
benchmark preset.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DivergenceError
from .game import Coalition, GameTrialReport, analyze_game, coalition_policy, game_summary
from .ilc import (
    CostBreakdown,
    GainSet,
    Weights,
    convergence_margin,
    cooperation_margin,
    cost,
    synthesize,
    trackability,
    update_serial_only,
)
from .lifted import LiftedOperator, Signal, lift, signal_values
from .lti import (
    ClosedLoopModel,
    ContinuousTransferFunction,
    DiscreteStateSpace,
    build_closed_loop,
    discretize_tustin,
    discretize_zoh,
    markov_parameters,
    spectral_radius,
    tf_to_state_space,
)

# Abort threshold: a per-trial cost beyond this means the iteration blew up.
DIVERGENCE_COST = 1e12

_METHODS = {"zoh": discretize_zoh, "tustin": discretize_tustin}


@dataclass(frozen=True)
class ReferenceSpec:
    """Recipe for the desired trajectory."""

    kind: str
    amplitude: float = 1.0
    start_sample: int = 0
    width_samples: int = 0
    smoothing_samples: int = 0
    samples: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("step", "smoothed_pulse", "custom_samples"):
            raise ConfigError(f"unknown reference kind {self.kind!r}")
        if not math.isfinite(self.amplitude):
            raise ConfigError("reference amplitude must be finite")
        for name in ("start_sample", "width_samples", "smoothing_samples"):
            if int(getattr(self, name)) < 0:
                raise ConfigError(f"reference {name} must be nonnegative")
        if self.kind == "custom_samples" and self.samples is None:
            raise ConfigError("custom_samples reference needs explicit samples")
        if self.samples is not None:
            object.__setattr__(self, "samples", tuple(float(v) for v in self.samples))


@dataclass(frozen=True)
class Discretization:
    """Which discretization each continuous block gets."""

    plant_method: str = "zoh"
    controller_method: str = "tustin"

    def __post_init__(self):
        for name in ("plant_method", "controller_method"):
            if getattr(self, name) not in _METHODS:
                raise ConfigError(
                    f"{name} must be one of {sorted(_METHODS)}, "
                    f"got {getattr(self, name)!r}"
                )


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything run_experiment needs, validated at construction."""

    plant: ContinuousTransferFunction
    controller: ContinuousTransferFunction
    horizon_samples: int
    sample_time: float = 1e-3
    trials: int = 30
    weights: Weights = field(default_factory=lambda: Weights(1e3, 1e-2, 1e-3, 1e3, 1e3))
    reference: ReferenceSpec | None = None
    policies: tuple[Coalition, ...] = tuple(Coalition)
    discretization: Discretization = field(default_factory=Discretization)
    u0: np.ndarray | None = None
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.horizon_samples) < 2:
            raise ConfigError("horizon_samples must be at least 2")
        if int(self.trials) < 1:
            raise ConfigError("trials must be at least 1")
        if not self.sample_time > 0.0:
            raise ConfigError("sample_time must be positive")
        object.__setattr__(self, "horizon_samples", int(self.horizon_samples))
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "sample_time", float(self.sample_time))
        policies = tuple(Coalition(p) for p in self.policies)
        if not policies:
            raise ConfigError("policies must be nonempty")
        if len(set(policies)) != len(policies):
            raise ConfigError("policies must not repeat")
        object.__setattr__(self, "policies", policies)
        if self.reference is None:
            object.__setattr__(self, "reference", default_reference(self.horizon_samples))
        if self.u0 is not None:
            u0 = np.asarray(self.u0, dtype=float)
            if u0.shape != (self.horizon_samples,):
                raise ConfigError(
                    f"u0 must have horizon_samples={self.horizon_samples} entries, "
                    f"got {u0.shape}"
                )
            object.__setattr__(self, "u0", u0)
        unknown = set(self.tolerances) - {"trackability"}
        if unknown:
            raise ConfigError(f"unknown tolerance keys {sorted(unknown)}")


@dataclass(frozen=True)
class TrialRecord:
    """Signals and cost of one trial of one policy."""

    trial: int
    r: np.ndarray
    u: np.ndarray
    y: np.ndarray
    e: np.ndarray
    e_hat: np.ndarray
    u_mix: np.ndarray
    cost: CostBreakdown
    err_norm: float
    actual_err_norm: float


@dataclass(frozen=True)
class LiftedLoop:
    """Lifted sensitivities plus the realizations they came from.

    closed_loop and controller are None for purely operator-level
    experiments (no u_mix reconstruction possible then).
    """

    input_map: LiftedOperator
    trajectory_map: LiftedOperator
    sample_time: float
    closed_loop: ClosedLoopModel | None = None
    controller: DiscreteStateSpace | None = None


def build_lifted_loop(config: ExperimentConfig) -> LiftedLoop:
    """Discretize, interconnect, and lift the configured loop."""
    plant_dt = _METHODS[config.discretization.plant_method](
        tf_to_state_space(config.plant), config.sample_time
    )
    controller_dt = _METHODS[config.discretization.controller_method](
        tf_to_state_space(config.controller), config.sample_time
    )
    loop = build_closed_loop(plant_dt, controller_dt)
    n1 = config.horizon_samples
    return LiftedLoop(
        input_map=lift(markov_parameters(loop.g_ps, n1)),
        trajectory_map=lift(markov_parameters(loop.g_cs, n1)),
        sample_time=config.sample_time,
        closed_loop=loop,
        controller=controller_dt,
    )


def simulate_trial(u, r, loop: LiftedLoop):
    """One trial from a zero initial state: returns (y, e, u_mix).

    The output comes from the lifted sensitivities; the actuator signal
    u_mix is reconstructed by running the discrete controller over the
    tracking error and adding the feedforward (u itself if no controller
    realization is attached).
    """
    u = signal_values(u)
    r = signal_values(r)
    n1 = loop.input_map.size
    if u.size != n1 or r.size != n1:
        raise ValueError(
            f"signals must have {n1} samples, got u={u.size} r={r.size}"
        )
    y = loop.input_map.dense @ u + loop.trajectory_map.dense @ r
    e = r - y
    if loop.controller is None:
        u_mix = u.copy()
    else:
        u_mix = loop.controller.simulate(e) + u
    return y, e, u_mix


def generate_reference(
    spec: ReferenceSpec, horizon_samples: int, sample_time: float = 1.0
) -> Signal:
    """Materialize a reference recipe on the horizon."""
    n1 = int(horizon_samples)
    if n1 < 1:
        raise ConfigError("horizon_samples must be at least 1")
    if spec.kind == "custom_samples":
        if len(spec.samples) != n1:
            raise ConfigError(
                f"custom reference has {len(spec.samples)} samples, horizon needs {n1}"
            )
        return Signal(np.asarray(spec.samples, dtype=float), sample_time)

    start, width = int(spec.start_sample), int(spec.width_samples)
    if start >= n1:
        raise ConfigError(f"start_sample {start} is beyond the horizon {n1}")
    y = np.zeros(n1)
    if spec.kind == "step":
        y[start:] = spec.amplitude
        return Signal(y, sample_time)

    smooth = int(spec.smoothing_samples)
    if start + width > n1:
        raise ConfigError(
            f"pulse start {start} + width {width} exceeds the horizon {n1}"
        )
    if 2 * smooth > width:
        raise ConfigError(
            f"smoothing ramps ({smooth} samples each) overlap within width {width}"
        )
    for i in range(width):
        if smooth > 0 and i < smooth:
            env = 0.5 * (1.0 - math.cos(math.pi * i / smooth))
        elif smooth > 0 and i >= width - smooth:
            env = 0.5 * (1.0 - math.cos(math.pi * (width - 1 - i) / smooth))
        else:
            env = 1.0
        y[start + i] = spec.amplitude * env
    return Signal(y, sample_time)


def default_reference(horizon_samples: int) -> ReferenceSpec:
    """Benchmark pulse: raised-cosine, 20% of the horizon wide, centered at 30%."""
    n1 = int(horizon_samples)
    width = round(0.2 * n1)
    center = round(0.3 * n1)
    return ReferenceSpec(
        kind="smoothed_pulse",
        amplitude=1.0,
        start_sample=center - width // 2,
        width_samples=width,
        smoothing_samples=width // 4,
    )


def run_policy_trials(
    coalition: Coalition,
    gains: GainSet,
    loop: LiftedLoop,
    weights: Weights,
    y_d,
    trials: int,
    u0=None,
) -> list[TrialRecord]:
    """Drive one policy across trials, recording signals and costs.

    Trial 0 always plays the initial input against the raw target; the
    coalition's update law takes over from trial 1. The trial-change
    penalty at trial 0 compares the initial input with itself, so it
    starts at zero.
    """
    target = signal_values(y_d)
    coalition = Coalition(coalition)
    u = np.zeros_like(target) if u0 is None else signal_values(u0).copy()
    u_prev = u.copy()
    r = target.copy()
    # The trajectory-only optimum is trial-independent: solve it once.
    serial_r = None
    if coalition is Coalition.TRAJECTORY_ONLY and trials > 1:
        serial_r = update_serial_only(target, loop.trajectory_map, weights)

    records = []
    for k in range(int(trials)):
        if k > 0:
            u_prev = u
            if coalition is Coalition.TRAJECTORY_ONLY:
                u, r = np.zeros_like(target), serial_r
            else:
                u, r = coalition_policy(
                    coalition, u, target, gains, loop.trajectory_map, weights
                )
        y, e, u_mix = simulate_trial(u, r, loop)
        breakdown = cost(u, u_prev, r, y, target, weights)
        if not math.isfinite(breakdown.total) or breakdown.total > DIVERGENCE_COST:
            raise DivergenceError(
                f"policy {coalition.value} diverged at trial {k}: "
                f"cost {breakdown.total:.3e}"
            )
        records.append(
            TrialRecord(
                trial=k,
                r=r.copy(),
                u=u.copy(),
                y=y,
                e=e,
                e_hat=target - y,
                u_mix=u_mix,
                cost=breakdown,
                err_norm=float(np.linalg.norm(e)),
                actual_err_norm=float(np.linalg.norm(target - y)),
            )
        )
    return records


@dataclass(frozen=True)
class ExperimentResult:
    """Everything one run produces, ready for serialization."""

    config: ExperimentConfig
    loop: LiftedLoop
    gains: GainSet
    y_d: Signal
    records: dict[Coalition, list[TrialRecord]]
    game_reports: list[GameTrialReport] | None
    analysis: dict


def analyze_setup(config: ExperimentConfig):
    """Build, lift, and synthesize; no trials run yet.

    Returns (loop, gains, y_d, analysis) where the analysis dict carries
    the run-independent diagnostics: closed-loop spectral radius,
    contraction margin, cooperation margin, target trackability.
    """
    loop = build_lifted_loop(config)
    gains = synthesize(loop.input_map, loop.trajectory_map, config.weights)
    y_d = generate_reference(config.reference, config.horizon_samples, config.sample_time)
    margin = convergence_margin(gains)
    coop = cooperation_margin(gains)
    track = trackability(
        loop.input_map,
        loop.trajectory_map,
        y_d.values,
        tolerance=config.tolerances.get("trackability"),
    )
    analysis = {
        "sample_time": config.sample_time,
        "horizon_samples": config.horizon_samples,
        "trials": config.trials,
        "policies": [c.value for c in config.policies],
        "weights": {
            "q": config.weights.q,
            "r": config.weights.r,
            "s": config.weights.s,
            "w": config.weights.w,
            "wr": config.weights.wr,
        },
        "reference": {"kind": config.reference.kind},
        "closed_loop_spectral_radius": spectral_radius(loop.closed_loop.g_cs.A),
        "convergence": {
            "norm": margin.norm,
            "spectral_radius": margin.spectral_radius,
            "converges": margin.converges,
        },
        "cooperation_margin": {
            "min_eig_sym": coop.min_eig_sym,
            "satisfied": coop.satisfied,
        },
        "trackability": {
            "trackable": track.trackable,
            "residual_norm": track.residual_norm,
            "tolerance_used": track.tolerance_used,
        },
    }
    return loop, gains, y_d, analysis


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Full pipeline: build, lift, synthesize, run policies, analyze."""
    loop, gains, y_d, analysis = analyze_setup(config)

    records = {
        policy: run_policy_trials(
            policy, gains, loop, config.weights, y_d.values, config.trials, config.u0
        )
        for policy in config.policies
    }

    game_reports = None
    summary = None
    if set(config.policies) == set(Coalition):
        game_reports = analyze_game(
            {c: [rec.cost.total for rec in records[c]] for c in Coalition}
        )
        summary = game_summary(game_reports)
        summary["v_empty_convention"] = 0.0

    analysis["final_costs"] = {
        c.value: records[c][-1].cost.total for c in config.policies
    }
    analysis["game"] = summary
    return ExperimentResult(
        config=config,
        loop=loop,
        gains=gains,
        y_d=y_d,
        records=records,
        game_reports=game_reports,
        analysis=analysis,
    )


def case_study_config(samples: int = 501, trials: int = 30) -> ExperimentConfig:
    """Desktop-printer motion benchmark.

    Fourth-order belt-driven carriage plant behind a second-order lead
    network, millisecond sampling, heavy tracking and target weights
    against light input penalties. `samples` scales the horizon; 501
    keeps a desk-scale runtime, 4501 is the full-length version.
    """
    return ExperimentConfig(
        plant=ContinuousTransferFunction(
            num=(0.12, 235.0), den=(9e-5, 1.092e-2, 21.385, 0.0, 0.0)
        ),
        controller=ContinuousTransferFunction(
            num=(2.527e5, 1.011e7), den=(1.0, 351.9, 6.317e4)
        ),
        horizon_samples=int(samples),
        sample_time=1e-3,
        trials=int(trials),
        weights=Weights(q=1e3, r=1e-2, s=1e-3, w=1e3, wr=1e3),
        reference=default_reference(int(samples)),
        policies=tuple(Coalition),
    )


def fixture_config() -> ExperimentConfig:
    """Integrator-plant micro loop whose lifted maps are tiny round numbers.

    An integrator under a static 0.5 controller at unit sampling gives
    input-map impulse response [0, 1, 0.5] and trajectory-map impulse
    response [0, 0.5, 0.25] on a 3-sample horizon; handy wherever a
    fully worked example is needed.
    """
    return ExperimentConfig(
        plant=ContinuousTransferFunction(num=(1.0,), den=(1.0, 0.0)),
        controller=ContinuousTransferFunction(num=(0.5,), den=(1.0,)),
        horizon_samples=3,
        sample_time=1.0,
        trials=30,
        weights=Weights(q=1.0, r=0.1, s=0.01, w=1.0, wr=0.1),
        reference=ReferenceSpec(kind="custom_samples", samples=(0.0, 1.0, 1.0)),
        policies=tuple(Coalition),
    )
