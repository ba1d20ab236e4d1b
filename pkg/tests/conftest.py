from dataclasses import dataclass

import numpy as np
import pytest

import ilclab as il


@dataclass(frozen=True)
class SmallLoop:
    """Integrator plant under a 0.5 static controller, horizon 3.

    The lifted maps come out with markov sequences [0, 1, 0.5] and
    [0, 0.5, 0.25], small enough to check every update by hand.
    """

    config: il.ExperimentConfig
    loop: il.LiftedLoop
    gains: il.GainSet
    weights: il.Weights
    y_d: np.ndarray


@pytest.fixture(scope="session")
def small_loop() -> SmallLoop:
    config = il.fixture_config()
    loop = il.build_lifted_loop(config)
    gains = il.synthesize(loop.input_map, loop.trajectory_map, config.weights)
    y_d = il.generate_reference(
        config.reference, config.horizon_samples, config.sample_time
    ).values
    return SmallLoop(config, loop, gains, config.weights, y_d)


@pytest.fixture(scope="session")
def small_result(small_loop) -> il.ExperimentResult:
    return il.run_experiment(small_loop.config)


@pytest.fixture(scope="session")
def case_result() -> il.ExperimentResult:
    return il.run_experiment(il.case_study_config())
