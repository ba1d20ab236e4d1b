"""End-to-end acceptance criteria, one test per claim.

Each test prints one `ACCEPTANCE <name>: PASS/FAIL` line with its
measured margin (visible with `pytest -s`), then asserts. Tolerances
are pinned here, not in the library.
"""

import filecmp
import json
import time
from pathlib import Path

import numpy as np
import pytest

import oracles
from ilclab import (
    Coalition,
    LiftedLoop,
    Weights,
    analyze_game,
    asymptotic_error,
    case_study_config,
    closed_form_input,
    cooperation_margin,
    lift,
    run_experiment,
    run_policy_trials,
    stationarity_residuals,
    synthesize,
    trackability,
    update_end_to_end,
)
from ilclab.cli import main

DIAGNOSTICS = Path(__file__).parent / "_diagnostics" / "cooperation_violations.json"


def _report(name: str, ok: bool, details: str) -> None:
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} {details}")


@pytest.fixture(scope="module")
def case_study():
    start = time.perf_counter()
    result = run_experiment(case_study_config())
    elapsed = time.perf_counter() - start
    return result, elapsed


def test_stationarity_of_joint_update():
    start = time.perf_counter()
    worst = 0.0
    for seed in range(50):
        h, hr, wkw, y_d, u_k = oracles.rand_instance(seed)
        g, gr = lift(h), lift(hr)
        weights = Weights(**wkw)
        gains = synthesize(g, gr, weights)
        res_r, res_u = stationarity_residuals(gains, g, gr, weights, u_k, y_d)
        scale = 1e-8 * (1.0 + float(np.linalg.norm(y_d)))
        worst = max(worst, res_r / scale, res_u / scale)
    elapsed = time.perf_counter() - start
    ok = worst <= 1.0 and elapsed < 5.0
    _report(
        "stationarity",
        ok,
        f"max_scaled_residual={worst:.3e} elapsed={elapsed:.2f}s",
    )
    assert worst <= 1.0
    assert elapsed < 5.0


def test_joint_update_matches_stacked_solve():
    start = time.perf_counter()
    worst = 0.0
    for seed in range(50):
        h, hr, wkw, y_d, u_k = oracles.rand_instance(seed)
        g, gr = lift(h), lift(hr)
        weights = Weights(**wkw)
        gains = synthesize(g, gr, weights)
        r_next, u_next = update_end_to_end(u_k, y_d, gains)
        u_ref, r_ref = oracles.stacked_joint_update(
            g.dense, gr.dense, weights, u_k, y_d
        )
        worst = max(
            worst,
            float(np.max(np.abs(u_next - u_ref))),
            float(np.max(np.abs(r_next - r_ref))),
        )
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 5.0
    _report(
        "joint-minimizer", ok, f"max_abs_gap={worst:.3e} elapsed={elapsed:.2f}s"
    )
    assert worst <= 1e-9
    assert elapsed < 5.0


def test_trajectory_normal_matrix_forms_agree():
    worst = 0.0
    for seed in range(50):
        h, hr, wkw, _, _ = oracles.rand_instance(seed)
        g_op, gr_op = lift(h), lift(hr)
        w = Weights(**wkw)
        gains = synthesize(g_op, gr_op, w)
        g, gr = g_op.dense, gr_op.dense
        n = g.shape[0]
        eye = np.eye(n)
        a = eye - gr
        m = w.q * g.T @ g + (w.r + w.s) * eye
        p = w.q * g.T @ a
        m_r = w.q * a.T @ a + (w.w + w.wr) * eye
        rho_alt = m_r - p.T @ np.linalg.solve(m, p)
        gap = float(
            np.linalg.norm(gains.trajectory_normal_matrix - rho_alt)
            / np.linalg.norm(rho_alt)
        )
        worst = max(worst, gap)
    ok = worst <= 1e-8
    _report("normal-matrix-equivalence", ok, f"max_rel_gap={worst:.3e}")
    assert worst <= 1e-8


def test_closed_form_iteration_suite():
    contracting = 0
    worst_closed_form = 0.0
    worst_limit = 0.0
    for seed in range(50):
        h, hr, wkw, y_d = oracles.rand_contraction_instance(seed)
        g, gr = lift(h), lift(hr)
        weights = Weights(**wkw)
        gains = synthesize(g, gr, weights)
        if gains.convergence_norm >= 0.99:
            continue
        contracting += 1
        n1 = y_d.size
        u = np.zeros(n1)
        for k in range(1, 51):
            _, u = update_end_to_end(u, y_d, gains)
            direct = closed_form_input(k, np.zeros(n1), gains, y_d)
            worst_closed_form = max(
                worst_closed_form, float(np.max(np.abs(direct - u)))
            )
        r = y_d.copy()
        for _ in range(50, 200):
            r, u = update_end_to_end(u, y_d, gains)
        e_sim = y_d - (g.dense @ u + gr.dense @ r)
        e_inf = asymptotic_error(gains, g, gr, y_d)
        worst_limit = max(worst_limit, float(np.max(np.abs(e_sim - e_inf))))
    ok = contracting == 50 and worst_closed_form <= 1e-9 and worst_limit <= 1e-6
    _report(
        "closed-form-suite",
        ok,
        f"instances={contracting}/50 max_closed_form_gap={worst_closed_form:.3e} "
        f"max_limit_gap={worst_limit:.3e}",
    )
    assert contracting == 50
    assert worst_closed_form <= 1e-9
    assert worst_limit <= 1e-6


def test_error_recursion_every_trial(case_study):
    result, _ = case_study
    import ilclab

    small = ilclab.run_experiment(ilclab.fixture_config())
    worst = 0.0
    for res in (small, result):
        g = res.loop.input_map.dense
        gr = res.loop.trajectory_map.dense
        for records in res.records.values():
            for prev, cur in zip(records, records[1:]):
                predicted = (
                    prev.e_hat - g @ (cur.u - prev.u) - gr @ (cur.r - prev.r)
                )
                worst = max(worst, float(np.max(np.abs(cur.e_hat - predicted))))
    ok = worst <= 1e-10
    _report("error-recursion", ok, f"max_abs_gap={worst:.3e}")
    assert worst <= 1e-10


def test_trackability_verdicts():
    rng_label = []
    worst_res = 0.0
    worst_rec = 0.0
    for seed in range(10):
        rng = np.random.default_rng(6000 + seed)
        n1 = int(rng.integers(4, 16))
        strictly_proper = seed % 2 == 1
        h = np.zeros(n1)
        if strictly_proper:
            h[1] = rng.uniform(0.8, 1.5) * rng.choice([-1.0, 1.0])
            for i in range(2, n1):
                h[i] = h[i - 1] * rng.uniform(0.2, 0.6)
        else:
            h[0] = rng.uniform(0.8, 1.5) * rng.choice([-1.0, 1.0])
            for i in range(1, n1):
                h[i] = h[i - 1] * rng.uniform(0.2, 0.6)
        hr = np.zeros(n1)
        hr[1] = rng.uniform(0.05, 0.3)
        for i in range(2, n1):
            hr[i] = hr[i - 1] * rng.uniform(0.1, 0.5)
        g, gr = lift(h), lift(hr)
        u_star = rng.standard_normal(n1)
        if strictly_proper:
            u_star[-1] = 0.0
        ghat = np.linalg.solve(np.eye(n1) - gr.dense, g.dense)
        y_d = ghat @ u_star
        rep = trackability(g, gr, y_d)
        assert rep.trackable, f"constructed target rejected at seed {seed}"
        worst_res = max(worst_res, rep.residual_norm)
        worst_rec = max(worst_rec, float(np.max(np.abs(rep.u_d - u_star))))
        rng_label.append(seed)

        if strictly_proper:
            for amplitude in (1.0, 2.5):
                step = np.full(n1, amplitude)
                rep_step = trackability(g, gr, step)
                assert rep_step.residual_norm >= 0.5 * amplitude
                assert not rep_step.trackable
    ok = worst_res <= 1e-10 and worst_rec <= 1e-8
    _report(
        "trackability",
        ok,
        f"instances={len(rng_label)} max_residual={worst_res:.3e} "
        f"max_recovery_gap={worst_rec:.3e}",
    )
    assert worst_res <= 1e-10
    assert worst_rec <= 1e-8


def test_case_study_run(case_study):
    result, elapsed = case_study
    analysis = result.analysis
    norm = analysis["convergence"]["norm"]
    finals = analysis["final_costs"]
    grand_final = finals["grand"]
    input_final = finals["input_only"]

    r_last = result.records[Coalition.GRAND][-1].r
    y_d = result.y_d.values
    r_gap = float(np.max(np.abs(r_last - y_d)))
    rep = trackability(
        result.loop.input_map,
        result.loop.trajectory_map,
        r_last,
        tolerance=1e-6 * (1.0 + float(np.linalg.norm(r_last))),
    )

    ok = (
        elapsed < 60.0
        and norm < 1.0
        and grand_final < input_final
        and r_gap > 0.01
        and rep.trackable
    )
    _report(
        "case-study",
        ok,
        f"elapsed={elapsed:.2f}s norm={norm:.6f} grand={grand_final:.6g} "
        f"baseline={input_final:.6g} learned_target_gap={r_gap:.3f} "
        f"learned_target_residual={rep.residual_norm:.3e}",
    )
    assert elapsed < 60.0
    assert norm < 1.0
    assert grand_final < input_final
    assert r_gap > 0.01, "the learned trajectory should move away from the target"
    assert rep.trackable, "the learned trajectory should itself be reachable"


def test_cooperation_game_suite(tmp_path):
    accepted = 0
    attempts = 0
    violations = []
    while accepted < 20 and attempts < 200:
        h, hr, wkw, rng = oracles.rand_game_candidate(attempts)
        attempts += 1
        g, gr = lift(h), lift(hr)
        weights = Weights(**wkw)
        gains = synthesize(g, gr, weights)
        margin = cooperation_margin(gains)
        if not margin.satisfied or gains.convergence_norm >= 1.0:
            continue
        accepted += 1
        y_d = rng.standard_normal(h.size)
        loop = LiftedLoop(input_map=g, trajectory_map=gr, sample_time=1.0)
        traces = {}
        for coalition in Coalition:
            records = run_policy_trials(
                coalition, gains, loop, weights, y_d, trials=30
            )
            traces[coalition] = [rec.cost.total for rec in records]
        for rep in analyze_game(traces):
            if not rep.superadditive:
                violations.append(
                    {
                        "seed": attempts - 1,
                        "trial": rep.trial,
                        "v_input": rep.v_input,
                        "v_trajectory": rep.v_trajectory,
                        "v_grand": rep.v_grand,
                        "margin": margin.min_eig_sym,
                    }
                )

    if violations:
        DIAGNOSTICS.parent.mkdir(exist_ok=True)
        DIAGNOSTICS.write_text(json.dumps(violations, indent=2))
    elif DIAGNOSTICS.exists():
        DIAGNOSTICS.unlink()

    # the benchmark's own margin is recorded without asserting its sign
    out = tmp_path / "margin"
    assert main(["casestudy", "--samples", "121", "--out", str(out)]) == 0
    payload = json.loads((out / "analysis.json").read_text())
    recorded = payload["cooperation_margin"]["min_eig_sym"]
    assert np.isfinite(recorded)

    ok = accepted == 20 and not violations
    _report(
        "cooperation-game",
        ok,
        f"instances={accepted} attempts={attempts} violations={len(violations)} "
        f"benchmark_margin={recorded:.6f}",
    )
    assert accepted == 20, f"only {accepted} instances met the premises"
    assert not violations, f"counterexamples written to {DIAGNOSTICS}"


def test_deterministic_outputs(tmp_path):
    names = ["trials.csv", "signals.csv", "game.csv", "reference.csv", "analysis.json"]
    dirs = []
    for tag in ("first", "second"):
        out = tmp_path / tag
        assert main(["casestudy", "--samples", "121", "--out", str(out)]) == 0
        dirs.append(out)
    match, mismatch, errors = filecmp.cmpfiles(*dirs, common=names, shallow=False)
    ok = sorted(match) == sorted(names) and not mismatch and not errors
    _report(
        "determinism",
        ok,
        f"byte_identical={sorted(match) == sorted(names)} files={len(match)}/5",
    )
    assert not mismatch, f"files differ between runs: {mismatch}"
    assert not errors
    assert sorted(match) == sorted(names)
