"""Two-player trial-domain learning on the lifted closed loop.

Each trial the plant tracks a process trajectory r while a feedforward
input u is injected at the actuator, so the output is y = G u + G_r r.
Between trials two coupled quadratic problems are solved: the trajectory
player reshapes r toward the (possibly unreachable) target while the
input player refines u. This module owns the shared cost, the gain
synthesis for both players, the update laws (joint, input-only,
trajectory-only), convergence diagnostics, closed-form trial solutions,
and the reachability test for the target itself.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import solve_general, solve_lower_triangular, solve_spd, symmetrize
from .errors import DivergenceError, NumericalError
from .lifted import LiftedOperator, lift, operator_dense, signal_values

# Slack on the eigenvalue test deciding whether cooperation provably pays.
MARGIN_SLACK = 1e-9


@dataclass(frozen=True)
class Weights:
    """Scalar penalty weights of the per-trial cost.

    q: tracking error of the output against the trajectory
    r: trial-to-trial input change
    s: input effort
    w: distance of the trajectory from the target
    wr: trajectory effort
    """

    q: float
    r: float
    s: float
    w: float
    wr: float

    def __post_init__(self):
        for name in ("q", "r", "s", "w", "wr"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite")
            if value < 0.0:
                raise ValueError(f"{name} must be nonnegative")
            object.__setattr__(self, name, value)


def _require_synthesis_premises(weights: Weights) -> None:
    if not weights.q > 0.0:
        raise NumericalError("synthesis premise violated: q must be positive")
    if not weights.w > 0.0:
        raise NumericalError("synthesis premise violated: w must be positive")
    if not weights.r + weights.s > 0.0:
        raise NumericalError("synthesis premise violated: r + s must be positive")


@dataclass(frozen=True)
class GainSet:
    """Update-law matrices for both players.

    The input update is u+ = u_from_u u + u_from_r r+; the trajectory
    update is r+ = r_from_u u + r_from_target y_d. iteration_matrix is
    the resulting trial-to-trial input transition and convergence_norm
    its largest singular value; trajectory_normal_matrix is the
    trajectory player's (symmetric positive definite) normal matrix.
    """

    u_from_u: np.ndarray
    u_from_r: np.ndarray
    r_from_u: np.ndarray
    r_from_target: np.ndarray
    trajectory_normal_matrix: np.ndarray
    iteration_matrix: np.ndarray
    convergence_norm: float

    def __post_init__(self):
        n1 = self.u_from_u.shape[0]
        for name in (
            "u_from_u",
            "u_from_r",
            "r_from_u",
            "r_from_target",
            "trajectory_normal_matrix",
            "iteration_matrix",
        ):
            m = np.asarray(getattr(self, name), dtype=float)
            if m.shape != (n1, n1):
                raise ValueError(f"{name} must be {n1}x{n1}, got {m.shape}")
            object.__setattr__(self, name, m)
        composed = self.u_from_u + self.u_from_r @ self.r_from_u
        if np.abs(self.iteration_matrix - composed).max() > 1e-12:
            raise ValueError("iteration_matrix does not compose from the gains")
        rho = self.trajectory_normal_matrix
        if np.abs(rho - rho.T).max() > 1e-10:
            raise ValueError("trajectory_normal_matrix must be symmetric")
        object.__setattr__(self, "convergence_norm", float(self.convergence_norm))
        if self.convergence_norm < 0.0:
            raise ValueError("convergence_norm must be nonnegative")

    @property
    def size(self) -> int:
        return self.u_from_u.shape[0]


@dataclass(frozen=True)
class CostBreakdown:
    """Per-trial cost split into the five penalty items."""

    total: float
    q_item: float
    r_item: float
    s_item: float
    w_item: float
    wr_item: float

    def __post_init__(self):
        items = (self.q_item, self.r_item, self.s_item, self.w_item, self.wr_item)
        for value in items + (self.total,):
            if value < 0.0:
                raise ValueError("cost items must be nonnegative")
        if abs(self.total - sum(items)) > 1e-12 * max(1.0, abs(self.total)):
            raise ValueError("total must equal the sum of the items")


@dataclass(frozen=True)
class ConvergenceMargin:
    """Contraction diagnostics of the trial-to-trial input iteration."""

    norm: float
    spectral_radius: float
    converges: bool


@dataclass(frozen=True)
class CooperationMargin:
    """Definiteness margin of the condition making joint play provably pay.

    min_eig_sym is the smallest eigenvalue of the symmetric part of
    2 u_from_r r_from_u + u_from_u - I; nonnegative (within slack) means
    the two-player update improves on the input-only baseline trial by
    trial.
    """

    min_eig_sym: float
    satisfied: bool


@dataclass(frozen=True)
class TrackabilityReport:
    """Outcome of asking whether the target is exactly reachable.

    trackable requires both a residual below tolerance_used and a unique
    reproducing input over the samples the loop can actually reach.
    """

    trackable: bool
    u_d: np.ndarray
    residual_norm: float
    tolerance_used: float


def cost(u, u_prev, r, y, y_d, weights: Weights) -> CostBreakdown:
    """Evaluate the five-term trial cost for given signals."""
    u = signal_values(u)
    u_prev = signal_values(u_prev)
    r = signal_values(r)
    y = signal_values(y)
    y_d = signal_values(y_d)
    n1 = u.size
    for name, v in (("u_prev", u_prev), ("r", r), ("y", y), ("y_d", y_d)):
        if v.size != n1:
            raise ValueError(f"{name} has length {v.size}, expected {n1}")

    def sq(x):
        return float(x @ x)

    q_item = weights.q * sq(r - y)
    r_item = weights.r * sq(u - u_prev)
    s_item = weights.s * sq(u)
    w_item = weights.w * sq(y_d - r)
    wr_item = weights.wr * sq(r)
    return CostBreakdown(
        total=q_item + r_item + s_item + w_item + wr_item,
        q_item=q_item,
        r_item=r_item,
        s_item=s_item,
        w_item=w_item,
        wr_item=wr_item,
    )


def synthesize(input_map, trajectory_map, weights: Weights) -> GainSet:
    """Solve both players' stationarity systems for the update gains.

    The input player's normal matrix is q G'G + (r+s)I; eliminating the
    input from the trajectory player's condition leaves the dense normal
    matrix (I-G_r)'[q^-1 I + (r+s)^-1 G G']^-1 (I-G_r) + (w+wr) I acting
    on the trajectory. Positive q, w and positive r+s make both systems
    symmetric positive definite.
    """
    g = operator_dense(input_map)
    gr = operator_dense(trajectory_map)
    if g.shape != gr.shape:
        raise ValueError("input_map and trajectory_map must share the horizon")
    _require_synthesis_premises(weights)
    n1 = g.shape[0]
    eye = np.eye(n1)
    q, rw, s, w, wr = weights.q, weights.r, weights.s, weights.w, weights.wr

    input_normal = symmetrize(q * (g.T @ g) + (rw + s) * eye)
    coupling = q * (g.T @ (eye - gr))
    u_from_u = solve_spd(input_normal, rw * eye, context="input-player normal matrix")
    u_from_r = solve_spd(input_normal, coupling, context="input-player normal matrix")

    inner = symmetrize(eye / q + (g @ g.T) / (rw + s))
    resolvent = solve_spd(inner, eye - gr, context="inner weighting matrix")
    trajectory_normal = symmetrize((eye - gr).T @ resolvent + (w + wr) * eye)
    r_from_u = solve_spd(
        trajectory_normal, coupling.T @ u_from_u,
        context="trajectory-player normal matrix",
    )
    r_from_target = solve_spd(
        trajectory_normal, w * eye, context="trajectory-player normal matrix"
    )

    iteration_matrix = u_from_u + u_from_r @ r_from_u
    gains = GainSet(
        u_from_u=u_from_u,
        u_from_r=u_from_r,
        r_from_u=r_from_u,
        r_from_target=r_from_target,
        trajectory_normal_matrix=trajectory_normal,
        iteration_matrix=iteration_matrix,
        convergence_norm=float(np.linalg.norm(iteration_matrix, 2)),
    )
    check = trajectory_normal @ r_from_target - w * eye
    if np.abs(check).max() > 1e-9 * (1.0 + w):
        raise NumericalError(
            "trajectory gain failed its normal-equation residual check: "
            f"max abs {np.abs(check).max():.3e}"
        )
    return gains


def update_end_to_end(u_k, y_d, gains: GainSet):
    """One joint trial update: fresh trajectory first, then the input."""
    u_k = signal_values(u_k)
    y_d = signal_values(y_d)
    r_next = gains.r_from_u @ u_k + gains.r_from_target @ y_d
    u_next = gains.u_from_u @ u_k + gains.u_from_r @ r_next
    return r_next, u_next


def update_noilc(u_k, y_d, gains: GainSet) -> np.ndarray:
    """Input-only baseline update with the trajectory pinned to the target."""
    u_k = signal_values(u_k)
    y_d = signal_values(y_d)
    return gains.u_from_u @ u_k + gains.u_from_r @ y_d


def update_serial_only(y_d, trajectory_map, weights: Weights) -> np.ndarray:
    """Trajectory-player optimum with no feedforward input at all."""
    y_d = signal_values(y_d)
    gr = operator_dense(trajectory_map)
    n1 = gr.shape[0]
    if y_d.size != n1:
        raise ValueError(f"target has length {y_d.size}, expected {n1}")
    eye = np.eye(n1)
    normal = symmetrize(
        weights.q * ((eye - gr).T @ (eye - gr)) + (weights.w + weights.wr) * eye
    )
    return solve_spd(
        normal, weights.w * y_d, context="serial trajectory normal matrix"
    )


def stationarity_residuals(
    gains: GainSet, input_map, trajectory_map, weights: Weights, u_k, y_d
) -> tuple[float, float]:
    """Residual norms of both players' first-order conditions after one update.

    Returns (trajectory residual, input residual); both should vanish up
    to roundoff because the update is the exact joint minimizer.
    """
    u_k = signal_values(u_k)
    y_d = signal_values(y_d)
    g = operator_dense(input_map)
    gr = operator_dense(trajectory_map)
    r_next, u_next = update_end_to_end(u_k, y_d, gains)
    eye = np.eye(g.shape[0])
    q, rw, s, w, wr = weights.q, weights.r, weights.s, weights.w, weights.wr

    coupling = q * (g.T @ (eye - gr))
    input_normal = q * (g.T @ g) + (rw + s) * eye
    trajectory_full = q * ((eye - gr).T @ (eye - gr)) + (w + wr) * eye

    res_r = trajectory_full @ r_next - coupling.T @ u_next - w * y_d
    res_u = input_normal @ u_next - coupling @ r_next - rw * u_k
    return float(np.linalg.norm(res_r)), float(np.linalg.norm(res_u))


def closed_form_input(k: int, u0, gains: GainSet, y_d) -> np.ndarray:
    """Input after k trials in closed form, without iterating.

    u_k = xi^k u0 + (I - xi)^-1 (I - xi^k) u_from_r r_from_target y_d.
    """
    if k < 0:
        raise ValueError("trial index must be nonnegative")
    u0 = signal_values(u0)
    y_d = signal_values(y_d)
    xi = gains.iteration_matrix
    eye = np.eye(gains.size)
    xi_k = np.linalg.matrix_power(xi, k)
    drive = gains.u_from_r @ (gains.r_from_target @ y_d)
    steady_part = solve_general(
        eye - xi, (eye - xi_k) @ drive, context="learning-iteration matrix (I - xi)"
    )
    return xi_k @ u0 + steady_part


def asymptotic_input(gains: GainSet, y_d) -> np.ndarray:
    """Fixed point of the input iteration (requires contraction)."""
    _require_contraction(gains)
    y_d = signal_values(y_d)
    eye = np.eye(gains.size)
    drive = gains.u_from_r @ (gains.r_from_target @ y_d)
    return solve_general(
        eye - gains.iteration_matrix, drive,
        context="learning-iteration matrix (I - xi)",
    )


def asymptotic_trajectory(gains: GainSet, y_d) -> np.ndarray:
    """Limit of the learned trajectory (requires contraction)."""
    y_d = signal_values(y_d)
    u_inf = asymptotic_input(gains, y_d)
    return gains.r_from_u @ u_inf + gains.r_from_target @ y_d


def asymptotic_error(gains: GainSet, input_map, trajectory_map, y_d) -> np.ndarray:
    """Limit of the target-tracking error y_d - y under the joint update."""
    y_d = signal_values(y_d)
    g = operator_dense(input_map)
    gr = operator_dense(trajectory_map)
    u_inf = asymptotic_input(gains, y_d)
    r_inf = gains.r_from_u @ u_inf + gains.r_from_target @ y_d
    return y_d - (g @ u_inf + gr @ r_inf)


def _require_contraction(gains: GainSet) -> None:
    if gains.convergence_norm >= 1.0:
        raise DivergenceError(
            "learning iteration does not contract: "
            f"norm {gains.convergence_norm:.6f} >= 1"
        )


def convergence_margin(gains: GainSet) -> ConvergenceMargin:
    """Norm and spectral radius of the input iteration matrix."""
    radius = float(np.abs(np.linalg.eigvals(gains.iteration_matrix)).max())
    return ConvergenceMargin(
        norm=gains.convergence_norm,
        spectral_radius=radius,
        converges=gains.convergence_norm < 1.0,
    )


def cooperation_margin(gains: GainSet) -> CooperationMargin:
    """Eigenvalue margin of the condition for cooperation to provably pay."""
    m = 2.0 * (gains.u_from_r @ gains.r_from_u) + gains.u_from_u - np.eye(gains.size)
    min_eig = float(np.linalg.eigvalsh(symmetrize(m)).min())
    return CooperationMargin(min_eig_sym=min_eig, satisfied=min_eig >= -MARGIN_SLACK)


def input_to_output_map(input_map, trajectory_map) -> LiftedOperator:
    """Map from the learned input to the output with the trajectory loop closed.

    Solves (I - G_r) x = G column-wise by forward substitution; the
    result is again causal Toeplitz, so only the first column is solved
    and the operator is rebuilt from it. Leading structural zeros
    survive exactly, which downstream uniqueness checks rely on.
    """
    g = operator_dense(input_map)
    gr = operator_dense(trajectory_map)
    if g.shape != gr.shape:
        raise ValueError("input_map and trajectory_map must share the horizon")
    n1 = g.shape[0]
    first = solve_lower_triangular(
        np.eye(n1) - gr, g[:, :1], context="trajectory loop (I - G_r)"
    )[:, 0]
    return lift(first)


def trackability(
    input_map, trajectory_map, y_d, tolerance: float | None = None
) -> TrackabilityReport:
    """Least-squares reachability test for the target trajectory.

    Finds the minimum-norm input reproducing the target through the
    input-to-output map. The default tolerance scales with the target so
    the verdict is amplitude-invariant. A map that is pure delay keeps a
    unique solution over the reachable samples; only the all-zero map
    loses uniqueness outright.
    """
    y_d = signal_values(y_d)
    ghat = input_to_output_map(input_map, trajectory_map)
    n1 = ghat.size
    if y_d.size != n1:
        raise ValueError(f"target has length {y_d.size}, expected {n1}")
    if tolerance is None:
        tolerance = 1e-8 * (1.0 + float(np.linalg.norm(y_d)))
    tolerance = float(tolerance)

    u_d, *_ = np.linalg.lstsq(ghat.dense, y_d, rcond=None)
    residual = float(np.linalg.norm(ghat.dense @ u_d - y_d))
    unique_on_support = bool(np.any(ghat.markov != 0.0))
    return TrackabilityReport(
        trackable=unique_on_support and residual <= tolerance,
        u_d=u_d,
        residual_norm=residual,
        tolerance_used=tolerance,
    )
