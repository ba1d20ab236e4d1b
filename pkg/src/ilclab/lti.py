"""Continuous-time models, discretization, and closed-loop interconnection.

The pipeline here goes: transfer function -> controllable-canonical state
space -> discrete state space (zero-order hold or bilinear) -> one
interconnected closed loop exposing the two sensitivities that drive the
trial-domain learning: the map from the commanded trajectory to the
output (g_cs, complementary sensitivity) and the map from the
feedforward input to the output (g_ps, process sensitivity). Impulse
responses of those two systems populate the lifted operators used
everywhere else.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from ._linalg import solve_general
from .errors import ConfigError, NumericalError

# Closed-loop poles must sit strictly inside the unit circle by this margin.
STABILITY_MARGIN = 1e-9


def _as_coeffs(values, name: str) -> tuple[float, ...]:
    try:
        coeffs = tuple(float(v) for v in values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} coefficients must be a sequence of reals") from exc
    if not coeffs:
        raise ConfigError(f"{name} coefficients must be nonempty")
    if not all(np.isfinite(coeffs)):
        raise ConfigError(f"{name} coefficients must be finite")
    return coeffs


def _effective_degree(coeffs: tuple[float, ...]) -> int:
    """Polynomial degree ignoring leading zeros (-1 for the zero polynomial)."""
    for i, c in enumerate(coeffs):
        if c != 0.0:
            return len(coeffs) - 1 - i
    return -1


@dataclass(frozen=True)
class ContinuousTransferFunction:
    """Proper SISO rational transfer function in descending powers of s."""

    num: tuple[float, ...]
    den: tuple[float, ...]

    def __post_init__(self):
        num = _as_coeffs(self.num, "numerator")
        den = _as_coeffs(self.den, "denominator")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)
        if den[0] == 0.0:
            raise ConfigError("leading denominator coefficient must be nonzero")
        if self.numerator_degree > self.denominator_degree:
            raise ConfigError(
                "transfer function must be proper: numerator degree "
                f"{self.numerator_degree} exceeds denominator degree "
                f"{self.denominator_degree}"
            )

    @property
    def numerator_degree(self) -> int:
        return _effective_degree(self.num)

    @property
    def denominator_degree(self) -> int:
        return len(self.den) - 1

    def response(self, s) -> np.ndarray:
        """Evaluate num(s)/den(s) at complex frequency points."""
        s = np.asarray(s, dtype=complex)
        return np.polyval(self.num, s) / np.polyval(self.den, s)


@dataclass(frozen=True)
class ContinuousStateSpace:
    """SISO continuous realization: xdot = A x + B u, y = C x + D u."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: float

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = a.shape[0]
        if a.shape != (n, n):
            raise ValueError(f"state matrix must be square, got {a.shape}")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", np.asarray(self.B, dtype=float).reshape(n, 1))
        object.__setattr__(self, "C", np.asarray(self.C, dtype=float).reshape(1, n))
        object.__setattr__(self, "D", float(self.D))

    @property
    def order(self) -> int:
        return self.A.shape[0]

    def response(self, s) -> np.ndarray:
        """Frequency response C (sI - A)^-1 B + D at complex points s."""
        s = np.atleast_1d(np.asarray(s, dtype=complex))
        n = self.order
        out = np.empty(s.shape, dtype=complex)
        eye = np.eye(n)
        for i, si in enumerate(s):
            if n == 0:
                out[i] = self.D
                continue
            x = np.linalg.solve(si * eye - self.A, self.B)
            out[i] = (self.C @ x)[0, 0] + self.D
        return out


@dataclass(frozen=True)
class DiscreteStateSpace:
    """SISO discrete realization: x+ = A x + B u, y = C x + D u."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: float
    sample_time: float

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = a.shape[0]
        if a.shape != (n, n):
            raise ValueError(f"state matrix must be square, got {a.shape}")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", np.asarray(self.B, dtype=float).reshape(n, 1))
        object.__setattr__(self, "C", np.asarray(self.C, dtype=float).reshape(1, n))
        object.__setattr__(self, "D", float(self.D))
        object.__setattr__(self, "sample_time", float(self.sample_time))
        if not self.sample_time > 0.0:
            raise ValueError("sample_time must be positive")

    @property
    def order(self) -> int:
        return self.A.shape[0]

    def response(self, z) -> np.ndarray:
        """Frequency response C (zI - A)^-1 B + D at complex points z."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        n = self.order
        out = np.empty(z.shape, dtype=complex)
        eye = np.eye(n)
        for i, zi in enumerate(z):
            if n == 0:
                out[i] = self.D
                continue
            x = np.linalg.solve(zi * eye - self.A, self.B)
            out[i] = (self.C @ x)[0, 0] + self.D
        return out

    def simulate(self, u: np.ndarray) -> np.ndarray:
        """Drive the system from a zero initial state with input samples u."""
        u = np.asarray(u, dtype=float)
        y = np.empty_like(u)
        x = np.zeros((self.order, 1))
        for t, ut in enumerate(u):
            y[t] = (self.C @ x)[0, 0] + self.D * ut
            x = self.A @ x + self.B * ut
        return y


@dataclass(frozen=True)
class ClosedLoopModel:
    """The two closed-loop sensitivities sharing one interconnected state."""

    g_cs: DiscreteStateSpace  # trajectory -> output
    g_ps: DiscreteStateSpace  # feedforward input -> output

    def __post_init__(self):
        if self.g_cs.sample_time != self.g_ps.sample_time:
            raise ValueError("sensitivities must share the sample time")

    @property
    def sample_time(self) -> float:
        return self.g_cs.sample_time


def tf_to_state_space(tf: ContinuousTransferFunction) -> ContinuousStateSpace:
    """Controllable-canonical realization of a proper transfer function."""
    a0 = tf.den[0]
    den = np.asarray(tf.den, dtype=float) / a0
    n = len(den) - 1
    b = np.zeros(n + 1)
    b[n + 1 - len(tf.num):] = np.asarray(tf.num, dtype=float) / a0
    d = b[0]
    if n == 0:
        return ContinuousStateSpace(
            np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), d
        )
    a = np.zeros((n, n))
    a[0, :] = -den[1:]
    if n > 1:
        a[1:, :-1] = np.eye(n - 1)
    bvec = np.zeros((n, 1))
    bvec[0, 0] = 1.0
    c = (b[1:] - den[1:] * d)[None, :]
    return ContinuousStateSpace(a, bvec, c, d)


def discretize_zoh(ct: ContinuousStateSpace, sample_time: float) -> DiscreteStateSpace:
    """Exact zero-order-hold equivalent via the augmented matrix exponential."""
    if not sample_time > 0.0:
        raise ValueError("sample_time must be positive")
    n = ct.order
    aug = np.zeros((n + 1, n + 1))
    aug[:n, :n] = ct.A
    aug[:n, n:] = ct.B
    phi = expm(aug * sample_time)
    if not np.isfinite(phi).all():
        norm_at = np.linalg.norm(ct.A, ord=2) * sample_time if n else 0.0
        raise NumericalError(
            f"matrix exponential overflowed: ||A||*T = {norm_at:.3e}"
        )
    return DiscreteStateSpace(phi[:n, :n], phi[:n, n:], ct.C, ct.D, sample_time)


def discretize_tustin(ct: ContinuousStateSpace, sample_time: float) -> DiscreteStateSpace:
    """Bilinear (trapezoidal) equivalent, the usual digital-controller map."""
    if not sample_time > 0.0:
        raise ValueError("sample_time must be positive")
    n = ct.order
    if n == 0:
        return DiscreteStateSpace(ct.A, ct.B, ct.C, ct.D, sample_time)
    eye = np.eye(n)
    left = eye - 0.5 * sample_time * ct.A
    ctx = "bilinear discretization (continuous pole at 2/T)"
    ad = solve_general(left, eye + 0.5 * sample_time * ct.A, context=ctx)
    bd = solve_general(left, sample_time * ct.B, context=ctx)
    cd = solve_general(left.T, ct.C.T, context=ctx).T
    dd = ct.D + 0.5 * float((ct.C @ bd)[0, 0])
    return DiscreteStateSpace(ad, bd, cd, dd, sample_time)


def spectral_radius(a: np.ndarray) -> float:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.shape[0] == 0:
        return 0.0
    return float(np.abs(np.linalg.eigvals(a)).max())


def build_closed_loop(
    plant: DiscreteStateSpace, controller: DiscreteStateSpace
) -> ClosedLoopModel:
    """Interconnect plant and controller into the two output sensitivities.

    The loop feeds the tracking error into the controller and adds the
    learned feedforward at the actuator, so the output obeys
    y = g_cs r + g_ps u with g_cs = HC/(1+HC) and g_ps = H/(1+HC).
    Both realizations share the stacked (plant, controller) state.
    """
    if plant.sample_time != controller.sample_time:
        raise ValueError("plant and controller must share the sample time")
    dp, dc = plant.D, controller.D
    delta = 1.0 + dp * dc
    if abs(delta) < 1e-12 * (1.0 + abs(dp * dc)):
        raise NumericalError(
            f"algebraic loop: 1 + D_plant*D_controller = {delta:.3e} is not invertible"
        )
    n_p, n_c = plant.order, controller.order
    ap, bp, cp = plant.A, plant.B, plant.C
    ac, bc, cc = controller.A, controller.B, controller.C

    a = np.zeros((n_p + n_c, n_p + n_c))
    a[:n_p, :n_p] = ap - bp @ (dc * cp) / delta
    a[:n_p, n_p:] = bp @ cc / delta
    a[n_p:, :n_p] = -bc @ cp / delta
    a[n_p:, n_p:] = ac - bc @ (dp * cc) / delta
    b_traj = np.vstack([bp * dc / delta, bc / delta])
    b_ff = np.vstack([bp / delta, -bc * dp / delta])
    c = np.hstack([cp / delta, dp * cc / delta])
    d_traj = dp * dc / delta
    d_ff = dp / delta

    radius = spectral_radius(a)
    if radius >= 1.0 - STABILITY_MARGIN:
        raise NumericalError(
            f"closed loop is not internally stable: spectral radius {radius:.9f}"
        )
    ts = plant.sample_time
    return ClosedLoopModel(
        g_cs=DiscreteStateSpace(a, b_traj, c, d_traj, ts),
        g_ps=DiscreteStateSpace(a, b_ff, c, d_ff, ts),
    )


def markov_parameters(ss: DiscreteStateSpace, count: int) -> np.ndarray:
    """First `count` impulse-response samples: h0 = D, h_i = C A^(i-1) B."""
    if count < 1:
        raise ValueError("count must be >= 1")
    h = np.zeros(count)
    h[0] = ss.D
    x = ss.B.copy()
    for i in range(1, count):
        h[i] = (ss.C @ x)[0, 0]
        x = ss.A @ x
    return h
