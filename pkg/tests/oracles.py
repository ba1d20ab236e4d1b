"""Independent reference computations used to cross-check the package.

Everything here is deliberately written against plain numpy (dense
solves, explicit python loops) rather than through ilclab's own code
paths, so the tests compare two implementations that share nothing but
the problem statement.
"""

from fractions import Fraction

import numpy as np


def toeplitz_from_markov(h):
    """Lower-triangular Toeplitz matrix built with explicit loops."""
    h = np.asarray(h, dtype=float)
    n = h.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            out[i, j] = h[i - j]
    return out


def convolve_markov(a, b):
    """Markov sequence of the composition of two lifted maps."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.convolve(a, b)[: a.shape[0]]


def stacked_joint_update(g, g_r, w, u_k, y_d):
    """Joint one-trial minimizer via one dense solve of the stacked
    first-order conditions. Returns (u_next, r_next)."""
    g = np.asarray(g, dtype=float)
    g_r = np.asarray(g_r, dtype=float)
    n = g.shape[0]
    eye = np.eye(n)
    a = eye - g_r
    m = w.q * g.T @ g + (w.r + w.s) * eye
    m_r = w.q * a.T @ a + (w.w + w.wr) * eye
    p = w.q * g.T @ a
    k = np.block([[m, -p], [-p.T, m_r]])
    rhs = np.concatenate([w.r * np.asarray(u_k, float), w.w * np.asarray(y_d, float)])
    x = np.linalg.solve(k, rhs)
    return x[:n], x[n:]


def best_response_trajectory(g, g_r, w, u_k, y_d):
    """Trajectory player's optimum against a frozen input u_k."""
    g = np.asarray(g, dtype=float)
    g_r = np.asarray(g_r, dtype=float)
    n = g.shape[0]
    a = np.eye(n) - g_r
    m_r = w.q * a.T @ a + (w.w + w.wr) * np.eye(n)
    p = w.q * g.T @ a
    rhs = p.T @ np.asarray(u_k, float) + w.w * np.asarray(y_d, float)
    return np.linalg.solve(m_r, rhs)


def simulate_feedback_loop(plant, controller, r, u):
    """Sample-by-sample closed-loop recursion, feedthrough solved exactly.

    Both arguments are DiscreteStateSpace realizations; r is the
    reference fed to the comparator, u the feedforward added at the
    actuator. Returns (y, e, u_mix).
    """
    r = np.asarray(r, dtype=float)
    u = np.asarray(u, dtype=float)
    n = r.shape[0]
    xp = np.zeros(plant.order)
    xc = np.zeros(controller.order)
    ap, bp, cp, dp = plant.A, plant.B[:, 0], plant.C[0, :], plant.D
    ac, bc, cc, dc = controller.A, controller.B[:, 0], controller.C[0, :], controller.D
    delta = 1.0 + dp * dc
    y = np.zeros(n)
    e = np.zeros(n)
    u_mix = np.zeros(n)
    for t in range(n):
        e[t] = (r[t] - cp @ xp - dp * (cc @ xc) - dp * u[t]) / delta
        u_mix[t] = cc @ xc + dc * e[t] + u[t]
        y[t] = cp @ xp + dp * u_mix[t]
        xp = ap @ xp + bp * u_mix[t]
        xc = ac @ xc + bc * e[t]
    return y, e, u_mix


def rational_dc_gain(a, b, c, d):
    """DC gain C (I - A)^-1 B + D via exact rational elimination.

    Float entries are converted to Fractions (lossless), the linear
    system is solved with fraction arithmetic, and the result comes
    back as a float only at the very end.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    n = a.shape[0]
    b = np.asarray(b, dtype=float).reshape(n)
    c = np.asarray(c, dtype=float).reshape(n)
    if n == 0:
        return float(d)
    rows = [
        [Fraction(float((i == j) - a[i, j])) for j in range(n)] + [Fraction(float(b[i]))]
        for i in range(n)
    ]
    for col in range(n):
        pivot = max(range(col, n), key=lambda i: abs(rows[i][col]))
        if rows[pivot][col] == 0:
            raise ZeroDivisionError("singular system in rational elimination")
        rows[col], rows[pivot] = rows[pivot], rows[col]
        for i in range(n):
            if i == col:
                continue
            factor = rows[i][col] / rows[col][col]
            if factor == 0:
                continue
            for j in range(col, n + 1):
                rows[i][j] -= factor * rows[col][j]
    x = [rows[i][n] / rows[i][i] for i in range(n)]
    total = Fraction(float(d))
    for i in range(n):
        total += Fraction(float(c[i])) * x[i]
    return float(total)


def rand_instance(seed):
    """Random strictly-proper pair of lifted maps plus weights and data.

    Returns (g_markov, gr_markov, weights_kwargs, y_d, u_k). Horizon
    lengths span 3..30; impulse responses decay geometrically so the
    operators stay well scaled.
    """
    rng = np.random.default_rng(1000 + seed)
    n1 = int(rng.integers(3, 31))
    h = np.zeros(n1)
    hr = np.zeros(n1)
    h[1] = rng.uniform(0.5, 1.5) * rng.choice([-1.0, 1.0])
    decay = rng.uniform(0.3, 0.9)
    for i in range(2, n1):
        h[i] = h[i - 1] * decay * rng.uniform(0.3, 1.0)
    hr[1] = rng.uniform(0.2, 0.9)
    dr = rng.uniform(0.2, 0.8)
    for i in range(2, n1):
        hr[i] = hr[i - 1] * dr * rng.uniform(0.2, 1.0)
    wkw = dict(
        q=10.0 ** rng.uniform(-1, 1),
        w=10.0 ** rng.uniform(-1, 1),
        r=10.0 ** rng.uniform(-2, 0),
        s=10.0 ** rng.uniform(-2, 0),
        wr=10.0 ** rng.uniform(-3, 0),
    )
    y_d = rng.standard_normal(n1)
    u_k = rng.standard_normal(n1)
    return h, hr, wkw, y_d, u_k


def rand_contraction_instance(seed):
    """Like rand_instance but with weights biased so learning contracts
    comfortably (used for the closed-form iteration checks)."""
    rng = np.random.default_rng(2000 + seed)
    n1 = int(rng.integers(3, 31))
    h = np.zeros(n1)
    hr = np.zeros(n1)
    h[1] = rng.uniform(0.5, 1.5) * rng.choice([-1.0, 1.0])
    decay = rng.uniform(0.3, 0.9)
    for i in range(2, n1):
        h[i] = h[i - 1] * decay * rng.uniform(0.3, 1.0)
    hr[1] = rng.uniform(0.2, 0.9)
    dr = rng.uniform(0.2, 0.8)
    for i in range(2, n1):
        hr[i] = hr[i - 1] * dr * rng.uniform(0.2, 1.0)
    q = 10.0 ** rng.uniform(-1, 1)
    w = 10.0 ** rng.uniform(-1, 1)
    r = 10.0 ** rng.uniform(-2, 0)
    s = r * rng.uniform(0.5, 2.0)
    wr = 10.0 ** rng.uniform(-3, 0)
    y_d = rng.standard_normal(n1)
    return h, hr, dict(q=q, w=w, r=r, s=s, wr=wr), y_d


def rand_game_candidate(seed):
    """Candidate instance for the cooperation suite.

    Returns (h, hr, weights_kwargs, rng). The caller screens the
    candidate against the cooperation and contraction premises and only
    then draws the target from the same rng, so accepted instances stay
    reproducible from the seed alone.
    """
    rng = np.random.default_rng(8800 + seed)
    n1 = int(rng.integers(3, 21))
    h = np.zeros(n1)
    hr = np.zeros(n1)
    h[0] = rng.uniform(0.6, 1.4) * rng.choice([-1.0, 1.0])
    for i in range(1, n1):
        h[i] = h[i - 1] * rng.uniform(0.1, 0.5) * rng.choice([-1.0, 1.0])
    hr[1] = rng.uniform(0.02, 0.2)
    for i in range(2, n1):
        hr[i] = hr[i - 1] * rng.uniform(0.1, 0.4)
    sig = np.linalg.norm(toeplitz_from_markov(h), 2)
    q = rng.uniform(0.5, 3.0)
    w = q * rng.uniform(0.03, 0.2)
    wr = w * rng.uniform(0.0, 0.3)
    s = q * rng.uniform(0.0, 0.01)
    r = q * sig**2 * rng.uniform(0.3, 2.0)
    return h, hr, dict(q=q, r=r, s=s, w=w, wr=wr), rng
