"""Trial-domain (lifted) algebra.

A repetitive task runs over a fixed horizon of N+1 samples, so one trial
of any signal is just a vector, and a stable SISO discrete system
restricted to that horizon is a lower-triangular Toeplitz matrix built
from its impulse response. Everything downstream (gain synthesis, the
learning updates, the game bookkeeping) is plain dense linear algebra on
these objects.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz


@dataclass(frozen=True)
class Signal:
    """One trial of a sampled scalar signal."""

    values: np.ndarray
    sample_time: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("signal values must be a nonempty 1-d array")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "sample_time", float(self.sample_time))
        if not self.sample_time > 0.0:
            raise ValueError("sample_time must be positive")

    def __len__(self) -> int:
        return self.values.size

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.values.size) * self.sample_time


def signal_values(x) -> np.ndarray:
    """Unwrap a Signal, or coerce any array-like, to a 1-d float vector."""
    if isinstance(x, Signal):
        return x.values
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        raise ValueError("expected a 1-d signal, got a scalar")
    return v.reshape(-1) if v.ndim == 1 else v


@dataclass(frozen=True)
class LiftedOperator:
    """Causal convolution operator on the horizon.

    dense[i, j] = markov[i - j] for i >= j, zero above the diagonal; the
    dense matrix is materialized because gain synthesis needs general
    inverses, while the markov list keeps the generating structure.
    """

    markov: np.ndarray
    dense: np.ndarray | None = None

    def __post_init__(self):
        h = np.asarray(self.markov, dtype=float)
        if h.ndim != 1 or h.size == 0:
            raise ValueError("markov parameters must be a nonempty 1-d array")
        dense = toeplitz(h, np.zeros_like(h))
        if self.dense is not None and not np.array_equal(
            np.asarray(self.dense, dtype=float), dense
        ):
            raise ValueError("dense matrix does not regenerate from the markov list")
        object.__setattr__(self, "markov", h)
        object.__setattr__(self, "dense", dense)

    @property
    def size(self) -> int:
        return self.markov.size


def operator_dense(op) -> np.ndarray:
    """Dense matrix of a LiftedOperator, or a square matrix passed through."""
    if isinstance(op, LiftedOperator):
        return op.dense
    a = np.asarray(op, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square operator matrix, got shape {a.shape}")
    return a


def lift(markov, horizon: int | None = None) -> LiftedOperator:
    """Build the lifted operator for a horizon of `horizon`+1 samples.

    A markov list longer than the horizon is truncated (later samples
    never influence the window); a shorter one is zero-padded.
    """
    h = np.asarray(markov, dtype=float)
    if h.ndim != 1 or h.size == 0:
        raise ValueError("markov parameters must be a nonempty 1-d array")
    if horizon is None:
        return LiftedOperator(h)
    n1 = horizon + 1
    if n1 < 1:
        raise ValueError("horizon must cover at least one sample")
    out = np.zeros(n1)
    out[: min(n1, h.size)] = h[:n1]
    return LiftedOperator(out)


def apply(op: LiftedOperator, x) -> np.ndarray:
    """Convolve the operator's impulse response with a signal.

    Equals op.dense @ x without forming the product.
    """
    h = op.markov if isinstance(op, LiftedOperator) else np.asarray(op, dtype=float)
    v = signal_values(x)
    if h.shape != v.shape:
        raise ValueError(
            f"operator horizon {h.size} does not match signal length {v.size}"
        )
    return np.convolve(h, v)[: h.size]


@dataclass(frozen=True)
class DiagonalWeight:
    """Scalar multiple of the identity used as a quadratic penalty weight."""

    scalar: float
    dimension: int

    def __post_init__(self):
        object.__setattr__(self, "scalar", float(self.scalar))
        object.__setattr__(self, "dimension", int(self.dimension))
        if self.scalar < 0.0:
            raise ValueError("weight scalar must be nonnegative")
        if self.dimension < 1:
            raise ValueError("weight dimension must be at least 1")

    def matrix(self) -> np.ndarray:
        return self.scalar * np.eye(self.dimension)


def weighted_norm_sq(x, w) -> float:
    """Quadratic penalty w * ||x||^2 (w a DiagonalWeight or bare scalar)."""
    v = signal_values(x)
    if isinstance(w, DiagonalWeight):
        if w.dimension != v.size:
            raise ValueError(
                f"weight dimension {w.dimension} does not match signal length {v.size}"
            )
        scalar = w.scalar
    else:
        scalar = float(w)
        if scalar < 0.0:
            raise ValueError("weight scalar must be nonnegative")
    return scalar * float(v @ v)
