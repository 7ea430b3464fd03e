"""Seeded i.i.d. sample generation and cumulative partitioning.

The sample stream is produced by numpy's PCG64 generator: one generator per
draw, a single uniform block of shape (N, m) consumed in row order.  This
makes every sample set bit-reproducible from (seed, N, distribution) across
platforms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "UniformBox",
    "SampleSet",
    "Partition",
    "draw_samples",
    "partition_uniform",
    "partition_linear",
]


@dataclass(frozen=True)
class UniformBox:
    """Uniform distribution over the box [lo, hi]^m (componentwise bounds)."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1 or lo.size == 0:
            raise ValueError("invalid box: lo and hi must be 1-d and of equal length")
        if not np.all(lo < hi):
            raise ValueError("invalid box: need lo < hi componentwise")

    @property
    def m(self) -> int:
        return len(self.lo)

    @staticmethod
    def scalar(lo: float, hi: float) -> "UniformBox":
        return UniformBox((float(lo),), (float(hi),))


@dataclass(frozen=True)
class SampleSet:
    """An ordered batch of i.i.d. draws together with its provenance."""

    samples: np.ndarray  # shape (N, m)
    seed: int | None
    distribution: UniformBox | None = None

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 2 or s.shape[0] < 1:
            raise ValueError("samples must be a non-empty (N, m) array")
        object.__setattr__(self, "samples", s)

    @property
    def N(self) -> int:
        return self.samples.shape[0]

    @property
    def m(self) -> int:
        return self.samples.shape[1]

    def to_csv(self, path) -> None:
        """One row per sample, 17 significant digits (exact float64 round trip)."""
        np.savetxt(path, self.samples, fmt="%.17g", delimiter=",")

    @staticmethod
    def from_csv(path) -> "SampleSet":
        data = np.loadtxt(path, delimiter=",", ndmin=2)
        return SampleSet(samples=data, seed=None, distribution=None)


@dataclass(frozen=True)
class Partition:
    """Strictly increasing cumulative group sizes q_1 < ... < q_L = N."""

    q: tuple[int, ...]

    def __post_init__(self):
        q = tuple(int(v) for v in self.q)
        if len(q) == 0 or q[0] <= 0:
            raise ValueError("partition must start with a positive group size")
        if any(b <= a for a, b in zip(q, q[1:])):
            raise ValueError("partition must be strictly increasing")
        object.__setattr__(self, "q", q)

    @property
    def L(self) -> int:
        return len(self.q)

    @property
    def N(self) -> int:
        return self.q[-1]


def draw_samples(distribution: UniformBox, N: int, seed: int) -> SampleSet:
    """Draw N i.i.d. samples from the box-uniform distribution.

    Deterministic under a fixed seed; rerunning with equal arguments yields a
    bit-identical sample set.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    lo = np.asarray(distribution.lo, dtype=float)
    hi = np.asarray(distribution.hi, dtype=float)
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.random((N, distribution.m))
    return SampleSet(samples=lo + (hi - lo) * u, seed=int(seed), distribution=distribution)


def partition_uniform(N: int, L: int) -> Partition:
    """Equal-size cumulative partition: q_l = round(l*N/L), repaired to be
    strictly increasing with q_L = N."""
    if L <= 0 or L > N:
        raise ValueError(f"need 1 <= L <= N, got L={L}, N={N}")
    q = [int(round(ell * N / L)) for ell in range(1, L + 1)]
    q[-1] = N
    # forward repair: strict ascent from below
    for i in range(1, L):
        if q[i] <= q[i - 1]:
            q[i] = q[i - 1] + 1
    # backward repair: keep room below N
    for i in range(L - 2, -1, -1):
        if q[i] >= q[i + 1]:
            q[i] = q[i + 1] - 1
    return Partition(tuple(q))


def partition_linear(tau1: int, L: int) -> Partition:
    """Linearly growing cumulative sizes q_l = tau1 * l (implied N = tau1*L)."""
    if tau1 < 1:
        raise ValueError("tau1 must be a positive integer")
    if L < 1:
        raise ValueError("L must be at least 1")
    return Partition(tuple(tau1 * ell for ell in range(1, L + 1)))
