"""Gradually reinforced sample-average map d(x, t) with derivatives.

On segment l the map blends the cumulative sample averages f^{l-1} and f^l:

    d(x, t) = (1 - theta_l(t)) f^{l-1}(x) + theta_l(t) f^l(x)

Because the first q_{l-1} samples are a prefix of the first q_l, one pass
over q_l samples yields both averages; a blend call therefore costs exactly
q_l single-sample residual evaluations, which is the machine-independent
efficiency metric used throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .sampling import Partition, SampleSet
from .schedule import NodeSchedule, segment_of, theta, theta_prime

__all__ = ["StochasticSystem", "BlendedMap", "fd_jacobian_batch", "check_coercivity"]

# Residual evaluators are batched over samples for speed:
#   residual(x, xis) -> (q, n) stacking f(x, xi_i) row-wise
#   jacobian(x, xis) -> (q, n, n) stacking df/dx(x, xi_i)
ResidualFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
JacobianFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


def fd_jacobian_batch(residual: ResidualFn, rel_step: float = 1e-7) -> JacobianFn:
    """Central finite-difference fallback for the per-sample x-Jacobian.

    Provided for problems without analytic derivatives; results produced with
    it are flagged by the owning system (fd_jacobian=True).
    """

    def jac(x: np.ndarray, xis: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        n = x.size
        q = xis.shape[0]
        out = np.empty((q, n, n))
        for j in range(n):
            h = rel_step * max(1.0, abs(x[j]))
            xp = x.copy(); xp[j] += h
            xm = x.copy(); xm[j] -= h
            out[:, :, j] = (residual(xp, xis) - residual(xm, xis)) / (2.0 * h)
        return out

    return jac


@dataclass(frozen=True)
class StochasticSystem:
    """A stochastic residual f(x, xi) with its x-Jacobian and domain box."""

    n: int
    m: int
    residual: ResidualFn
    jacobian: JacobianFn | None
    box_lo: np.ndarray
    box_hi: np.ndarray
    x0: np.ndarray
    name: str = ""
    fd_jacobian: bool = False

    def __post_init__(self):
        lo = np.asarray(self.box_lo, dtype=float)
        hi = np.asarray(self.box_hi, dtype=float)
        x0 = np.asarray(self.x0, dtype=float)
        if lo.shape != (self.n,) or hi.shape != (self.n,) or x0.shape != (self.n,):
            raise ValueError("box and reference point must have shape (n,)")
        if not np.all((lo < x0) & (x0 < hi)):
            raise ValueError("reference point x0 must lie strictly inside the box")
        object.__setattr__(self, "box_lo", lo)
        object.__setattr__(self, "box_hi", hi)
        object.__setattr__(self, "x0", x0)
        if self.jacobian is None:
            object.__setattr__(self, "jacobian", fd_jacobian_batch(self.residual))
            object.__setattr__(self, "fd_jacobian", True)


@dataclass
class BlendedMap:
    """Binds a system to samples, a partition and a node schedule.

    eval_counter counts single-sample residual evaluations made by blend /
    sample_average / blend_deriv_t; jac_counter separately counts per-sample
    Jacobian evaluations (not part of the efficiency metric).
    """

    system: StochasticSystem
    samples: SampleSet
    partition: Partition
    schedule: NodeSchedule
    eval_counter: int = 0
    jac_counter: int = 0

    def __post_init__(self):
        if self.partition.L != self.schedule.L:
            raise ValueError("partition and schedule must have the same L")
        if self.partition.N != self.samples.N:
            raise ValueError("partition terminal size must equal the sample count")
        if self.samples.m != self.system.m:
            raise ValueError("sample dimension does not match the system")

    @property
    def L(self) -> int:
        return self.partition.L

    # -- residual passes ---------------------------------------------------

    def _residual_block(self, x: np.ndarray, q: int) -> np.ndarray:
        vals = self.system.residual(np.asarray(x, dtype=float),
                                    self.samples.samples[:q])
        vals = np.asarray(vals, dtype=float)
        if not np.all(np.isfinite(vals)):
            bad = int(np.flatnonzero(~np.isfinite(vals).all(axis=1))[0])
            raise FloatingPointError(
                f"non-finite residual at sample index {bad} (x={x})")
        self.eval_counter += q
        return vals

    def _prefix_means(self, x: np.ndarray, ell: int) -> tuple[np.ndarray, np.ndarray]:
        """(f^{l-1}(x), f^l(x)) from a single pass over the first q_l samples."""
        q_hi = self.partition.q[ell - 1]
        q_lo = self.partition.q[ell - 2] if ell >= 2 else 0
        vals = self._residual_block(x, q_hi)
        head = vals[:q_lo].sum(axis=0) / q_lo if q_lo > 0 else np.zeros(self.system.n)
        mean_hi = vals.sum(axis=0) / q_hi
        return head, mean_hi

    def sample_average(self, ell: int, x: np.ndarray) -> np.ndarray:
        """Cumulative group average f^l(x); f^0 is identically zero and free."""
        if not 0 <= ell <= self.L:
            raise ValueError(f"group index {ell} outside 0..{self.L}")
        if ell == 0:
            return np.zeros(self.system.n)
        q = self.partition.q[ell - 1]
        return self._residual_block(x, q).sum(axis=0) / q

    # -- blended map and derivatives --------------------------------------

    def blend(self, x: np.ndarray, t: float) -> np.ndarray:
        """d(x, t) on the segment containing t (one pass, q_l evaluations)."""
        ell = segment_of(t, self.schedule)
        th = theta(ell, t, self.schedule)
        f_lo, f_hi = self._prefix_means(x, ell)
        return (1.0 - th) * f_lo + th * f_hi

    def blend_deriv_t(self, x: np.ndarray, t: float) -> np.ndarray:
        """dd/dt = theta_l'(t) (f^l(x) - f^{l-1}(x)); exactly zero at nodes."""
        ell = segment_of(t, self.schedule)
        thp = theta_prime(ell, t, self.schedule)
        if thp == 0.0:
            return np.zeros(self.system.n)
        f_lo, f_hi = self._prefix_means(x, ell)
        return thp * (f_hi - f_lo)

    def blend_jac_x(self, x: np.ndarray, t: float) -> np.ndarray:
        """dd/dx: the same blend applied to the per-sample Jacobian means."""
        ell = segment_of(t, self.schedule)
        th = theta(ell, t, self.schedule)
        q_hi = self.partition.q[ell - 1]
        q_lo = self.partition.q[ell - 2] if ell >= 2 else 0
        jacs = np.asarray(self.system.jacobian(np.asarray(x, dtype=float),
                                               self.samples.samples[:q_hi]))
        self.jac_counter += q_hi
        n = self.system.n
        j_lo = jacs[:q_lo].sum(axis=0) / q_lo if q_lo > 0 else np.zeros((n, n))
        j_hi = jacs.sum(axis=0) / q_hi
        return (1.0 - th) * j_lo + th * j_hi


def check_coercivity(bm: BlendedMap, grid_density: int = 8,
                     max_samples: int = 200) -> dict:
    """Boundary diagnostic for the confinement condition.

    Evaluates (x - x0)^T f(x, xi) over a deterministic grid on the faces of
    the domain box and an evenly spaced subsample of the xi's.  A nonpositive
    minimum is a warning (the condition failed on the tested set), never an
    error.
    """
    sys_ = bm.system
    n = sys_.n
    lo, hi, x0 = sys_.box_lo, sys_.box_hi, sys_.x0
    axes = [np.linspace(lo[j], hi[j], grid_density) for j in range(n)]
    pts = []
    for face in range(n):
        for bound in (lo[face], hi[face]):
            grid_axes = [axes[j] if j != face else np.array([bound]) for j in range(n)]
            mesh = np.meshgrid(*grid_axes, indexing="ij")
            pts.append(np.stack([g.ravel() for g in mesh], axis=1))
    boundary = np.unique(np.concatenate(pts, axis=0), axis=0)

    step = max(1, bm.samples.N // max_samples)
    xis = bm.samples.samples[::step]
    best = np.inf
    arg = (None, None)
    for x in boundary:
        vals = np.asarray(sys_.residual(x, xis))  # (k, n)
        inner = vals @ (x - x0)
        k = int(np.argmin(inner))
        if inner[k] < best:
            best = float(inner[k])
            arg = (x.copy(), k * step)
    return {
        "min_inner_product": best,
        "argmin": arg,
        "warning": best <= 0.0,
        "boundary_points": len(boundary),
        "samples_tested": xis.shape[0],
    }
