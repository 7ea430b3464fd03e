"""Benchmark problems: a CES market equilibrium, the sin system, and a
box-constrained stochastic variational inequality.

Each problem supplies a batched residual f(x, xi) and analytic x-Jacobian,
a domain box with an interior reference point, and (where one exists) an
independent ground-truth oracle built on the analytic expectation of the
residual.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .homotopy import HomotopyMap
from .newton import damped_newton
from .saa import BlendedMap, StochasticSystem
from .sampling import Partition, SampleSet, UniformBox
from .schedule import NodeSchedule

__all__ = [
    "ProblemInstance",
    "market_residual", "market_jacobian", "market_instance", "market_verify",
    "sin_residual", "sin_jacobian", "sin_instance",
    "sin_expectation", "sin_expectation_jac",
    "svi_residual", "svi_jacobian", "svi_instance",
    "svi_expectation", "svi_expectation_jac",
    "oracle_solve", "build_homotopy", "get_instance",
]

log = logging.getLogger(__name__)

# substitution parameters within this distance of 1 are clipped: the CES
# exponent 1/(xi - 1) diverges there
_XI_CLIP = 1e-6


@dataclass(frozen=True)
class ProblemInstance:
    name: str
    system: StochasticSystem
    distribution: UniformBox
    B: np.ndarray | None = None
    b: np.ndarray | None = None
    kappa0: int = 2

    @property
    def constrained(self) -> bool:
        return self.B is not None

    @property
    def default_N(self) -> int:
        return 10 ** 4


def build_homotopy(inst: ProblemInstance, samples: SampleSet,
                   partition: Partition, schedule: NodeSchedule,
                   alpha: np.ndarray | None = None) -> HomotopyMap:
    bm = BlendedMap(system=inst.system, samples=samples,
                    partition=partition, schedule=schedule)
    if inst.constrained:
        return HomotopyMap(kind="smoothed_kkt", blended=bm, alpha=alpha,
                           B=inst.B, b=inst.b, kappa0=inst.kappa0)
    return HomotopyMap(kind="plain", blended=bm, alpha=alpha)


# ---------------------------------------------------------------------------
# market equilibrium (CES economy, three goods, two firms)
# ---------------------------------------------------------------------------

# CES weight ratios entering the demand denominators, row i column j
_W_RATIO = np.array([
    [1.0, 2.0 / 3.0, 2.0],
    [3.0 / 2.0, 1.0, 3.0],
    [1.0 / 2.0, 1.0 / 3.0, 1.0],
])
_LOG_W = np.log(_W_RATIO)

MARKET_A = np.array([
    [-1.5, 1.0, 1.0],
    [-1.0, -77.0 / 27.0, 11.0 / 9.0],
])
MARKET_B = np.vstack([MARKET_A, -np.eye(3), np.ones((1, 3))])
MARKET_b = np.array([0.0, 0.0, 0.0, 0.0, 0.0, 1.0])
MARKET_SOLUTION = np.array([0.40, 0.45, 0.15])


def _market_parts(p: np.ndarray, xis: np.ndarray):
    """Shared pieces of the CES demand, computed in log space.

    The transformed prices p_i^(1/(xi-1)) overflow for xi near 1, so demand
    shares are assembled as exp(e*l_i - logsumexp_j(e*logW_ij + (1+e)*l_j))
    with l = log p, which stays bounded for all xi in [-1, 1).
    """
    p = np.asarray(p, dtype=float)
    xi = np.asarray(xis, dtype=float).reshape(-1)
    n_clip = int(np.count_nonzero(xi > 1.0 - _XI_CLIP))
    if n_clip:
        log.warning("clipped %d CES substitution sample(s) near xi=1", n_clip)
        xi = np.minimum(xi, 1.0 - _XI_CLIP)
    with np.errstate(invalid="ignore", divide="ignore"):
        l = np.log(p)  # nan for p <= 0 -> rejected upstream as non-finite
    e = 1.0 / (xi - 1.0)  # (q,)
    # terms[k, i, j] = e_k * logW_ij + (1 + e_k) * l_j
    terms = e[:, None, None] * _LOG_W[None, :, :] \
        + (1.0 + e)[:, None, None] * l[None, None, :]
    tmax = terms.max(axis=2, keepdims=True)
    expt = np.exp(terms - tmax)
    sumexp = expt.sum(axis=2)
    lse = tmax[:, :, 0] + np.log(sumexp)  # (q, 3)
    share = np.exp(e[:, None] * l[None, :] - lse)  # (q, 3)
    softmax = expt / sumexp[:, :, None]  # (q, 3, 3)
    return p, e, share, softmax


def market_residual(p: np.ndarray, xis: np.ndarray) -> np.ndarray:
    """Excess demand f(p, xi) = (p.w) * (p_1/g_1, p_2/g_2, p_3/g_3), w = 1."""
    p, _, share, _ = _market_parts(p, xis)
    return p.sum() * share


def market_jacobian(p: np.ndarray, xis: np.ndarray) -> np.ndarray:
    p, e, share, softmax = _market_parts(p, xis)
    S = p.sum()
    q = share.shape[0]
    eye = np.eye(3)
    # d share_i / d p_j = share_i * (e d_ij - (1+e) softmax_ij) / p_j
    dshare = share[:, :, None] * (
        e[:, None, None] * eye[None, :, :]
        - (1.0 + e)[:, None, None] * softmax) / p[None, None, :]
    return share[:, :, None] + S * dshare


def market_instance() -> ProblemInstance:
    system = StochasticSystem(
        n=3, m=1,
        residual=lambda p, xis: market_residual(p, xis),
        jacobian=lambda p, xis: market_jacobian(p, xis),
        box_lo=np.full(3, 1e-3), box_hi=np.ones(3),
        # strictly interior in {p > 0, Ap < 0, e.p < 1}; the equal-price point
        # violates the first zero-profit row and is not admissible
        x0=np.array([0.40, 0.30, 0.10]),
        name="market")
    return ProblemInstance(name="market", system=system,
                           distribution=UniformBox.scalar(-1.0, 1.0),
                           B=MARKET_B, b=MARKET_b, kappa0=2)


def market_verify(p: np.ndarray, bm: BlendedMap, tol: float = 1e-8) -> dict:
    """Check a candidate price vector against the stationarity conditions at
    the full-sample level: feasibility of B p <= b and existence of
    multipliers z >= 0 on the active rows with f^L(p) = B^T z."""
    p = np.asarray(p, dtype=float)
    slack = MARKET_b - MARKET_B @ p
    feasible = bool(np.all(slack >= -tol))
    active = slack <= tol
    fN = bm.sample_average(bm.L, p)
    if active.any():
        Bact = MARKET_B[active]
        z_act, *_ = np.linalg.lstsq(Bact.T, fN, rcond=None)
        stat_res = float(np.linalg.norm(Bact.T @ z_act - fN, np.inf))
        z_ok = bool(np.all(z_act >= -tol))
    else:
        z_act = np.zeros(0)
        stat_res = float(np.linalg.norm(fN, np.inf))
        z_ok = True
    return {"feasible": feasible, "active_rows": np.flatnonzero(active).tolist(),
            "multipliers": z_act, "multipliers_nonnegative": z_ok,
            "stationarity_residual": stat_res}


# ---------------------------------------------------------------------------
# sin system
# ---------------------------------------------------------------------------

def sin_residual(x: np.ndarray, xis: np.ndarray) -> np.ndarray:
    """f_i(x, xi) = x_i - 5 sin(i * sum(x) + xi)."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xis, dtype=float).reshape(-1)
    i_arr = np.arange(1, x.size + 1)
    phase = i_arr[None, :] * x.sum() + xi[:, None]  # (q, n)
    return x[None, :] - 5.0 * np.sin(phase)


def sin_jacobian(x: np.ndarray, xis: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xis, dtype=float).reshape(-1)
    n = x.size
    i_arr = np.arange(1, n + 1)
    phase = i_arr[None, :] * x.sum() + xi[:, None]
    coef = -5.0 * i_arr[None, :] * np.cos(phase)  # (q, n)
    return np.eye(n)[None, :, :] + coef[:, :, None] * np.ones((1, 1, n))


def sin_expectation(x: np.ndarray) -> np.ndarray:
    """E_xi f(x, xi) for xi ~ uniform[-1, 1]: x_i - 5 sin(1) sin(i sum(x))."""
    x = np.asarray(x, dtype=float)
    i_arr = np.arange(1, x.size + 1)
    return x - 5.0 * math.sin(1.0) * np.sin(i_arr * x.sum())


def sin_expectation_jac(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = x.size
    i_arr = np.arange(1, n + 1)
    coef = -5.0 * math.sin(1.0) * i_arr * np.cos(i_arr * x.sum())
    return np.eye(n) + coef[:, None] * np.ones((1, n))


def sin_instance(n: int) -> ProblemInstance:
    system = StochasticSystem(
        n=n, m=1, residual=sin_residual, jacobian=sin_jacobian,
        box_lo=np.full(n, -10.0), box_hi=np.full(n, 10.0),
        x0=np.zeros(n), name=f"sin_system(n={n})")
    return ProblemInstance(name="sin", system=system,
                           distribution=UniformBox.scalar(-1.0, 1.0))


# ---------------------------------------------------------------------------
# stochastic variational inequality over the box [-10, 10]^n
# ---------------------------------------------------------------------------

def svi_residual(x: np.ndarray, xis: np.ndarray) -> np.ndarray:
    """f_i(x, xi) = x_i - exp(cos(i * sum(x) + xi))."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xis, dtype=float).reshape(-1)
    i_arr = np.arange(1, x.size + 1)
    phase = i_arr[None, :] * x.sum() + xi[:, None]
    return x[None, :] - np.exp(np.cos(phase))


def svi_jacobian(x: np.ndarray, xis: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xis, dtype=float).reshape(-1)
    n = x.size
    i_arr = np.arange(1, n + 1)
    phase = i_arr[None, :] * x.sum() + xi[:, None]
    coef = np.exp(np.cos(phase)) * np.sin(phase) * i_arr[None, :]  # (q, n)
    return np.eye(n)[None, :, :] + coef[:, :, None] * np.ones((1, 1, n))


def _exp_cos_mean(a: float) -> float:
    """(1/2) integral_{-1}^{1} exp(cos(a + xi)) dxi by adaptive quadrature."""
    val, _ = quad(lambda s: math.exp(math.cos(a + s)), -1.0, 1.0,
                  epsabs=1e-13, epsrel=1e-13)
    return 0.5 * val


def _exp_cos_mean_deriv(a: float) -> float:
    val, _ = quad(lambda s: -math.sin(a + s) * math.exp(math.cos(a + s)),
                  -1.0, 1.0, epsabs=1e-13, epsrel=1e-13)
    return 0.5 * val


def svi_expectation(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    s = x.sum()
    return x - np.array([_exp_cos_mean(i * s) for i in range(1, x.size + 1)])


def svi_expectation_jac(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = x.size
    s = x.sum()
    coef = np.array([-i * _exp_cos_mean_deriv(i * s) for i in range(1, n + 1)])
    return np.eye(n) + coef[:, None] * np.ones((1, n))


def svi_instance(n: int) -> ProblemInstance:
    """Box-constrained SVI as a smoothed-KKT instance.

    Constraint rows are [I; -I] x <= (10e; 10e), the box itself.  Internally
    the kernel's orientation y = -w is used, so the multipliers of the
    stated system are neg(y) and the slacks are pos(y).
    """
    system = StochasticSystem(
        n=n, m=1, residual=svi_residual, jacobian=svi_jacobian,
        box_lo=np.full(n, -10.0), box_hi=np.full(n, 10.0),
        x0=np.zeros(n), name=f"svi(n={n})")
    B = np.vstack([np.eye(n), -np.eye(n)])
    b = np.full(2 * n, 10.0)
    return ProblemInstance(name="svi", system=system,
                           distribution=UniformBox.scalar(-1.0, 1.0),
                           B=B, b=b, kappa0=2)


# ---------------------------------------------------------------------------
# ground-truth oracles
# ---------------------------------------------------------------------------

def oracle_solve(inst: ProblemInstance, start: np.ndarray,
                 tol: float = 1e-12) -> np.ndarray:
    """Solve the analytic-expectation system by damped Newton from `start`.

    Independent of the homotopy machinery: sin uses the closed-form
    expectation, svi a quadrature expectation.  The market problem has no
    analytic equilibrium oracle here; use market_verify instead.  Raises
    NewtonFailure when the oracle does not converge, which callers must
    surface as inconclusive rather than passed.
    """
    if inst.name == "sin":
        return damped_newton(sin_expectation, sin_expectation_jac, start, tol=tol)
    if inst.name == "svi":
        return damped_newton(svi_expectation, svi_expectation_jac, start, tol=tol)
    raise ValueError(f"no analytic-expectation oracle for problem {inst.name!r}")


def get_instance(name: str, n: int = 3) -> ProblemInstance:
    if name == "market":
        return market_instance()
    if name == "sin":
        return sin_instance(n)
    if name == "svi":
        return svi_instance(n)
    raise ValueError(f"unknown problem {name!r}")
