import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import brentq

from grsaa.homotopy import (HomotopyMap, solve_start_y, transform,
                            transform_derivs)
from grsaa.sampling import draw_samples, partition_uniform
from grsaa.saa import BlendedMap
from grsaa.schedule import make_schedule
from grsaa import problems as P


def plain_map(n=3, N=120, L=4, seed=0, alpha=None):
    inst = P.sin_instance(n)
    samples = draw_samples(inst.distribution, N, seed=seed)
    bm = BlendedMap(system=inst.system, samples=samples,
                    partition=partition_uniform(N, L),
                    schedule=make_schedule("uniform", L))
    return HomotopyMap(kind="plain", blended=bm, alpha=alpha)


def kkt_map(problem="svi", n=2, N=120, L=4, seed=0):
    inst = P.get_instance(problem, n)
    samples = draw_samples(inst.distribution, N, seed=seed)
    bm = BlendedMap(system=inst.system, samples=samples,
                    partition=partition_uniform(N, L),
                    schedule=make_schedule("uniform", L))
    return HomotopyMap(kind="smoothed_kkt", blended=bm,
                       B=inst.B, b=inst.b, kappa0=inst.kappa0)


# -- plain map ---------------------------------------------------------------

def test_plain_start_is_exact_zero_without_sampling():
    hm = plain_map()
    x0 = hm.start_point()
    before = hm.blended.eval_counter
    assert np.array_equal(hm.eval(x0, 1.0), np.zeros(3))
    assert hm.blended.eval_counter == before  # t=1 short-circuits sampling


def test_plain_t1_is_translation():
    hm = plain_map()
    x = np.array([0.4, -0.7, 1.2])
    assert np.array_equal(hm.eval(x, 1.0), x - hm.x0)


def test_plain_t0_is_full_saa_map():
    hm = plain_map()
    x = np.array([0.3, 0.1, -0.2])
    full = hm.blended.system.residual(x, hm.blended.samples.samples).mean(axis=0)
    assert np.allclose(hm.eval(x, 0.0), full, rtol=0, atol=1e-15)


def test_alpha_never_changes_the_endpoints():
    base = plain_map(alpha=None)
    bent = plain_map(alpha=np.array([2.0, -1.0, 0.5]))
    x = np.array([0.6, -0.2, 0.9])
    for t in (0.0, 1.0):
        assert np.array_equal(base.eval(x, t), bent.eval(x, t))
    # but it does perturb the interior of the path
    assert not np.allclose(base.eval(x, 0.5), bent.eval(x, 0.5))


def test_plain_hand_value_single_sample():
    # one sample, L=1: h = (1-t) theta(t) f(x, xi) + t (x - x0), x0 = 0
    hm = plain_map(n=1, N=1, L=1, seed=4)
    xi = hm.blended.samples.samples[0, 0]
    x = np.array([0.7])
    t = 0.25
    th = np.sin((1.0 - t) * np.pi / 2.0) ** 2
    f = 0.7 - 5.0 * np.sin(0.7 + xi)
    expect = (1.0 - t) * th * f + t * 0.7
    assert hm.eval(x, t)[0] == pytest.approx(expect, rel=1e-14)


def test_jac_plain_matches_finite_differences():
    hm = plain_map(alpha=np.array([0.3, -0.8, 0.1]))
    rng = np.random.default_rng(7)
    nodes = np.asarray(hm.blended.schedule.nodes)
    checked = 0
    while checked < 60:
        x = rng.uniform(-1, 1, 3)
        t = rng.uniform(0.02, 0.98)
        if np.min(np.abs(nodes - t)) < 1e-3:
            continue
        J = hm.jac(x, t)
        assert J.shape == (3, 4)
        h = 1e-6
        for j in range(3):
            xp, xm = x.copy(), x.copy()
            xp[j] += h
            xm[j] -= h
            fd = (hm.eval(xp, t) - hm.eval(xm, t)) / (2 * h)
            assert np.allclose(J[:, j], fd, rtol=1e-5, atol=1e-7)
        fd_t = (hm.eval(x, t + h) - hm.eval(x, t - h)) / (2 * h)
        assert np.allclose(J[:, 3], fd_t, rtol=1e-5, atol=1e-6)
        checked += 1


# -- complementarity transform ----------------------------------------------

def test_transform_product_identity():
    y = np.array([-3.0, -0.5, 0.0, 0.5, 3.0, 1e8, -1e8])
    for t in (1e-8, 1e-3, 0.5, 1.0):
        for kappa0 in (2, 3):
            neg, pos = transform(y, t, kappa0)
            assert np.allclose(neg * pos, t ** kappa0, rtol=1e-12, atol=0)


def test_transform_limit_at_t0():
    y = np.array([-2.0, -0.1, 0.0, 0.1, 2.0])
    neg, pos = transform(y, 0.0, 2)
    assert np.array_equal(neg, np.maximum(-y, 0.0) ** 2)
    assert np.array_equal(pos, np.maximum(y, 0.0) ** 2)


def test_transform_rejects_bad_args():
    with pytest.raises(ValueError):
        transform(np.zeros(1), -0.1, 2)
    with pytest.raises(ValueError):
        transform(np.zeros(1), 0.5, 1)


def test_transform_no_cancellation_for_large_y():
    # (sqrt(y^2 + 4t) - y)/2 evaluated naively at y = 1e12 is pure roundoff;
    # the factored form keeps full relative accuracy: a_neg ~ t / y
    (neg,), (pos,) = transform(np.array([1e12]), 1.0, 2)
    assert neg == pytest.approx(1e-24, rel=1e-12)
    assert pos == pytest.approx(1e24, rel=1e-12)


def test_transform_derivs_match_finite_differences():
    rng = np.random.default_rng(11)
    for kappa0 in (2, 3):
        y = rng.uniform(-4, 4, 40)
        for t in (1e-4, 0.2, 0.9):
            tr = transform_derivs(y, t, kappa0)
            h = 1e-7
            neg_p, pos_p = transform(y + h, t, kappa0)
            neg_m, pos_m = transform(y - h, t, kappa0)
            assert np.allclose(tr["dneg_dy"], (neg_p - neg_m) / (2 * h),
                               rtol=1e-5, atol=1e-8)
            assert np.allclose(tr["dpos_dy"], (pos_p - pos_m) / (2 * h),
                               rtol=1e-5, atol=1e-8)
            ht = min(1e-7, t / 2)
            neg_p, pos_p = transform(y, t + ht, kappa0)
            neg_m, pos_m = transform(y, t - ht, kappa0)
            assert np.allclose(tr["dneg_dt"], (neg_p - neg_m) / (2 * ht),
                               rtol=1e-4, atol=1e-6)
            assert np.allclose(tr["dpos_dt"], (pos_p - pos_m) / (2 * ht),
                               rtol=1e-4, atol=1e-6)


@given(y=st.floats(-50.0, 50.0), t=st.floats(1e-10, 1.0),
       kappa0=st.integers(2, 4))
def test_transform_identity_property(y, t, kappa0):
    neg, pos = transform(np.array([y]), t, kappa0)
    assert neg[0] * pos[0] == pytest.approx(t ** kappa0, rel=1e-10)


# -- start multiplier --------------------------------------------------------

def test_solve_start_y_matches_bisection_oracle():
    B = np.vstack([np.eye(2), -np.eye(2)])
    b = np.full(4, 10.0)
    x0 = np.array([0.3, -1.2])
    for kappa0 in (2, 3):
        y = solve_start_y(B, b, x0, kappa0, t=1.0)
        c = b - B @ x0
        for k in range(4):
            root = brentq(
                lambda v: transform(np.array([v]), 1.0, kappa0)[1][0] - c[k],
                -100.0, 100.0, xtol=1e-14)
            assert y[k] == pytest.approx(root, abs=1e-12)
        _, pos = transform(y, 1.0, kappa0)
        assert np.allclose(pos, c, rtol=1e-13)


def test_solve_start_y_rejects_boundary_start():
    B = np.ones((1, 1))
    with pytest.raises(ValueError, match="interior"):
        solve_start_y(B, np.array([1.0]), np.array([1.0]), 2)


# -- smoothed-KKT map --------------------------------------------------------

def test_kkt_start_point_is_a_root_at_t1():
    for problem, n in (("svi", 2), ("market", 3)):
        hm = kkt_map(problem, n)
        u1 = hm.start_point()
        r = hm.eval(u1, 1.0)
        assert np.linalg.norm(r, np.inf) <= 1e-12
        # block 1 vanishes identically at t = 1, not just numerically
        assert np.array_equal(r[:hm.n], np.zeros(hm.n))


def test_kkt_dimensions():
    hm = kkt_map("svi", 2)
    assert (hm.n, hm.M, hm.dim) == (2, 4, 6)
    hm = kkt_map("market", 3)
    assert (hm.n, hm.M, hm.dim) == (3, 6, 9)


def test_kkt_requires_constraints():
    bm = plain_map().blended
    with pytest.raises(ValueError):
        HomotopyMap(kind="smoothed_kkt", blended=bm)
    with pytest.raises(ValueError):
        HomotopyMap(kind="spiral", blended=bm)


def test_kkt_zero_carries_feasibility_and_complementarity():
    # at a root of block 2, slack = pos(y, t) >= 0 so B x <= b, and the
    # multiplier neg(y, t) times the slack equals t^kappa0 componentwise
    hm = kkt_map("svi", 1, N=40, L=2)
    t = 0.3
    x = np.array([0.8])
    # pick y solving block 2 exactly, then check the advertised structure
    c = hm.b - hm.B @ x
    y = c ** (1.0 / hm.kappa0) - t / c ** (1.0 / hm.kappa0)
    neg, pos = transform(y, t, hm.kappa0)
    assert np.allclose(hm.B @ x + pos, hm.b, rtol=1e-13)
    assert np.all(pos >= 0) and np.all(neg >= 0)
    assert np.allclose(neg * pos, t ** hm.kappa0, rtol=1e-12)


def test_jac_kkt_structure_and_finite_differences():
    hm = kkt_map("svi", 2, N=80, L=3)
    rng = np.random.default_rng(3)
    nodes = np.asarray(hm.blended.schedule.nodes)
    checked = 0
    while checked < 40:
        u = np.concatenate([rng.uniform(-1, 1, 2), rng.uniform(-2, 2, 4)])
        t = rng.uniform(0.02, 0.98)
        if np.min(np.abs(nodes - t)) < 1e-3:
            continue
        J = hm.jac(u, t)
        assert J.shape == (6, 7)
        assert np.array_equal(J[2:, :2], hm.B)  # block 2 is linear in x
        h = 1e-6
        for j in range(6):
            up, um = u.copy(), u.copy()
            up[j] += h
            um[j] -= h
            fd = (hm.eval(up, t) - hm.eval(um, t)) / (2 * h)
            assert np.allclose(J[:, j], fd, rtol=1e-5, atol=1e-6)
        fd_t = (hm.eval(u, t + h) - hm.eval(u, t - h)) / (2 * h)
        assert np.allclose(J[:, 6], fd_t, rtol=1e-5, atol=1e-5)
        checked += 1
