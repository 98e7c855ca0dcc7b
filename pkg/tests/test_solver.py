import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from limitlbm.equilibrium import equilibrium_lattice_units
from limitlbm.errors import DegenerateDensityError, DomainError, InstabilityError
from limitlbm.grid import PopulationField, init_from_macro, make_grid
from limitlbm.lattice import d2q9, d3q19
from limitlbm.manufactured import taylor_green_2d
from limitlbm.moments import lattice_moments
from limitlbm.scaling import make_scaling
from limitlbm.solver import MAX_STEPS, Observer, collide, run_until, step, step_count


def near_equilibrium(s, grid, seed, amp=0.05):
    rng = np.random.default_rng(seed)
    n = 1.0 + 0.1 * rng.uniform(-1, 1, grid.shape)
    u = 0.05 * rng.uniform(-1, 1, (s.d,) + grid.shape)
    eq = equilibrium_lattice_units(n, u, s)
    return PopulationField(grid, eq * (1.0 + amp * rng.uniform(-1, 1, eq.shape)))


def reference_step(f, s, omega):
    """Node-by-node collide and push, written as plainly as possible."""
    N, d = f.shape[1], s.d
    out = np.zeros_like(f)
    for node in itertools.product(range(N), repeat=d):
        pops = [f[(i,) + node] for i in range(s.q)]
        n = sum(pops)
        j = [sum(s.e[i, a] * pops[i] for i in range(s.q)) for a in range(d)]
        u = [ja / n for ja in j]
        usq = sum(ua * ua for ua in u)
        for i in range(s.q):
            eu = sum(s.e[i, a] * u[a] for a in range(d))
            eq = s.t[i] * n * (1 + 3 * eu + 4.5 * eu * eu - 1.5 * usq)
            post = pops[i] - omega * (pops[i] - eq)
            target = tuple((node[a] + s.e[i, a]) % N for a in range(d))
            out[(i,) + target] = post
    return out


def test_full_relaxation_gives_equilibrium():
    s = d3q19()
    sc = make_scaling(1 / 6, 0.1)
    assert sc.omega == 1.0
    f = s.t * (1 + 0.3 * np.random.default_rng(0).random(19))
    n, u = lattice_moments(f, s)
    assert np.array_equal(collide(f, s, sc), equilibrium_lattice_units(n, u, s))


def test_equilibrium_is_fixed_point():
    s = d3q19()
    sc = make_scaling(0.02, 0.1)
    eq = equilibrium_lattice_units(np.float64(1.2), np.array([0.05, -0.02, 0.01]), s)
    n, u = lattice_moments(eq, s)
    eq = equilibrium_lattice_units(n, u, s)
    out = collide(eq, s, sc)
    assert np.allclose(out, eq, rtol=1e-15, atol=0)


@settings(max_examples=300, deadline=None)
@given(arrays(np.float64, 19, elements=st.floats(0.01, 1.0)), st.floats(1e-3, 2.0))
def test_collision_conserves_and_interpolates(f, nu):
    s = d3q19()
    sc = make_scaling(nu, 0.1)
    out = collide(f, s, sc)
    n0, u0 = lattice_moments(f, s)
    n1, u1 = lattice_moments(out, s)
    assert abs(n1 - n0) <= 1e-13 * n0
    assert np.all(np.abs(n1 * u1 - n0 * u0) <= 1e-13 * n0)
    eq = equilibrium_lattice_units(n0, u0, s)
    # 1e-15 relative to the size of the terms being combined
    scale = np.max(np.abs(f)) + sc.omega * np.max(np.abs(eq))
    assert np.allclose(out, (1 - sc.omega) * f + sc.omega * eq, rtol=0, atol=1e-15 * scale)


def test_degenerate_node_reported():
    s = d2q9()
    g = make_grid(2, 8, 1.0)
    f = near_equilibrium(s, g, 0)
    f.data[:, 5, 3] = -f.data[:, 5, 3]
    for workers in (1, 3):
        with pytest.raises(DegenerateDensityError) as info:
            step(f, s, make_scaling(0.05, g.dx), workers)
        assert list(info.value.node) == [5, 3]


@pytest.mark.parametrize("make,N", [(d2q9, 5), (d3q19, 4)])
def test_step_matches_reference(make, N):
    s = make()
    g = make_grid(s.d, N, 1.0)
    sc = make_scaling(0.03, g.dx)
    f = near_equilibrium(s, g, 4)
    assert np.allclose(step(f, s, sc).data, reference_step(f.data, s, sc.omega), rtol=1e-14, atol=0)


def test_uniform_equilibrium_stays_put():
    s = d2q9()
    g = make_grid(2, 8, 1.0)
    sc = make_scaling(0.05, g.dx)
    eq = equilibrium_lattice_units(np.ones(g.shape), np.full((2,) + g.shape, 0.03), s)
    f = PopulationField(g, eq)
    for _ in range(50):
        f = step(f, s, sc)
    assert np.allclose(f.data, eq, rtol=1e-14, atol=0)


def test_conservation_over_many_steps():
    s = d2q9()
    g = make_grid(2, 16, 1.0)
    sc = make_scaling(0.02, g.dx)
    f = near_equilibrium(s, g, 7)
    mass0 = math.fsum(f.data.ravel())
    mom0 = [math.fsum((s.e[:, a, None] * f.data.reshape(9, -1)).ravel()) for a in range(2)]
    for _ in range(200):
        f = step(f, s, sc)
    assert abs(math.fsum(f.data.ravel()) - mass0) <= 1e-12 * mass0
    for a in range(2):
        assert abs(math.fsum((s.e[:, a, None] * f.data.reshape(9, -1)).ravel()) - mom0[a]) <= 1e-12


def test_workers_bitwise_identical():
    s = d3q19()
    g = make_grid(3, 8, 1.0)
    sc = make_scaling(0.05, g.dx)
    f = near_equilibrium(s, g, 9)
    a, b = f, f
    for _ in range(5):
        a = step(a, s, sc, workers=1)
        b = step(b, s, sc, workers=4)
    assert np.array_equal(a.data, b.data)


def test_step_count_rules():
    dt = 1 / 64**2
    assert step_count(0.0, dt) == 0
    assert step_count(7 * dt, dt) == 7
    assert step_count(0.25, 1 / 128**2) == 4 * step_count(0.25, 1 / 64**2)
    with pytest.raises(DomainError):
        step_count(-1.0, dt)
    with pytest.raises(DomainError):
        step_count(2.0 * MAX_STEPS, 1.0)


def test_run_until_zero_and_observers():
    s = d2q9()
    g = make_grid(2, 8, 1.0)
    sc = make_scaling(0.05, g.dx)
    f = near_equilibrium(s, g, 1)
    same, log = run_until(f, s, sc, 0.0)
    assert np.array_equal(same.data, f.data) and log == []
    seen = []
    _, log = run_until(f, s, sc, 7 * g.dt, [Observer(2, lambda k, t, fld: seen.append(k) or k, "k")])
    assert seen == [0, 2, 4, 6]
    assert [r.value for r in log] == seen
    assert log[-1].t == pytest.approx(6 * g.dt)


def test_blowup_guard():
    s = d2q9()
    g = make_grid(2, 8, 1.0)
    sc = make_scaling(0.05, g.dx)
    f = init_from_macro(g, s, sc, taylor_green_2d(0.8, 1.0, 0.05))
    with pytest.raises(InstabilityError) as info:
        run_until(f, s, sc, 10 * g.dt, check_every=1, blowup_factor=0.5)
    assert info.value.step == 1
