import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from limitlbm.errors import DegenerateDensityError, DimensionMismatchError, DomainError
from limitlbm.grid import (
    PopulationField, init_from_macro, make_grid, node_coordinates, read_snapshot_binary,
    read_snapshot_csv, stream, write_snapshot_binary, write_snapshot_csv,
)
from limitlbm.lattice import d2q9, d3q19
from limitlbm.manufactured import taylor_green_2d, uniform_flow
from limitlbm.moments import macroscopic_moments
from limitlbm.orders import fit_slope
from limitlbm.scaling import make_scaling


def test_grid_geometry():
    g = make_grid(2, 10, 1.0)
    assert g.dx == pytest.approx(0.1) and g.dt == pytest.approx(0.01)
    assert make_grid(2, 20, 1.0).dt == pytest.approx(g.dt / 4)
    assert make_grid(3, 16, 2 * math.pi).dx == pytest.approx(2 * math.pi / 16)
    assert make_grid(3, 16, 1.0).shape == (16, 16, 16)


@pytest.mark.parametrize("args", [(2, 3, 1.0), (2, 8.5, 1.0), (2, 8, 0.0), (4, 8, 1.0)])
def test_grid_rejects(args):
    with pytest.raises(DomainError):
        make_grid(*args)


def _empty(grid, q):
    return PopulationField(grid, np.zeros((q,) + grid.shape))


def test_stream_moves_one_node():
    s = d2q9()
    g = make_grid(2, 6, 1.0)
    f = _empty(g, 9)
    f.data[1, 0, 0] = 1.0
    f.data[1, 5, 2] = 2.0
    out = stream(f, s)
    assert out.data[1, 1, 0] == 1.0
    assert out.data[1, 0, 2] == 2.0
    assert out.data[1].sum() == 3.0


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["d2q9", "d3q19"]), st.integers(4, 7), st.integers(0, 2**32 - 1))
def test_stream_is_permutation(name, N, seed):
    s = d2q9() if name == "d2q9" else d3q19()
    g = make_grid(s.d, N, 1.0)
    f = PopulationField(g, np.random.default_rng(seed).random((s.q,) + g.shape))
    out = stream(f, s)
    for i in range(s.q):
        assert np.array_equal(np.sort(out.data[i], axis=None), np.sort(f.data[i], axis=None))
    back = stream(out, s.negated())
    assert np.array_equal(back.data, f.data)


def test_stream_period_equals_N():
    s = d3q19()
    g = make_grid(3, 5, 1.0)
    f = PopulationField(g, np.random.default_rng(0).random((19,) + g.shape))
    out = f
    for _ in range(g.N):
        out = stream(out, s)
    assert np.array_equal(out.data, f.data)


def test_stream_workers_agree():
    s = d3q19()
    g = make_grid(3, 6, 1.0)
    f = PopulationField(g, np.random.default_rng(1).random((19,) + g.shape))
    assert np.array_equal(stream(f, s, workers=3).data, stream(f, s).data)


def test_dimension_mismatch():
    g = make_grid(2, 4, 1.0)
    with pytest.raises(DimensionMismatchError):
        stream(_empty(g, 9), d3q19())
    with pytest.raises(DimensionMismatchError):
        PopulationField(g, np.zeros((9, 4, 5)))


@pytest.mark.parametrize("mode", ["equilibrium", "chapman_enskog"])
def test_rest_state_init(mode):
    s = d3q19()
    g = make_grid(3, 4, 1.0)
    sc = make_scaling(0.1, g.dx)
    f = init_from_macro(g, s, sc, uniform_flow(3, 0.1), mode=mode)
    assert np.array_equal(f.data, np.broadcast_to(s.t[:, None, None, None], f.data.shape))


def test_equilibrium_init_recovers_flow():
    s = d2q9()
    g = make_grid(2, 16, 1.0)
    sc = make_scaling(0.02, g.dx)
    flow = taylor_green_2d(0.8, 1.0, 0.02)
    f = init_from_macro(g, s, sc, flow, t0=0.3, with_pressure=False)
    n, u = macroscopic_moments(f.data, s, sc)
    x = node_coordinates(g)
    assert np.allclose(n, 1.0, rtol=1e-13, atol=0)
    assert np.allclose(u, flow.u(0.3, x), rtol=0, atol=1e-13)


def test_ce_init_differs_by_order_two():
    s = d2q9()
    flow = taylor_green_2d(0.8, 1.0, 0.02)
    hs, diffs = [0.1, 0.05, 0.025], []
    for h in hs:
        g = make_grid(2, round(1 / h), 1.0)
        sc = make_scaling(0.02, h)
        a = init_from_macro(g, s, sc, flow, mode="equilibrium")
        b = init_from_macro(g, s, sc, flow, mode="chapman_enskog")
        diffs.append(np.max(np.abs(a.data - b.data)))
    assert fit_slope(hs, diffs) >= 1.8


def test_init_rejects_bad_input():
    s = d2q9()
    g = make_grid(2, 8, 1.0)
    flow = taylor_green_2d(0.8, 1.0, 0.02)
    with pytest.raises(DomainError):
        init_from_macro(g, s, make_scaling(0.02, g.dx), flow, mode="random")
    with pytest.raises(DomainError):
        init_from_macro(g, s, make_scaling(0.02, 0.5), flow)
    with pytest.raises(DimensionMismatchError):
        init_from_macro(g, d3q19(), make_scaling(0.02, g.dx), flow)
    with pytest.raises(DegenerateDensityError):
        init_from_macro(g, s, make_scaling(0.02, g.dx), taylor_green_2d(40.0, 1.0, 0.02))


def test_snapshot_round_trips(tmp_path):
    g = make_grid(2, 4, 1.0)
    f = PopulationField(g, np.random.default_rng(2).random((9,) + g.shape) / 7)
    path = write_snapshot_csv(f, tmp_path / "f.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "ix,iy," + ",".join(f"f{i}" for i in range(9))
    assert lines[1].startswith("0,0,") and lines[2].startswith("0,1,")
    assert np.array_equal(read_snapshot_csv(path, g).data, f.data)
    bin_path = write_snapshot_binary(f, tmp_path / "f.bin")
    assert np.array_equal(read_snapshot_binary(bin_path, g, 9).data, f.data)
