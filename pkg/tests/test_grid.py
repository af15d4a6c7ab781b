import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nigrid.grid import (BusIndexError, BusParams, DisconnectedGraphError, DuplicateEdgeError, LineParams,
                         NominalFrequency, PowerGrid, SelfLoopError, balance_steady_state, build_topology,
                         laplacian_max_eigenvalue, steady_state_residual)

from support import random_topology


def direct_laplacian(n, pairs):
    L = np.zeros((n, n))
    for i, j in pairs:
        L[i - 1, i - 1] += 1
        L[j - 1, j - 1] += 1
        L[i - 1, j - 1] -= 1
        L[j - 1, i - 1] -= 1
    return L


def test_star_incidence():
    t = build_topology(4, [(1, 2), (1, 3), (1, 4)])
    np.testing.assert_array_equal(t.incidence, [[1, 1, 1], [-1, 0, 0], [0, -1, 0], [0, 0, -1]])
    np.testing.assert_array_equal(t.adjacency, [[0, 1, 1, 1], [1, 0, 0, 0], [1, 0, 0, 0], [1, 0, 0, 0]])


def test_single_bus_without_lines():
    t = build_topology(1, [])
    assert t.incidence.shape == (1, 0)
    np.testing.assert_array_equal(t.adjacency, [[0]])
    assert laplacian_max_eigenvalue(t) == 0.0


def test_triangle_laplacian():
    t = build_topology(3, [(1, 2), (2, 3), (1, 3)])
    np.testing.assert_array_equal(t.laplacian, [[2, -1, -1], [-1, 2, -1], [-1, -1, 2]])


def test_orientation_follows_listing():
    t = build_topology(2, [LineParams((2, 1))])
    np.testing.assert_array_equal(t.incidence[:, 0], [-1, 1])


@pytest.mark.parametrize("n, lines, exc", [
    (3, [(1, 2), (2, 1), (2, 3)], DuplicateEdgeError),
    (3, [(1, 2), (1, 2), (2, 3)], DuplicateEdgeError),
    (2, [(1, 1), (1, 2)], SelfLoopError),
    (4, [(1, 2), (3, 4)], DisconnectedGraphError),
    (2, [], DisconnectedGraphError),
    (3, [(1, 2), (2, 5)], BusIndexError),
    (3, [(0, 1), (1, 2)], BusIndexError),
    (0, [], BusIndexError),
])
def test_validation_errors(n, lines, exc):
    with pytest.raises(exc):
        build_topology(n, lines)


def test_error_classes_are_distinct():
    classes = {DuplicateEdgeError, SelfLoopError, DisconnectedGraphError, BusIndexError}
    assert len(classes) == 4
    assert all(issubclass(c, ValueError) for c in classes)


@pytest.mark.parametrize("n, lines, expected", [
    (4, [(1, 2), (1, 3), (1, 4)], 4.0),
    (2, [(1, 2)], 2.0),
    (1, [], 0.0),
    (3, [(1, 2), (2, 3), (1, 3)], 3.0),
])
def test_laplacian_max_eigenvalue(n, lines, expected):
    assert laplacian_max_eigenvalue(build_topology(n, lines)) == pytest.approx(expected, rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 12))
def test_random_graph_properties(seed, n):
    rng = np.random.default_rng(seed)
    t = random_topology(rng, n)
    Q = t.incidence
    np.testing.assert_array_equal(Q.sum(axis=0), 0)
    assert np.all((Q == 1).sum(axis=0) == 1) and np.all((Q == -1).sum(axis=0) == 1)
    np.testing.assert_array_equal(Q.T @ np.ones(n), 0)
    np.testing.assert_array_equal(t.adjacency, t.adjacency.T)
    assert not np.diag(t.adjacency).any()
    np.testing.assert_array_equal(t.laplacian, direct_laplacian(n, t.pairs))
    lam = laplacian_max_eigenvalue(t)
    assert 0 <= lam <= 2 * t.degrees.max() + 1e-12


def test_residual_two_bus_balance():
    t = build_topology(2, [LineParams((1, 2), 1.0, math.pi / 6)])
    bus = BusParams(1, 1.0, 0.0, 1.0, p_mech_bar=0.7, p_load_bar=0.4, p_storage_bar=0.2)
    assert steady_state_residual(bus, t, 100.0) == pytest.approx(0.0, abs=1e-15)
    # bus 2 sees the reverse flow
    bus2 = BusParams(2, 1.0, 0.0, 1.0, p_load_bar=0.5)
    assert steady_state_residual(bus2, t, 100.0) == pytest.approx(0.0, abs=1e-15)


def test_residual_null_equilibrium():
    t = build_topology(2, [(1, 2)])
    assert steady_state_residual(BusParams(1, 1.0, 0.0, 1.0), t, 314.0) == 0.0


def test_residual_star_angles():
    # psi_bar = pi/6 on all three lines, so the hub must export 3 * 0.5 * p_max
    th = (math.pi / 3, math.pi / 6, math.pi / 6, math.pi / 6)
    buses = [BusParams(i + 1, 1.0, 0.0, 1.0, th[i]) for i in range(4)]
    g = PowerGrid.build(buses, [(1, 2, 2.0), (1, 3, 2.0), (1, 4, 2.0)], 1.0, balance=False)
    assert g.topology.psi_bar == pytest.approx([math.pi / 6] * 3, abs=1e-15)
    hub = BusParams(1, 1.0, 0.0, 1.0, th[0], p_mech_bar=3 * 2.0 * 0.5)
    assert steady_state_residual(hub, g.topology, 1.0) == pytest.approx(0.0, abs=1e-14)
    assert steady_state_residual(buses[0], g.topology, 1.0) == pytest.approx(3.0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 9))
def test_residuals_sum_without_line_terms(seed, n):
    rng = np.random.default_rng(seed)
    t = random_topology(rng, n)
    theta = rng.uniform(-1, 1, n)
    lines = [LineParams(p, rng.uniform(0.1, 3), theta[p[0] - 1] - theta[p[1] - 1]) for p in t.pairs]
    t = build_topology(n, lines)
    buses = [BusParams(i + 1, 1.0, rng.uniform(0, 2), 1.0, theta[i], *rng.uniform(-1, 1, 3))
             for i in range(n)]
    w0 = 2 * math.pi * 50
    total = sum(steady_state_residual(b, t, w0) for b in buses)
    direct = sum(b.d_damping * w0 - (b.p_mech_bar + b.p_storage_bar - b.p_load_bar) for b in buses)
    assert total == pytest.approx(direct, rel=1e-12, abs=1e-9)


def test_balance_solves_mechanical_power():
    rng = np.random.default_rng(3)
    t = random_topology(rng, 6)
    theta = rng.uniform(-1, 1, 6)
    t = build_topology(6, [LineParams(p, 1.5, theta[p[0] - 1] - theta[p[1] - 1]) for p in t.pairs])
    buses = [BusParams(i + 1, 1.0, 0.3, 1.0, theta[i], p_load_bar=0.2) for i in range(6)]
    balanced = balance_steady_state(buses, t, NominalFrequency.from_hz(60))
    assert max(abs(steady_state_residual(b, t, NominalFrequency.from_hz(60))) for b in balanced) < 1e-12


def test_grid_rejects_inconsistent_psi():
    buses = [BusParams(1, 1, 1, 1, 0.3), BusParams(2, 1, 1, 1, 0.0)]
    t = build_topology(2, [LineParams((1, 2), 1.0, 0.1)])
    with pytest.raises(ValueError, match="psi_bar"):
        PowerGrid(t, tuple(buses), NominalFrequency(1.0))


def test_bus_params_validation():
    with pytest.raises(ValueError):
        BusParams(1, 0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        BusParams(1, 1.0, -1.0, 1.0)
    with pytest.raises(BusIndexError):
        BusParams(0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        LineParams((1, 2), 0.0)


def test_nominal_frequency():
    f = NominalFrequency.from_hz(50)
    assert f.omega0 == pytest.approx(100 * math.pi)
    assert f.hz == pytest.approx(50)
    with pytest.raises(ValueError):
        NominalFrequency(0.0)


def test_inertia_constant_conversion():
    w0 = 2 * math.pi * 50
    b = BusParams.from_inertia_constant(1, 5.0, 2.0, 1.0, w0)
    assert b.m_inertia == pytest.approx(10 / w0)
    assert b.d_damping == pytest.approx(2 / w0)
