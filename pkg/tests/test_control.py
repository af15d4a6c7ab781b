import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nigrid.control import (ClosedLoopController, EdgeController, assemble_closed_loop, bus_inputs,
                            controller_step, distributed_bus_inputs, edge_outputs)
from nigrid.grid import build_topology
from nigrid.lti import block_diag
from nigrid.ni import classify_ni, theorem1_certificate

from support import star_controller, star_grid, plant_ss, plant_tf, random_controller, random_topology

STAR = build_topology(4, [(1, 2), (1, 3), (1, 4)])


def test_edge_outputs_examples():
    np.testing.assert_array_equal(edge_outputs(np.full(4, 2.5), STAR), 0)
    np.testing.assert_array_equal(edge_outputs([1, 0, 0, 0], STAR), [1, 1, 1])
    th = [math.pi / 3, math.pi / 6, math.pi / 6, math.pi / 6]
    np.testing.assert_allclose(edge_outputs(th, STAR), [math.pi / 6] * 3, rtol=1e-15)
    with pytest.raises(ValueError):
        edge_outputs([1, 2, 3], STAR)


def test_bus_inputs_examples():
    np.testing.assert_array_equal(bus_inputs([0, 0, 0], STAR), 0)
    np.testing.assert_array_equal(bus_inputs([1, 0, 0], STAR), [1, -1, 0, 0])
    with pytest.raises(ValueError):
        bus_inputs([1, 2], STAR)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 9))
def test_bus_inputs_balanced(seed, n):
    rng = np.random.default_rng(seed)
    t = random_topology(rng, n)
    u = bus_inputs(rng.normal(size=t.n_edges), t)
    assert abs(u.sum()) < 1e-12


def test_controller_step():
    c = star_controller(star_grid())
    zdot, ut = controller_step(c, np.zeros(3), np.zeros(3))
    np.testing.assert_array_equal(zdot, 0)
    np.testing.assert_array_equal(ut, 0)
    _, ut = controller_step(c, [1.0, 0.0, 0.0], np.zeros(3))
    assert ut[0] == pytest.approx(0.4)


def test_controller_lag_settles_to_dc_gain():
    # closed form z(t) = 1 - exp(-t/tau) for a held unit input
    c = star_controller(star_grid())
    z = np.zeros(3)
    dt = 0.01
    for _ in range(20000):
        k1, _ = controller_step(c, z, np.ones(3))
        k2, _ = controller_step(c, z + 0.5 * dt * k1, np.ones(3))
        k3, _ = controller_step(c, z + 0.5 * dt * k2, np.ones(3))
        k4, _ = controller_step(c, z + dt * k3, np.ones(3))
        z = z + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    np.testing.assert_allclose(z, 1 - math.exp(-200 / 10), rtol=1e-9)
    _, ut = controller_step(c, z, np.ones(3))
    np.testing.assert_allclose(ut, [0.4, 0.5, 0.3], rtol=1e-8)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 8))
def test_distributed_equals_centralized(seed, n):
    rng = np.random.default_rng(seed)
    c = random_controller(rng, random_topology(rng, n))
    z = rng.normal(size=c.n_edges)
    central = bus_inputs(c.gains * z, c.topology)
    np.testing.assert_allclose(distributed_bus_inputs(c, z), central, rtol=0, atol=1e-14)


def test_edge_controllers_are_sni():
    rng = np.random.default_rng(5)
    c = random_controller(rng, random_topology(rng, 6))
    assert classify_ni(c.transfer_matrix()).is_sni


def test_edge_controller_validation():
    with pytest.raises(ValueError):
        EdgeController((1, 2), 0.0, 1.0)
    with pytest.raises(ValueError):
        EdgeController((1, 2), 1.0, -1.0)


def test_virtual_line_supergraph():
    g = star_grid()
    ctrls = [EdgeController((1, j), 0.2, 10.0) for j in (2, 3, 4)]
    with pytest.raises(ValueError, match="virtual"):
        ClosedLoopController.on(4, ctrls + [EdgeController((2, 3), 0.2, 10.0)], g.topology)
    c = ClosedLoopController.on(4, ctrls + [EdgeController((2, 3), 0.2, 10.0, virtual=True)], g.topology)
    assert c.n_edges == 4 and c.incidence.shape == (4, 4)
    # certificates use the controller's incidence; physical lines are untouched
    assert g.topology.n_edges == 3
    cert = theorem1_certificate(plant_tf(g).congruence(c.incidence), c.transfer_matrix())
    assert cert.holds


def test_assemble_closed_loop_star():
    g = star_grid()
    cl = assemble_closed_loop(plant_ss(g), star_controller(g))
    assert cl.n_states == 11
    assert np.max(np.linalg.eigvals(cl.A).real) < 0


def test_assemble_closed_loop_zero_gain_block_triangular():
    g = star_grid()
    c = star_controller(g).scaled(1e-300)
    cl = assemble_closed_loop(plant_ss(g), c)
    assert np.abs(cl.A[:8, 8:]).max() < 1e-290


def test_assembled_loop_matches_manual_interconnection():
    g = star_grid()
    c = star_controller(g)
    P = plant_ss(g)
    Q = c.incidence
    K = c.state_space()
    manual = np.block([[P.A, P.B @ Q @ K.C], [K.B @ Q.T @ P.C, K.A]])
    np.testing.assert_allclose(assemble_closed_loop(P, c).A, manual)
