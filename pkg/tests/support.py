"""Random instance generators shared by the test modules."""
import math

import numpy as np

from nigrid.control import ClosedLoopController, EdgeController
from nigrid.grid import BusParams, PowerGrid, build_topology
from nigrid.lti import TFMatrix, block_diag, bus_plant_ss, bus_plant_tf


def random_edges(rng, n, extra_prob=0.3):
    """Random spanning tree plus extra edges, with random orientation."""
    order = rng.permutation(n) + 1
    edges = []
    for k in range(1, n):
        a, b = int(order[k]), int(order[rng.integers(k)])
        edges.append((a, b) if rng.random() < 0.5 else (b, a))
    present = {frozenset(e) for e in edges}
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if frozenset((i, j)) not in present and rng.random() < extra_prob:
                edges.append((i, j) if rng.random() < 0.5 else (j, i))
    rng.shuffle(edges)
    return [tuple(map(int, e)) for e in edges]


def random_topology(rng, n, extra_prob=0.3):
    return build_topology(n, random_edges(rng, n, extra_prob))


def random_grid(rng, n, lo=0.1, hi=50.0, f0=50.0):
    buses = [BusParams(i + 1, *rng.uniform(lo, hi, 3), theta_bar=rng.uniform(-0.6, 0.6))
             for i in range(n)]
    lines = [(i, j, rng.uniform(0.5, 3.0)) for i, j in random_edges(rng, n)]
    return PowerGrid.build(buses, lines, 2 * math.pi * f0)


def random_controller(rng, topo, gain_range=(0.05, 2.0), tau_range=(0.5, 20.0)):
    ctrls = [EdgeController(pair, rng.uniform(*gain_range), rng.uniform(*tau_range))
             for pair in topo.pairs]
    return ClosedLoopController(tuple(ctrls), topo)


def plant_tf(grid):
    return TFMatrix(tuple(bus_plant_tf(b) for b in grid.buses))


def plant_ss(grid):
    return block_diag([bus_plant_ss(b) for b in grid.buses])


def star_grid(damping=5.0, stiffness=5.0):
    theta = (math.pi / 3, math.pi / 6, math.pi / 6, math.pi / 6)
    buses = [BusParams(i + 1, m, damping, stiffness, theta[i]) for i, m in enumerate((20, 5, 5, 5))]
    return PowerGrid.build(buses, [(1, 2, 1.0), (1, 3, 1.0), (1, 4, 1.0)], 2 * math.pi * 50)


def star_controller(grid, gains=(0.4, 0.5, 0.3), tau=10.0):
    ctrls = [EdgeController((1, j), k, tau) for j, k in zip((2, 3, 4), gains)]
    return ClosedLoopController.on(4, ctrls, grid.topology)
