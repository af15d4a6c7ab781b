"""Per-edge SNI controllers and the incidence-based distributed control law."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import LineParams, Topology, build_topology
from .lti import StateSpaceModel, TFMatrix, block_diag, first_order_lag, positive_feedback_matrix, realize_first_order


@dataclass(frozen=True)
class EdgeController:
    """First-order lag ``gain / (tau s + 1)`` acting on the angle difference of one bus pair.

    ``virtual`` marks a controller placed on a pair without a physical line.
    """

    endpoints: tuple[int, int]
    gain: float
    tau: float
    virtual: bool = False

    def __post_init__(self):
        if not self.gain > 0:
            raise ValueError(f"controller {self.endpoints}: gain must be positive")
        if not self.tau > 0:
            raise ValueError(f"controller {self.endpoints}: tau must be positive")

    @property
    def tf(self):
        return first_order_lag(self.gain, self.tau)


@dataclass(frozen=True, eq=False)
class ClosedLoopController:
    """Edge controllers in incidence-column order, with the graph they act on."""

    controllers: tuple[EdgeController, ...]
    topology: Topology

    def __post_init__(self):
        object.__setattr__(self, "controllers", tuple(self.controllers))
        pairs = [c.endpoints for c in self.controllers]
        if pairs != self.topology.pairs:
            raise ValueError("controller order must match the controller graph's edges")

    @classmethod
    def on(cls, n_buses: int, controllers: Sequence[EdgeController],
           physical: Topology | None = None) -> "ClosedLoopController":
        """Build the controller graph; non-virtual controllers must sit on physical lines."""
        if physical is not None:
            for c in controllers:
                if not c.virtual and not physical.has_edge(*c.endpoints):
                    raise ValueError(f"controller {c.endpoints} is not on a physical line; "
                                     "mark it virtual")
        topo = build_topology(n_buses, [LineParams(c.endpoints) for c in controllers])
        return cls(tuple(controllers), topo)

    @property
    def n_edges(self) -> int:
        return len(self.controllers)

    @property
    def incidence(self) -> np.ndarray:
        return self.topology.incidence

    @property
    def gains(self) -> np.ndarray:
        return np.array([c.gain for c in self.controllers])

    @property
    def taus(self) -> np.ndarray:
        return np.array([c.tau for c in self.controllers])

    def transfer_matrix(self) -> TFMatrix:
        return TFMatrix(tuple(c.tf for c in self.controllers))

    def state_space(self) -> StateSpaceModel:
        return block_diag([realize_first_order(c.tf) for c in self.controllers])

    def scaled(self, factor: float) -> "ClosedLoopController":
        return ClosedLoopController(
            tuple(EdgeController(c.endpoints, c.gain * factor, c.tau, c.virtual)
                  for c in self.controllers), self.topology)


def edge_outputs(y, topo: Topology) -> np.ndarray:
    """Angle differences across edges, ``Q^T y`` (broadcasts over leading axes)."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != topo.n_buses:
        raise ValueError(f"expected {topo.n_buses} bus values, got {y.shape[-1]}")
    return y @ topo.incidence


def bus_inputs(u_tilde, topo: Topology) -> np.ndarray:
    """Spread edge commands back to buses, ``Q u~``."""
    u_tilde = np.asarray(u_tilde, dtype=float)
    if u_tilde.shape[-1] != topo.n_edges:
        raise ValueError(f"expected {topo.n_edges} edge values, got {u_tilde.shape[-1]}")
    return u_tilde @ topo.incidence.T


def controller_step(c: ClosedLoopController, z, y_tilde):
    """Vector field and output of the controller bank.

    Returns ``(z_dot, u_tilde)`` with ``z_dot = (y~ - z) / tau`` and
    ``u~ = gain * z``.  Time stepping happens jointly with the plant in
    :func:`nigrid.dynamics.integrate`.
    """
    z = np.asarray(z, dtype=float)
    y_tilde = np.asarray(y_tilde, dtype=float)
    if y_tilde.shape[-1] != c.n_edges or z.shape[-1] != c.n_edges:
        raise ValueError(f"expected {c.n_edges} edge values")
    return (y_tilde - z) / c.taus, c.gains * z


def distributed_bus_inputs(c: ClosedLoopController, z) -> np.ndarray:
    """Evaluate each bus's command from its own neighbour terms only.

    Bus ``i`` adds ``G_e (y_i - y_j)`` for every controller edge ``e`` it
    shares with ``j``; seen from the terminal node that is the negated
    edge output.
    """
    z = np.asarray(z, dtype=float)
    n = c.topology.n_buses
    u = np.zeros(n)
    for i in range(1, n + 1):
        for j in c.topology.neighbors(i):
            e, sign = c.topology.edge_index(i, j)
            u[i - 1] += sign * c.controllers[e].gain * z[e]
    return u


def assemble_closed_loop(plant: StateSpaceModel, c: ClosedLoopController) -> StateSpaceModel:
    """Autonomous ``(2n + l)``-state closed loop of the plant and the edge controllers."""
    A_cl = positive_feedback_matrix(plant, c.state_space(), c.incidence)
    N = A_cl.shape[0]
    return StateSpaceModel(A_cl, np.zeros((N, 0)), np.eye(N), np.zeros((N, 0)))
