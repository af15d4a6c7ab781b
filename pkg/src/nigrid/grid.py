"""Transmission network graph, incidence/adjacency matrices and steady-state data.

Buses are numbered from 1 in every public interface; arrays are indexed
from 0 internally (bus ``i`` lives in row ``i - 1``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np


class TopologyError(ValueError):
    """Base class for invalid network descriptions."""


class DuplicateEdgeError(TopologyError):
    pass


class SelfLoopError(TopologyError):
    pass


class DisconnectedGraphError(TopologyError):
    pass


class BusIndexError(TopologyError):
    pass


@dataclass(frozen=True)
class BusParams:
    """Per-bus physical and design constants.

    ``m_inertia`` must be positive.  Damping and the synthetic stiffness are
    only required to be non-negative here; strict positivity is what makes
    the bus plant SNI, and that is checked where it matters
    (:func:`nigrid.lti.bus_plant_tf`, :func:`nigrid.ni.classify_ni`).
    """

    id: int
    m_inertia: float
    d_damping: float
    k_stiffness: float
    theta_bar: float = 0.0
    p_mech_bar: float = 0.0
    p_load_bar: float = 0.0
    p_storage_bar: float = 0.0

    def __post_init__(self):
        if self.id < 1:
            raise BusIndexError(f"bus id must be >= 1, got {self.id}")
        values = (self.m_inertia, self.d_damping, self.k_stiffness, self.theta_bar,
                  self.p_mech_bar, self.p_load_bar, self.p_storage_bar)
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"bus {self.id}: parameters must be finite")
        if self.m_inertia <= 0:
            raise ValueError(f"bus {self.id}: inertia must be positive")
        if self.d_damping < 0 or self.k_stiffness < 0:
            raise ValueError(f"bus {self.id}: damping and stiffness must be >= 0")

    @classmethod
    def from_inertia_constant(cls, id, h_inertia, d_prime, k_stiffness, omega0, **kw):
        """Build from the inertia constant H and damping power D' (M = 2H/w0, D = D'/w0)."""
        w0 = float(omega0)
        return cls(id, 2.0 * h_inertia / w0, d_prime / w0, k_stiffness, **kw)


@dataclass(frozen=True)
class LineParams:
    """A lossless line between ``endpoints[0]`` (initial node) and ``endpoints[1]``."""

    endpoints: tuple[int, int]
    p_max: float = 1.0
    psi_bar: float = 0.0

    def __post_init__(self):
        i, j = self.endpoints
        object.__setattr__(self, "endpoints", (int(i), int(j)))
        if not (math.isfinite(self.p_max) and self.p_max > 0):
            raise ValueError(f"line {self.endpoints}: p_max must be positive")

    @classmethod
    def between(cls, i: int, j: int, p_max: float = 1.0, psi_bar: float = 0.0):
        return cls((i, j), p_max, psi_bar)

    def flow(self, angle_difference):
        """Active power carried from the initial to the terminal node."""
        return self.p_max * np.sin(angle_difference)


@dataclass(frozen=True, eq=False)
class Topology:
    n_buses: int
    edges: tuple[LineParams, ...]
    incidence: np.ndarray = field(repr=False)
    adjacency: np.ndarray = field(repr=False)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return [e.endpoints for e in self.edges]

    @property
    def p_max(self) -> np.ndarray:
        return np.array([e.p_max for e in self.edges], dtype=float)

    @property
    def psi_bar(self) -> np.ndarray:
        return np.array([e.psi_bar for e in self.edges], dtype=float)

    @property
    def laplacian(self) -> np.ndarray:
        return self.incidence @ self.incidence.T

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def neighbors(self, i: int) -> list[int]:
        return [j + 1 for j in np.flatnonzero(self.adjacency[i - 1])]

    def edge_index(self, i: int, j: int) -> tuple[int, int]:
        """Return ``(e, sign)`` with ``sign = +1`` if ``i`` is the initial node of edge ``e``."""
        for e, line in enumerate(self.edges):
            if line.endpoints == (i, j):
                return e, 1
            if line.endpoints == (j, i):
                return e, -1
        raise KeyError(f"no edge between buses {i} and {j}")

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self.adjacency[i - 1, j - 1])


def _as_line(item) -> LineParams:
    if isinstance(item, LineParams):
        return item
    i, j, *rest = item
    return LineParams((i, j), *rest)


def _is_connected(n: int, adjacency: np.ndarray) -> bool:
    seen = {0}
    stack = [0]
    while stack:
        k = stack.pop()
        for j in np.flatnonzero(adjacency[k]):
            if j not in seen:
                seen.add(int(j))
                stack.append(int(j))
    return len(seen) == n


def build_topology(n: int, lines: Iterable[LineParams | Sequence]) -> Topology:
    """Validate a line list and build the signed incidence and adjacency matrices.

    Items may be :class:`LineParams` or tuples ``(i, j[, p_max[, psi_bar]])``.
    The first endpoint of each line is its initial node (``+1`` in the
    incidence column), the second its terminal node (``-1``).
    """
    if n < 1:
        raise BusIndexError("a network needs at least one bus")
    edges = tuple(_as_line(item) for item in lines)
    Q = np.zeros((n, len(edges)))
    T = np.zeros((n, n))
    seen = set()
    for e, line in enumerate(edges):
        i, j = line.endpoints
        for b in (i, j):
            if not 1 <= b <= n:
                raise BusIndexError(f"line {e} references bus {b}, valid range is 1..{n}")
        if i == j:
            raise SelfLoopError(f"line {e} connects bus {i} to itself")
        key = frozenset((i, j))
        if key in seen:
            raise DuplicateEdgeError(f"line {e} duplicates the connection {i}-{j}")
        seen.add(key)
        Q[i - 1, e] = 1.0
        Q[j - 1, e] = -1.0
        T[i - 1, j - 1] = T[j - 1, i - 1] = 1.0
    if n > 1 and not _is_connected(n, T):
        raise DisconnectedGraphError(f"the {n}-bus graph is not connected")
    Q.setflags(write=False)
    T.setflags(write=False)
    return Topology(n, edges, Q, T)


def laplacian_max_eigenvalue(t: Topology) -> float:
    """Largest eigenvalue of Q Q^T (0 for a network without lines)."""
    if t.n_edges == 0:
        return 0.0
    return float(np.linalg.eigvalsh(t.laplacian)[-1])


@dataclass(frozen=True)
class NominalFrequency:
    omega0: float  # rad/s

    def __post_init__(self):
        if not (math.isfinite(self.omega0) and self.omega0 > 0):
            raise ValueError("nominal frequency must be positive")

    @classmethod
    def from_hz(cls, hz: float) -> "NominalFrequency":
        return cls(2.0 * math.pi * hz)

    @property
    def hz(self) -> float:
        return self.omega0 / (2.0 * math.pi)

    def __float__(self):
        return self.omega0


def _omega(omega0) -> float:
    return omega0.omega0 if isinstance(omega0, NominalFrequency) else float(omega0)


def line_injections(bus_id: int, t: Topology) -> float:
    """Steady-state power leaving ``bus_id`` over its lines."""
    total = 0.0
    for line in t.edges:
        i, j = line.endpoints
        if i == bus_id:
            total += line.p_max * math.sin(line.psi_bar)
        elif j == bus_id:
            total -= line.p_max * math.sin(line.psi_bar)
    return total


def steady_state_residual(bus: BusParams, t: Topology, omega0) -> float:
    """Power balance defect of the pre-fault equilibrium at one bus; zero when balanced."""
    if not 1 <= bus.id <= t.n_buses:
        raise BusIndexError(f"bus {bus.id} is not part of the {t.n_buses}-bus topology")
    net = bus.p_mech_bar + bus.p_storage_bar - bus.p_load_bar - line_injections(bus.id, t)
    return bus.d_damping * _omega(omega0) - net


def balance_steady_state(buses: Sequence[BusParams], t: Topology, omega0) -> list[BusParams]:
    """Return copies of ``buses`` whose mechanical power makes every residual zero."""
    w0 = _omega(omega0)
    out = []
    for b in buses:
        p_mech = b.d_damping * w0 - b.p_storage_bar + b.p_load_bar + line_injections(b.id, t)
        out.append(replace(b, p_mech_bar=p_mech))
    return out


@dataclass(frozen=True, eq=False)
class PowerGrid:
    """Buses, lines and nominal frequency of one transmission network."""

    topology: Topology
    buses: tuple[BusParams, ...]
    omega0: NominalFrequency

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(sorted(self.buses, key=lambda b: b.id)))
        ids = [b.id for b in self.buses]
        if ids != list(range(1, self.topology.n_buses + 1)):
            raise BusIndexError(f"expected buses 1..{self.topology.n_buses}, got {ids}")
        for line in self.topology.edges:
            i, j = line.endpoints
            expected = self.buses[i - 1].theta_bar - self.buses[j - 1].theta_bar
            if abs(line.psi_bar - expected) > 1e-12:
                raise ValueError(
                    f"line {i}-{j}: psi_bar={line.psi_bar} but theta_bar difference is {expected}")

    @classmethod
    def build(cls, buses: Sequence[BusParams], lines: Iterable[Sequence], omega0,
              balance: bool = True) -> "PowerGrid":
        """Assemble a grid from ``(i, j, p_max)`` tuples, filling the steady-state angle differences.

        With ``balance`` the mechanical powers are solved so the pre-fault
        equilibrium holds exactly.
        """
        if not isinstance(omega0, NominalFrequency):
            omega0 = NominalFrequency(float(omega0))
        theta = {b.id: b.theta_bar for b in buses}
        prepared = []
        for item in lines:
            if isinstance(item, LineParams):
                i, j = item.endpoints
                p_max = item.p_max
            else:
                i, j, p_max = item
            psi = theta[i] - theta[j] if i in theta and j in theta else 0.0
            prepared.append(LineParams((i, j), p_max, psi))
        topo = build_topology(len(buses), prepared)
        if balance:
            buses = balance_steady_state(buses, topo, omega0)
        return cls(topo, tuple(buses), omega0)

    @property
    def n(self) -> int:
        return self.topology.n_buses

    @property
    def m_inertia(self) -> np.ndarray:
        return np.array([b.m_inertia for b in self.buses])

    @property
    def d_damping(self) -> np.ndarray:
        return np.array([b.d_damping for b in self.buses])

    @property
    def k_stiffness(self) -> np.ndarray:
        return np.array([b.k_stiffness for b in self.buses])

    @property
    def theta_bar(self) -> np.ndarray:
        return np.array([b.theta_bar for b in self.buses])

    def residuals(self) -> np.ndarray:
        return np.array([steady_state_residual(b, self.topology, self.omega0) for b in self.buses])
