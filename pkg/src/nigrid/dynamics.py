"""Nonlinear swing dynamics, the feedback-linearising storage law and an RK4 integrator.

Two plant paths are kept side by side:

* ``"physical"`` integrates the deviation swing equations with the sine
  line couplings, driven by the storage power deviation computed from the
  actuator law.  This is the reference model.
* ``"linearized"`` integrates ``M a + D w + K theta = u`` directly.

Because the actuator law cancels the couplings exactly, both paths produce
the same trajectory up to rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .control import ClosedLoopController, bus_inputs, controller_step, edge_outputs
from .grid import PowerGrid

MODES = ("physical", "linearized")


class SimulationDiverged(RuntimeError):
    def __init__(self, time: float, message: str | None = None):
        self.time = time
        super().__init__(message or f"non-finite state at t={time:.6g} s")


@dataclass(frozen=True, eq=False)
class GridState:
    theta_dev: np.ndarray
    theta_dev_rate: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        th = np.asarray(self.theta_dev, dtype=float)
        w = np.asarray(self.theta_dev_rate, dtype=float)
        if th.shape != w.shape or th.ndim != 1:
            raise ValueError("angle and rate vectors must be 1-D and the same length")
        object.__setattr__(self, "theta_dev", th)
        object.__setattr__(self, "theta_dev_rate", w)

    @classmethod
    def equilibrium(cls, n: int) -> "GridState":
        return cls(np.zeros(n), np.zeros(n))

    def rotor_angles(self, grid: PowerGrid) -> np.ndarray:
        return grid.omega0.omega0 * self.time + grid.theta_bar + self.theta_dev

    def frequencies(self, grid: PowerGrid) -> np.ndarray:
        return grid.omega0.omega0 + self.theta_dev_rate


@dataclass(frozen=True, eq=False)
class ActuatorCommand:
    u: np.ndarray
    p_storage_dev: np.ndarray


@dataclass(frozen=True)
class FaultSpec:
    dtheta_max: float = 0.0
    domega_max: float = 0.0

    def __post_init__(self):
        if self.dtheta_max < 0 or self.domega_max < 0:
            raise ValueError("fault bounds must be >= 0")


def _check(grid: PowerGrid, *vectors):
    for v in vectors:
        if np.shape(v)[-1] != grid.n:
            raise ValueError(f"expected vectors of length {grid.n}, got shape {np.shape(v)}")


def coupling_relief(theta_dev, grid: PowerGrid) -> np.ndarray:
    """Per-bus ``sum_j Pmax (sin psi_bar - sin(theta_i - theta_j + psi_bar))``.

    Works on a single state or on a stack of states (leading axes).
    """
    topo = grid.topology
    if topo.n_edges == 0:
        return np.zeros_like(np.asarray(theta_dev, dtype=float))
    psi = topo.psi_bar
    delta = edge_outputs(theta_dev, topo) + psi
    per_edge = topo.p_max * (np.sin(psi) - np.sin(delta))
    return bus_inputs(per_edge, topo)


def _neighbor_tables(grid: PowerGrid):
    """Dense ``Pmax_ij`` and ``psi_bar_ij`` tables over ordered bus pairs."""
    n = grid.n
    P = np.zeros((n, n))
    Psi = np.zeros((n, n))
    for line in grid.topology.edges:
        i, j = line.endpoints[0] - 1, line.endpoints[1] - 1
        P[i, j] = P[j, i] = line.p_max
        Psi[i, j], Psi[j, i] = line.psi_bar, -line.psi_bar
    return P, Psi


def _neighbor_coupling(theta, P, Psi, steady):
    """Bus-wise sum over neighbours of ``Pmax (sin psi_bar - sin(theta_i - theta_j + psi_bar))``."""
    flows = P * np.sin(theta[:, None] - theta[None, :] + Psi)
    return steady - flows.sum(axis=1)


def swing_rhs(s: GridState, inputs, grid: PowerGrid, mode: str = "linearized"):
    """Time derivative ``(theta_rate, theta_accel)`` of the bus angle deviations.

    In ``"linearized"`` mode ``inputs`` is the linearised input ``u``; in
    ``"physical"`` mode it is the storage power deviation and the sine
    couplings are evaluated explicitly.
    """
    _check(grid, s.theta_dev, inputs)
    inputs = np.asarray(inputs, dtype=float)
    M, D, K = grid.m_inertia, grid.d_damping, grid.k_stiffness
    if mode == "linearized":
        acc = (-D * s.theta_dev_rate - K * s.theta_dev + inputs) / M
    elif mode == "physical":
        P, Psi = _neighbor_tables(grid)
        steady = (P * np.sin(Psi)).sum(axis=1)
        acc = (-D * s.theta_dev_rate + inputs + _neighbor_coupling(s.theta_dev, P, Psi, steady)) / M
    else:
        raise ValueError(f"mode must be one of {MODES}")
    return s.theta_dev_rate.copy(), acc


def linearize_storage_command(u, s: GridState, grid: PowerGrid) -> ActuatorCommand:
    """Storage power deviation that turns the bus input into ``u``."""
    _check(grid, u, s.theta_dev)
    u = np.asarray(u, dtype=float)
    pst = u - coupling_relief(s.theta_dev, grid) - grid.k_stiffness * s.theta_dev
    return ActuatorCommand(u, pst)


def rotor_frame_acceleration(delta, delta_rate, p_storage, grid: PowerGrid) -> np.ndarray:
    """Rotor acceleration from the full swing equations in absolute rotor angles.

    Uses the buses' steady-state mechanical and load powers; independent of
    the deviation form and used to cross-check it.
    """
    topo = grid.topology
    M, D = grid.m_inertia, grid.d_damping
    pm = np.array([b.p_mech_bar for b in grid.buses])
    pl = np.array([b.p_load_bar for b in grid.buses])
    out = np.zeros(grid.n)
    for line in topo.edges:
        i, j = line.endpoints
        f = line.p_max * math.sin(delta[i - 1] - delta[j - 1])
        out[i - 1] += f
        out[j - 1] -= f
    return (pm + np.asarray(p_storage) - pl - D * np.asarray(delta_rate) - out) / M


def inject_fault(s: GridState, spec: FaultSpec, seed) -> GridState:
    """Add independent uniform perturbations to the angle deviations and their rates."""
    rng = np.random.default_rng(seed)
    n = s.theta_dev.size
    dth = rng.uniform(-spec.dtheta_max, spec.dtheta_max, n)
    dw = rng.uniform(-spec.domega_max, spec.domega_max, n)
    return GridState(s.theta_dev + dth, s.theta_dev_rate + dw, s.time)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Uniformly sampled closed-loop run; row ``k`` is time ``t[k]``."""

    t: np.ndarray
    theta_dev: np.ndarray
    theta_dev_rate: np.ndarray
    controller_state: np.ndarray
    u: np.ndarray
    p_storage_dev: np.ndarray
    angle_diff: np.ndarray
    flows: np.ndarray
    grid: PowerGrid = field(repr=False)
    mode: str = "physical"

    def __len__(self):
        return self.t.size

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if self.t.size > 1 else 0.0

    @property
    def frequency_hz(self) -> np.ndarray:
        return self.grid.omega0.hz + self.theta_dev_rate / (2.0 * math.pi)

    @property
    def edge_deviation(self) -> np.ndarray:
        """Angle difference deviations ``theta_i - theta_j`` on the physical lines."""
        return edge_outputs(self.theta_dev, self.grid.topology)

    def state(self, k: int) -> GridState:
        return GridState(self.theta_dev[k], self.theta_dev_rate[k], float(self.t[k]))


def _closed_loop_field(grid: PowerGrid, controller: ClosedLoopController | None,
                       mode: str, open_loop_input: Callable | None):
    # Same formulas as swing_rhs / linearize_storage_command / controller_step,
    # with the per-call validation hoisted out of the RK4 loop.
    n = grid.n
    M, D, K = grid.m_inertia, grid.d_damping, grid.k_stiffness
    topo = grid.topology
    Q, QT = topo.incidence, np.ascontiguousarray(topo.incidence.T)
    p_max, psi = topo.p_max, topo.psi_bar
    sin_psi = np.sin(psi)
    has_lines = topo.n_edges > 0
    if controller is not None:
        Qc, QcT = controller.incidence, np.ascontiguousarray(controller.incidence.T)
        gains, inv_tau = controller.gains, 1.0 / controller.taus
    zero_u = np.zeros(n)
    physical = mode == "physical"
    P, Psi = _neighbor_tables(grid)
    steady = (P * np.sin(Psi)).sum(axis=1)

    def relief(theta):
        if not has_lines:
            return zero_u
        return Q @ (p_max * (sin_psi - np.sin(QT @ theta + psi)))

    def f(t, x):
        theta, rate, z = x[:n], x[n:2 * n], x[2 * n:]
        if controller is not None:
            zdot = (QcT @ theta - z) * inv_tau
            u = Qc @ (gains * z)
        else:
            zdot = z[:0]
            u = zero_u
        if open_loop_input is not None:
            u = u + open_loop_input(t)
        if physical:
            # actuator works on edge quantities; the plant sums its own line flows per bus
            pst = u - relief(theta) - K * theta
            acc = (-D * rate + pst + _neighbor_coupling(theta, P, Psi, steady)) / M
        else:
            acc = (-D * rate - K * theta + u) / M
        return np.concatenate((rate, acc, zdot))

    return f


def integrate(initial: GridState, controller: ClosedLoopController | None, grid: PowerGrid,
              t_end: float, dt: float = 1e-3, mode: str = "physical",
              open_loop_input: Callable | None = None, z0=None) -> Trajectory:
    """Fixed-step classical RK4 over plant and controller states jointly.

    ``open_loop_input(t)`` adds an external bus input ``u`` on top of the
    controller command (or replaces it when ``controller`` is None).
    Raises :class:`SimulationDiverged` on the first non-finite state.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if not (dt > 0 and t_end >= dt):
        raise ValueError("need dt > 0 and t_end >= dt")
    n = grid.n
    if initial.theta_dev.size != n:
        raise ValueError(f"initial state has {initial.theta_dev.size} buses, grid has {n}")
    if controller is not None and controller.topology.n_buses != n:
        raise ValueError("controller graph and grid have different bus counts")
    n_ctrl = controller.n_edges if controller is not None else 0
    z_init = np.zeros(n_ctrl) if z0 is None else np.asarray(z0, dtype=float)
    if z_init.shape != (n_ctrl,):
        raise ValueError(f"controller state must have {n_ctrl} entries")

    steps = int(round(t_end / dt))
    f = _closed_loop_field(grid, controller, mode, open_loop_input)
    X = np.empty((steps + 1, 2 * n + n_ctrl))
    x = np.concatenate([initial.theta_dev, initial.theta_dev_rate, z_init])
    X[0] = x
    t0 = initial.time
    half = 0.5 * dt
    with np.errstate(over="ignore", invalid="ignore"):
        # a blow-up is reported through SimulationDiverged, not float warnings
        for k in range(steps):
            t = t0 + k * dt
            k1 = f(t, x)
            k2 = f(t + half, x + half * k1)
            k3 = f(t + half, x + half * k2)
            k4 = f(t + dt, x + dt * k3)
            x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(x)):
                raise SimulationDiverged(t + dt)
            X[k + 1] = x
    times = t0 + dt * np.arange(steps + 1)
    return _trajectory(times, X, grid, controller, mode, open_loop_input)


def _trajectory(times, X, grid, controller, mode, open_loop_input) -> Trajectory:
    n = grid.n
    theta, rate, z = X[:, :n], X[:, n:2 * n], X[:, 2 * n:]
    if controller is not None:
        u = bus_inputs(controller.gains * z, controller.topology)
    else:
        u = np.zeros_like(theta)
    if open_loop_input is not None:
        u = u + np.array([open_loop_input(t) for t in times])
    pst = u - coupling_relief(theta, grid) - grid.k_stiffness * theta
    topo = grid.topology
    angle_diff = edge_outputs(theta, topo) + topo.psi_bar
    flows = topo.p_max * np.sin(angle_diff)
    return Trajectory(times, theta, rate, z, u, pst, angle_diff, flows, grid, mode)
