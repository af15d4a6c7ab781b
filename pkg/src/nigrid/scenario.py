"""Scenario configuration, run reports, trajectory export and the built-in 4-bus case."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import jsonschema
import numpy as np

from .control import ClosedLoopController, EdgeController
from .dynamics import FaultSpec, GridState, SimulationDiverged, Trajectory, inject_fault, integrate
from .grid import BusParams, PowerGrid, TopologyError, laplacian_max_eigenvalue
from .lti import TFMatrix, block_diag, bus_plant_ss, bus_plant_tf
from .ni import classify_ni, closed_loop_hurwitz, prop1_sufficient, theorem1_certificate

_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_BUS_ID = {"type": "integer", "minimum": 1}


def _obj(props: dict, required=None) -> dict:
    return {"type": "object", "additionalProperties": False, "properties": props,
            "required": list(props) if required is None else required}


CONFIG_SCHEMA = _obj({
    "omega0_hz": _POS,
    "buses": {"type": "array", "minItems": 1, "items": _obj({
        "id": _BUS_ID, "M": _POS, "D": _NONNEG, "K": _NONNEG, "theta_bar_rad": {"type": "number"},
    })},
    "lines": {"type": "array", "items": _obj({"from": _BUS_ID, "to": _BUS_ID, "p_max": _POS})},
    "controllers": {"type": "array", "items": _obj(
        {"from": _BUS_ID, "to": _BUS_ID, "k": _POS, "tau": _POS, "virtual": {"type": "boolean"}},
        required=["from", "to", "k", "tau"])},
    "sim": _obj({
        "t_end_s": _POS, "dt_s": _POS, "seed": {"type": "integer", "minimum": 0},
        "stride": {"type": "integer", "minimum": 1},
        "fault": _obj({"dtheta_max_rad": _NONNEG, "domega_max_rad_s": _NONNEG}),
    }, required=["t_end_s", "dt_s", "seed", "fault"]),
})

EXIT_OK, EXIT_CERTIFICATE, EXIT_VALIDATION, EXIT_DIVERGED = 0, 1, 2, 3
SETTLING_THRESHOLD_HZ = 1e-3


@dataclass(frozen=True)
class ConfigIssue:
    kind: str  # "syntax" | "schema" | "reference" | "topology"
    path: str
    message: str

    def __str__(self):
        where = f" at {self.path}" if self.path else ""
        return f"{self.kind} error{where}: {self.message}"


class ConfigError(ValueError):
    def __init__(self, issues: list[ConfigIssue]):
        self.issues = list(issues)
        super().__init__("\n".join(str(i) for i in self.issues))

    @property
    def kinds(self) -> set[str]:
        return {i.kind for i in self.issues}


@dataclass(frozen=True)
class BusConfig:
    id: int
    M: float
    D: float
    K: float
    theta_bar_rad: float


@dataclass(frozen=True)
class LineConfig:
    from_: int
    to: int
    p_max: float


@dataclass(frozen=True)
class ControllerConfig:
    from_: int
    to: int
    k: float
    tau: float
    virtual: bool = False


@dataclass(frozen=True)
class SimConfig:
    t_end_s: float = 120.0
    dt_s: float = 1e-3
    seed: int = 42
    dtheta_max_rad: float = 0.5
    domega_max_rad_s: float = 0.5
    stride: int = 10


@dataclass(frozen=True)
class ScenarioConfig:
    omega0_hz: float
    buses: tuple[BusConfig, ...]
    lines: tuple[LineConfig, ...]
    controllers: tuple[ControllerConfig, ...]
    sim: SimConfig = field(default_factory=SimConfig)

    def build_grid(self) -> PowerGrid:
        buses = [BusParams(b.id, b.M, b.D, b.K, b.theta_bar_rad) for b in self.buses]
        return PowerGrid.build(buses, [(l.from_, l.to, l.p_max) for l in self.lines],
                               2.0 * math.pi * self.omega0_hz)

    def build_controller(self, grid: PowerGrid) -> ClosedLoopController:
        ctrls = [EdgeController((c.from_, c.to), c.k, c.tau, c.virtual) for c in self.controllers]
        return ClosedLoopController.on(grid.n, ctrls, grid.topology)

    @property
    def fault(self) -> FaultSpec:
        return FaultSpec(self.sim.dtheta_max_rad, self.sim.domega_max_rad_s)

    def scale_controller_gains(self, factor: float) -> "ScenarioConfig":
        return replace(self, controllers=tuple(replace(c, k=c.k * factor) for c in self.controllers))

    def with_sim(self, **kw) -> "ScenarioConfig":
        return replace(self, sim=replace(self.sim, **kw))

    def to_dict(self) -> dict:
        sim = self.sim
        return {
            "omega0_hz": self.omega0_hz,
            "buses": [asdict(b) for b in self.buses],
            "lines": [{"from": l.from_, "to": l.to, "p_max": l.p_max} for l in self.lines],
            "controllers": [{"from": c.from_, "to": c.to, "k": c.k, "tau": c.tau, "virtual": c.virtual}
                            for c in self.controllers],
            "sim": {"t_end_s": sim.t_end_s, "dt_s": sim.dt_s, "seed": sim.seed, "stride": sim.stride,
                    "fault": {"dtheta_max_rad": sim.dtheta_max_rad,
                              "domega_max_rad_s": sim.domega_max_rad_s}},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _path(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out


def _schema_issues(data) -> list[ConfigIssue]:
    issues = []
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    for err in sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path))):
        base = list(err.absolute_path)
        if err.validator == "required" and isinstance(err.instance, dict):
            for name in err.validator_value:
                if name not in err.instance:
                    issues.append(ConfigIssue("schema", _path(base + [name]), "required field is missing"))
        elif err.validator == "additionalProperties" and isinstance(err.instance, dict):
            allowed = set(err.schema.get("properties", {}))
            for name in sorted(set(err.instance) - allowed):
                issues.append(ConfigIssue("schema", _path(base + [name]), "unknown field"))
        else:
            issues.append(ConfigIssue("schema", _path(base), err.message))
    return issues


def _reference_issues(data) -> list[ConfigIssue]:
    issues = []
    ids = [b["id"] for b in data["buses"]]
    known = set(ids)
    if sorted(ids) != list(range(1, len(ids) + 1)):
        issues.append(ConfigIssue("reference", "buses",
                                  f"bus ids must be exactly 1..{len(ids)} without repeats, got {ids}"))
    for section in ("lines", "controllers"):
        for k, item in enumerate(data[section]):
            for end in ("from", "to"):
                if item[end] not in known:
                    issues.append(ConfigIssue("reference", f"{section}[{k}].{end}",
                                              f"bus {item[end]} does not exist"))
    return issues


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a JSON scenario; raises :class:`ConfigError` listing every problem."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([ConfigIssue("syntax", f"line {exc.lineno}, column {exc.colno}", exc.msg)])
    issues = _schema_issues(data)
    if issues:
        raise ConfigError(issues)
    issues = _reference_issues(data)
    if issues:
        raise ConfigError(issues)
    sim = data["sim"]
    cfg = ScenarioConfig(
        omega0_hz=float(data["omega0_hz"]),
        buses=tuple(BusConfig(b["id"], float(b["M"]), float(b["D"]), float(b["K"]),
                              float(b["theta_bar_rad"])) for b in sorted(data["buses"], key=lambda b: b["id"])),
        lines=tuple(LineConfig(l["from"], l["to"], float(l["p_max"])) for l in data["lines"]),
        controllers=tuple(ControllerConfig(c["from"], c["to"], float(c["k"]), float(c["tau"]),
                                           bool(c.get("virtual", False))) for c in data["controllers"]),
        sim=SimConfig(float(sim["t_end_s"]), float(sim["dt_s"]), int(sim["seed"]),
                      float(sim["fault"]["dtheta_max_rad"]), float(sim["fault"]["domega_max_rad_s"]),
                      int(sim.get("stride", 10))),
    )
    # graph-level checks need the assembled objects
    try:
        grid = cfg.build_grid()
    except TopologyError as exc:
        raise ConfigError([ConfigIssue("topology", "lines", str(exc))])
    try:
        cfg.build_controller(grid)
    except (TopologyError, ValueError) as exc:
        raise ConfigError([ConfigIssue("topology", "controllers", str(exc))])
    return cfg


def load_config(path) -> ScenarioConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def _star_config(damping: float, stiffness: float) -> ScenarioConfig:
    theta = (math.pi / 3, math.pi / 6, math.pi / 6, math.pi / 6)
    inertia = (20.0, 5.0, 5.0, 5.0)
    return ScenarioConfig(
        omega0_hz=50.0,
        buses=tuple(BusConfig(i + 1, inertia[i], damping, stiffness, theta[i]) for i in range(4)),
        lines=tuple(LineConfig(1, j, 1.0) for j in (2, 3, 4)),
        controllers=tuple(ControllerConfig(1, j, k, 10.0) for j, k in zip((2, 3, 4), (0.4, 0.5, 0.3))),
        sim=SimConfig(),
    )


def reference_scenario() -> ScenarioConfig:
    """4-bus star with D = K = 5: plant blocks 1/(20s^2+5s+5) and 1/(5s^2+5s+5)."""
    return _star_config(5.0, 5.0)


def low_damping_scenario() -> ScenarioConfig:
    """Same star with D = 0.2, K = 1; the default gains do not stabilise it."""
    return _star_config(0.2, 1.0)


REFERENCE_SCENARIO_JSON = reference_scenario().to_json()


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


@dataclass
class RunReport:
    plant_ni: dict
    controller_sni: dict
    laplacian_max: float
    physical_laplacian_max: float
    theorem1: dict
    prop1: dict
    closed_loop: dict
    convergence: dict | None = None
    divergence_time_s: float | None = None

    @property
    def certified(self) -> bool:
        return bool(self.theorem1["holds"])

    @property
    def hurwitz(self) -> bool:
        return bool(self.closed_loop["stable"])

    def to_dict(self) -> dict:
        return _jsonable(asdict(self) | {"certified": self.certified})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def plant_transfer_matrix(grid: PowerGrid) -> TFMatrix:
    return TFMatrix(tuple(bus_plant_tf(b, strict=False) for b in grid.buses))


def cmd_verify(config: ScenarioConfig) -> RunReport:
    """NI classification, both certificates and the closed-loop eigenvalues, without simulating."""
    grid = config.build_grid()
    ctrl = config.build_controller(grid)
    G = plant_transfer_matrix(grid)
    Gc = ctrl.transfer_matrix()
    thm = theorem1_certificate(G.congruence(ctrl.incidence), Gc)
    prop = prop1_sufficient(G, Gc, ctrl.topology)
    plant_ss = block_diag([bus_plant_ss(b) for b in grid.buses])
    hw = closed_loop_hurwitz(plant_ss, ctrl.state_space(), ctrl.topology)
    eig = sorted(hw.eigenvalues, key=lambda z: (z.real, z.imag))
    return RunReport(
        plant_ni=classify_ni(G).to_dict(),
        controller_sni=classify_ni(Gc).to_dict(),
        laplacian_max=laplacian_max_eigenvalue(ctrl.topology),
        physical_laplacian_max=laplacian_max_eigenvalue(grid.topology),
        theorem1={"value": thm.value, "eigen_test": thm.eigen_test, "holds": thm.holds,
                  "side_conditions": asdict(thm.conditions),
                  "failed_side_conditions": thm.conditions.failures()},
        prop1={"plant_dc_max": prop.plant_dc_max, "controller_dc_max": prop.controller_dc_max,
               "product": prop.product, "inverse_laplacian_max": prop.inverse_laplacian_max,
               "holds": prop.holds},
        closed_loop={"stable": hw.stable, "max_real": hw.max_real,
                     "eigenvalues": [[z.real, z.imag] for z in eig]},
    )


class CertificateFailure(RuntimeError):
    def __init__(self, report: RunReport):
        self.report = report
        super().__init__("internal-stability certificate failed; pass force=True to simulate anyway")


def convergence_metrics(traj: Trajectory, controller: ClosedLoopController,
                        threshold_hz: float = SETTLING_THRESHOLD_HZ) -> dict:
    freq_err = np.abs(traj.frequency_hz - traj.grid.omega0.hz).max(axis=1)
    outside = np.flatnonzero(freq_err >= threshold_hz)
    if outside.size == 0:
        settling = float(traj.t[0])
    elif outside[-1] == len(traj) - 1:
        settling = None
    else:
        settling = float(traj.t[outside[-1] + 1])
    y_tilde = traj.theta_dev[-1] @ controller.incidence
    return {
        "settling_time_s": settling,
        "threshold_hz": threshold_hz,
        "terminal_max_freq_dev_hz": float(freq_err[-1]),
        "terminal_max_edge_output": float(np.abs(y_tilde).max()) if y_tilde.size else 0.0,
        "terminal_max_angle_diff_error_rad": float(np.abs(traj.edge_deviation[-1]).max())
        if traj.grid.topology.n_edges else 0.0,
        "terminal_max_storage_dev": float(np.abs(traj.p_storage_dev[-1]).max()),
        "t_end_s": float(traj.t[-1]),
    }


def run_scenario(config: ScenarioConfig, seed: int | None = None, mode: str = "physical") -> Trajectory:
    """Fault injection followed by integration; no certificate gate."""
    grid = config.build_grid()
    ctrl = config.build_controller(grid)
    start = inject_fault(GridState.equilibrium(grid.n), config.fault,
                         config.sim.seed if seed is None else seed)
    return integrate(start, ctrl, grid, config.sim.t_end_s, config.sim.dt_s, mode=mode)


def cmd_simulate(config: ScenarioConfig, out_csv=None, plot_dir=None, seed: int | None = None,
                 force: bool = False) -> tuple[Trajectory | None, RunReport]:
    """Verify, then simulate the faulted scenario and export CSV (and optional SVG plots).

    Raises :class:`CertificateFailure` when the certificate fails and
    ``force`` is false.  A diverged run returns ``(None, report)`` with
    ``report.divergence_time_s`` set.
    """
    report = cmd_verify(config)
    if not report.certified and not force:
        raise CertificateFailure(report)
    ctrl = config.build_controller(config.build_grid())
    try:
        traj = run_scenario(config, seed)
    except SimulationDiverged as exc:
        report.divergence_time_s = exc.time
        return None, report
    report.convergence = convergence_metrics(traj, ctrl)
    if out_csv is not None:
        write_trajectory_csv(traj, out_csv, config.sim.stride)
    if plot_dir is not None:
        from .plots import write_plots
        write_plots(traj, plot_dir)
    return traj, report


def cmd_reproduce_paper(out_dir="reference_run") -> tuple[Trajectory, RunReport]:
    """Run the built-in 4-bus scenario and write scenario, CSV, report and plots to ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = reference_scenario()
    (out / "scenario.json").write_text(config.to_json(), encoding="utf-8")
    traj, report = cmd_simulate(config, out / "trajectory.csv", out / "plots")
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    return traj, report


# -- CSV ---------------------------------------------------------------------

def trajectory_columns(traj: Trajectory) -> tuple[list[str], np.ndarray]:
    n, l = traj.grid.n, traj.grid.topology.n_edges
    header = (["t"] + [f"theta_dev_{i}" for i in range(1, n + 1)]
              + [f"freq_hz_{i}" for i in range(1, n + 1)]
              + [f"pst_dev_{i}" for i in range(1, n + 1)]
              + [f"angle_diff_{e}" for e in range(1, l + 1)]
              + [f"flow_{e}" for e in range(1, l + 1)])
    data = np.column_stack([traj.t, traj.theta_dev, traj.frequency_hz, traj.p_storage_dev,
                            traj.angle_diff, traj.flows])
    return header, data


def _rows(count: int, stride: int) -> np.ndarray:
    idx = np.arange(0, count, stride)
    if idx[-1] != count - 1:
        idx = np.append(idx, count - 1)
    return idx


def write_trajectory_csv(traj: Trajectory, path, stride: int = 10) -> None:
    header, data = trajectory_columns(traj)
    lines = [",".join(header)]
    for row in data[_rows(len(traj), stride)]:
        lines.append(",".join(repr(float(v)) for v in row))
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trajectory_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        rows = [[float(v) for v in line.rstrip("\n").split(",")] for line in fh if line.strip()]
    return header, np.array(rows)


def sample_rows(traj: Trajectory, stride: int) -> np.ndarray:
    """Indices of the trajectory rows that :func:`write_trajectory_csv` emits."""
    return _rows(len(traj), stride)
