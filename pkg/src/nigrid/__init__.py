"""Angle-based feedback control of transmission networks with negative-imaginary certificates."""
from .control import (ClosedLoopController, EdgeController, assemble_closed_loop, bus_inputs,
                      controller_step, distributed_bus_inputs, edge_outputs)
from .dynamics import (ActuatorCommand, FaultSpec, GridState, SimulationDiverged, Trajectory, inject_fault,
                       integrate, linearize_storage_command, swing_rhs)
from .grid import (BusParams, LineParams, NominalFrequency, PowerGrid, Topology, build_topology,
                   laplacian_max_eigenvalue, steady_state_residual)
from .lti import (PoleEvaluationError, RationalTF, StateSpaceModel, TFMatrix, block_diag, bus_plant_ss,
                  bus_plant_tf, eval_at, first_order_lag, poles, realize_first_order)
from .ni import (FrequencyGrid, NIVerdict, classify_ni, closed_loop_hurwitz, dc_gain_lemma_check,
                 eigen_product_bound, ni_defect, prop1_sufficient, theorem1_certificate)
from .scenario import (ConfigError, ScenarioConfig, cmd_reproduce_paper, cmd_simulate, cmd_verify,
                       reference_scenario, low_damping_scenario, parse_config)

__version__ = "0.1.0"
