"""Joint DC-bias and message-power allocation for multi-AP visible-light
networks serving information users and energy-harvesting users."""

from .config import ConfigError, PhysParams, QosSpec, ScenarioConfig, load_config
from .geometry import Geometry, WallPatches, build_geometry
from .channel import ChannelMatrix, channel_matrix, los_gain, nlos_gain
from .precoding import (DegenerateChannelError, LinearizationSingularError,
                        PrecoderSet, linearized_map, zf_precoder)
from .utility import (Allocation, BiasRangeError, bias_from_powers,
                      harvested_energies, harvested_energy, min_power,
                      min_powers, sum_rate, total_energy, weighted_objective)
from .numerics import (IterationLimitError, LpProblem, LpSolution, NoRootError,
                       newton_root, solve_lp)
from .iterative import (DualState, LinearizedModel, SolverOptions, SolverReport,
                        UnboundedPowerError, feasibility_precheck, kkt_power,
                        linearize, solve_max_energy, solve_weighted, update_duals)
from .baseline import (BaselineInfeasibleError, max_equal_bias, min_equal_bias,
                       solve_baseline)
from .oracle import OracleInfeasibleError, audit_allocation, grid_search
from .experiments import (AlgoResult, TrialResult, build_instance, run_sweep,
                          run_trial, render_csv, write_csv)

__version__ = "0.1.0"
