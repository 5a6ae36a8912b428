"""Constraint screening for single-period unit commitment.

Screens redundant transmission-line limits by bounding each line's
attainable flow over an LP relaxation — optionally tightened by a
learned cost cap — and evaluates the reduced problems for cost
exactness and speedup.
"""

__version__ = "0.1.0"

from .errors import (ContextMismatch, DimensionError, DisconnectedError,
                     EmptyDataset, EmptyRegion, InfeasibleSample,
                     InsufficientData, NodeLimitExceeded, NumericalError,
                     ParseError, ScreeningInfeasible, UcScreenError,
                     ValidationError)
from .netcase import (Bus, Generator, Line, NetworkCase, load_case,
                      load_case_file, serialize, validate_case, validate_load)
from .lp import (INFEASIBLE, OPTIMAL, UNBOUNDED, LpProblem, LpSolution,
                 constraint_residuals, solve_lp, to_lp_format)
from .milp import BnbStats, MilpProblem, solve_milp
from .formulation import (UcFormulation, UcInstance, UcSolution,
                          assemble_screening, assemble_uc, build_formulation,
                          extract_solution, flow_lower_row, flow_upper_row)
from .screening import (LineVerdict, LoadRegion, ScreeningContext,
                        ScreeningReport, reduce_by_mask, reduce_instance,
                        screen_all, screen_all_keeping_infeasible, screen_line)
from .predictor import (Dataset, MlpModel, TrainConfig, TrainReport,
                        knn_screen, mlp_forward, mlp_input_grad, mlp_train)
from .pga import PgaConfig, PgaResult, project_region, run_pga
from .experiments import (CSV_HEADER, EvalOutput, ExperimentSpec, MetricsRow,
                          binding_mask, derive_seeds, evaluate,
                          generate_dataset, sample_loads, write_csv,
                          write_prediction_pairs)
