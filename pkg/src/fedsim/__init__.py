"""fedsim: a self-contained federated optimization simulator.

Clients run local SGD on synthetic differentiable tasks; the server applies
a gradient-style optimizer (SGD, momentum SGD, or one of three per-coordinate
adaptive rules) to the negated average model delta.  Ships heterogeneous
data partitioners, a control-variate baseline, a theory module that evaluates
convergence bounds against measured constants, and a sweep/CLI harness with
deterministic, seed-keyed parallelism.
"""

from .client import ControlVariates, local_epochs, local_steps, scaffold_local
from .config import ExperimentConfig, build_task, parse_config
from .errors import (CapacityError, ConfigError, ContractError, DomainError,
                     NumericalAbort, ShapeError)
from .fedloop import (ClientUpdate, RoundRecord, Trace, aggregate,
                      resume_experiment, run_experiment, run_round, sample_clients)
from .metrics import emit_metrics, parse_metrics
from .partition import (LabelDag, Multinomial, load_manifest, make_synthetic_dag,
                        partition_iid, partition_lda, partition_pachinko,
                        renormalize, save_manifest)
from .schedules import Schedule, schedule_eval
from .server import (ServerState, apply_momentum, init_server_state, load_state,
                     save_state, server_step)
from .sweep import SweepResult, grid_sweep
from .tasks import (estimate_constants, make_linear_ae, make_mlp2,
                    make_quadratic_ensemble, make_sparse_logreg)
from . import theory

__version__ = "0.1.0"
