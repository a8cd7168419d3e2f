"""PID-refined second-order latent factor analysis for sparse rating matrices."""
from .data import (FORMATS, ID_SPACES, HdiMatrix, Partition, RatingFormat, RatingTuple, build_hdi,
                   density, load_ratings, parse_ratings, partition, read_manifest,
                   write_manifest)
from .errors import (ConfigError, DataError, DivergenceError, DuplicateEntryError,
                     ParseError, PslfError, SolverError)
from .lfa import (LatentState, assemble_gradient, init_latent, objective, predict,
                  residuals, rmse)
from .pid import PidGains, PidState, init_pid, refine_errors
from .second_order import CgResult, GaussNewtonOperator, HvpConfig, cg_solve, gn_hvp, jtvp, jvp
from .trainers import (OPTIMIZERS, TrainConfig, TrainReport, check_early_stop, grid_search,
                       train, train_adam, train_pslf, train_sam, train_sgd, train_slf)

__version__ = "0.1.0"
