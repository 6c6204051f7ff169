"""Dynamic monotone submodular maximization with update-time predictions."""

from .oracle import (CountingOracle, CoverageOracle, ModularOracle, OracleError,
                     QueryChannel, ValueOracle, check_monotone_submodular,
                     load_instance, make_coverage, random_coverage, save_instance)
from .stream import (GeneratedInstance, PredictionTable, StreamError,
                     UpdateEvent, UpdateStream, gen_instance, online_error,
                     online_error_series, partition, prediction_error)
from .engine import DynamicEngine, EngineError, GridView, threshold_ladder
from .robust import (RobustSummary, StronglyRobustPair, robust1_from_dynamic,
                     robust1_standalone, robust2, verify_strongly_robust)
from .baselines import (GridDynamic, GuardError, brute_force_opt, eager_greedy,
                        lazy_greedy)
from .scheduler import (ConfigError, FrameworkConfig, FullState, GuessGrids,
                        PhaseState, PrecomputationStore, guess_grids,
                        precomputations_full, precomputations_main,
                        run_framework, updatesol_main, warmup_precomputations,
                        warmup_updatesol)
from .harness import (ExperimentResult, GenSpec, RatioBaseline, StepRecord,
                      run_experiment, sweep)

__version__ = "0.1.0"
