"""Decision-loop orchestration: config, data, generator, loop, metrics."""

from .config import (
    BinConfig,
    ConvergenceConfig,
    GridConfig,
    RunConfig,
    ScheduleConfig,
    config_from_dict,
    desk_preset,
    load_config,
    paper_preset,
    preset,
)
from .data import Dataset, DateAlignmentError, MissingFileError, ParseError, emit_canonical, ingest
from .decision import (
    BlockRecord,
    DecisionRunner,
    DecisionTrace,
    run_decision_loop,
    run_replicates,
    trace_from_csv,
    warm_cloud_for,
)
from .generator import CounterfactualEnv, GeneratorSpec, fit_generator
from .metrics import reward_ledger, summarize, write_metrics
from .synthetic import SyntheticScenario, make_scenario
from .validate import ReplayBands, validation_replay

__all__ = [
    "BinConfig", "BlockRecord", "ConvergenceConfig", "CounterfactualEnv",
    "Dataset", "DateAlignmentError", "DecisionRunner", "DecisionTrace",
    "GeneratorSpec", "GridConfig", "MissingFileError", "ParseError",
    "ReplayBands", "RunConfig", "ScheduleConfig", "SyntheticScenario",
    "config_from_dict", "desk_preset", "emit_canonical", "fit_generator",
    "ingest", "load_config", "make_scenario", "paper_preset", "preset",
    "reward_ledger", "run_decision_loop", "run_replicates", "summarize",
    "trace_from_csv", "validation_replay", "warm_cloud_for", "write_metrics",
]
