"""Truth discovery with copier detection and a truthful reverse auction for crowdsourcing."""
from .auction import (
    AuctionOutcome,
    BoundConstants,
    bound_constants,
    brute_force_opt,
    compute_payments,
    run_ga,
    run_gb,
    run_reverse_auction,
    select_winners,
    social_cost,
)
from .engine import DateResult, run_date, run_ed, run_mv, run_nc
from .errors import (
    DomainError,
    EnumerationTooLarge,
    IMC2Error,
    InfeasibleCoverage,
    InsufficientCompetition,
    NoObservationError,
    OracleTooLarge,
    UndefinedAccuracyError,
    ValidationError,
)
from .harness import (
    GenConfig,
    MetricsRow,
    SweepSpec,
    generate_instance,
    precision,
    run_experiment,
    table1_instance,
    truthfulness_probe,
)
from .model import (
    AccuracyMatrix,
    Instance,
    Params,
    TaskSpec,
    TruthEstimate,
    WorkerBid,
    load_instance,
    save_instance,
    validate_instance,
)

__version__ = "0.1.0"
