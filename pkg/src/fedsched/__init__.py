"""Simulator and scheduling library for differentially private federated
learning over interference-limited wireless channels.

A queue-aware combinatorial bandit assigns clients to channels each
round by max-min matching on optimistic reward estimates, trading
per-round delay against per-client minimum participation targets
derived from local-DP noise levels.
"""

from ._core import BACKEND
from .bandit import (
    BanditState,
    SchedulerConfig,
    baseline_random,
    baseline_round_robin,
    baseline_single_ucb,
    estimated_rewards,
    observe,
    reward,
    select_assignment,
    update_queues,
)
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    RegretReport,
    RoundMetrics,
    client_sizes,
    client_skews,
    compute_regret,
    emit,
    run_experiment,
    run_many,
    theorem_regret_bound,
)
from .matching import (
    UNEXPLORED,
    Assignment,
    brute_force_optimal,
    gmba_step,
    greedy_with_order,
    min_matched_edge,
    optimal_matching,
    optimal_matching_by_pruning,
    random_assignment,
)
from .privacy import (
    DivergenceInputs,
    PrivacyLedger,
    compose_leakage,
    divergence_bound,
    noise_std,
    participating_ratios,
    record_upload,
)

__version__ = "0.1.0"
