"""Receding-horizon planners: threshold grid search and Q-learning."""

from .qlearn import (
    BinScheme,
    ConvergenceReport,
    DrawTrainer,
    LearnSchedule,
    NaiveQAgent,
    QTable,
    bayes_average,
    bin_of,
    convergence_check,
    find_convergence_episode,
    q_update,
    qtable_from_csv,
    qtable_to_csv,
    select_block_action,
    slice_reward,
    train_one_draw,
    train_posterior_averaged,
)
from .threshold import (
    ThresholdGrid,
    ThresholdTriple,
    plan_block,
    rollout_cost,
    rollout_fixed_action,
    select_best,
    threshold_policy,
)

__all__ = [
    "BinScheme", "ConvergenceReport", "DrawTrainer", "LearnSchedule",
    "NaiveQAgent", "QTable", "ThresholdGrid", "ThresholdTriple",
    "bayes_average", "bin_of", "convergence_check", "find_convergence_episode",
    "plan_block", "q_update", "qtable_from_csv", "qtable_to_csv",
    "rollout_cost", "rollout_fixed_action", "select_best",
    "select_block_action", "slice_reward", "threshold_policy",
    "train_one_draw", "train_posterior_averaged",
]
