"""Classical and quantum-accelerated multilevel estimators for nested expectations."""

from .cost_ledger import CostLedger, merge, merge_all
from .problem_model import NestedProblem, PROBLEMS, get_problem
from .quantum_mean_oracle import MeanEstimate, OracleMode, Sampler, quantum_mean_estimate
from .classical_estimators import (MlmcSchedule, classical_level_sample, classical_mlmc_estimate,
                                   estimate_sequence_params, nested_mc_estimate, plan_schedule)
from .q_nestexpect import (LevelOutput, a_level, b_level, median, q_nest_expect, q_nest_expect_08,
                           qa_mlmc_estimate)

__all__ = [
    "CostLedger", "merge", "merge_all", "NestedProblem", "PROBLEMS", "get_problem",
    "MeanEstimate", "OracleMode", "Sampler", "quantum_mean_estimate",
    "MlmcSchedule", "plan_schedule", "nested_mc_estimate", "classical_level_sample",
    "classical_mlmc_estimate", "estimate_sequence_params",
    "LevelOutput", "b_level", "a_level", "q_nest_expect_08", "q_nest_expect", "qa_mlmc_estimate", "median",
]
