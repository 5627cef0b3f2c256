"""Finite-horizon Dec-POMDP planning with prediction rewards on the joint state estimate."""

from .apas import Apas, ApasConfig, ApasReport, run_apas, run_apas_no_adaptation
from .beliefs import (PlanTimeStatistic, belief_update, condition, expected_stage_reward, filter_sequence,
                      propagate, statistic_update)
from .benchmarks import DomainSpec, build_domain, coupled_tag, decoupled_chains, random_instance, single_tiger
from .brute_force import BruteForceResult, brute_force, brute_force_pair
from .conversion import (ConvertedModel, DecRhoPomdp, convert_to_standard, decentralization_gap,
                         expected_decentralized_reward, optimal_prediction_rule)
from .evaluation import evaluate_exact, evaluate_mc, rollout, simulate
from .exceptions import (BudgetExceededError, DecRhoError, DpomdpParseError, DpomdpSemanticError,
                         DpomdpSyntaxError, ModelError, PolicyStructureError, ZeroLikelihoodError)
from .model import DecPomdpModel, enumerate_joint, validate_model
from .planner import PlannerParams, PolicyGraphImprovement, improve_once, plan
from .policy import FscNode, JointPolicy, LayeredFsc, PredictionRule, TreePolicy
from .rewards import (AlphaSet, ConvexReward, NegativeEntropy, TangentApproximation,
                      expected_centralized_reward, expected_true_final_reward, rho_value, sample_simplex,
                      tangent_at)

__version__ = "0.1.0"

__all__ = [
    "AlphaSet",
    "Apas",
    "ApasConfig",
    "ApasReport",
    "BruteForceResult",
    "BudgetExceededError",
    "ConvertedModel",
    "ConvexReward",
    "DecPomdpModel",
    "DecRhoError",
    "DecRhoPomdp",
    "DomainSpec",
    "DpomdpParseError",
    "DpomdpSemanticError",
    "DpomdpSyntaxError",
    "FscNode",
    "JointPolicy",
    "LayeredFsc",
    "ModelError",
    "NegativeEntropy",
    "PlanTimeStatistic",
    "PlannerParams",
    "PolicyGraphImprovement",
    "PolicyStructureError",
    "PredictionRule",
    "TangentApproximation",
    "TreePolicy",
    "ZeroLikelihoodError",
    "belief_update",
    "brute_force",
    "brute_force_pair",
    "build_domain",
    "condition",
    "convert_to_standard",
    "coupled_tag",
    "decentralization_gap",
    "decoupled_chains",
    "enumerate_joint",
    "evaluate_exact",
    "evaluate_mc",
    "expected_centralized_reward",
    "expected_decentralized_reward",
    "expected_stage_reward",
    "expected_true_final_reward",
    "filter_sequence",
    "improve_once",
    "optimal_prediction_rule",
    "plan",
    "propagate",
    "random_instance",
    "rho_value",
    "rollout",
    "run_apas",
    "run_apas_no_adaptation",
    "sample_simplex",
    "simulate",
    "single_tiger",
    "statistic_update",
    "tangent_at",
    "validate_model",
]
