"""Simultaneous-move AlphaZero for two-player zero-sum Markov games."""
from .exact import backward_induction, best_response_value, joint_exploitability
from .game import GameSpec, StepResult, encode_state, step
from .matgame import (GameSolution, brute_force_solve, exploitability_matrix, regret_matching_solve,
                      solve_lp)
from .mcts import SearchConfig, SearchResult, UniformEvaluator, run_search
from .net import NetConfig, NetworkEvaluator, init_params, load_checkpoint, save_checkpoint
from .train import TrainConfig, train_loop

__version__ = "0.1.0"

__all__ = [
    "GameSolution", "solve_lp", "brute_force_solve", "regret_matching_solve", "exploitability_matrix",
    "GameSpec", "StepResult", "step", "encode_state",
    "backward_induction", "best_response_value", "joint_exploitability",
    "SearchConfig", "SearchResult", "UniformEvaluator", "run_search",
    "NetConfig", "NetworkEvaluator", "init_params", "save_checkpoint", "load_checkpoint",
    "TrainConfig", "train_loop",
]
