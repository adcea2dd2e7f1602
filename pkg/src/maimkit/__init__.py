"""Multi-agent influence diagrams and models."""
from .model import (
    CHANCE, DECISION, UTILITY, NULL, Cpd, DecisionRule, JointDistribution, MaidGraph, Maim,
    MirrorCpd, ModelError, Node, PureProfile, check, fix_decisions, induce, validate,
)
from .inference import (
    Table, Unconditioned, ZeroProbabilityError, best_response, conditional_expected_utility,
    expected_utilities, expected_utility, is_feasible_context, is_null_context, marginal,
)
from .relevance import (
    condensed_relevance_graph, d_separated, r_reachable, relevance_graph, relevant_nodes,
    strategically_relevant_semantic,
)
from .subgames import is_feasible_subgame, maid_subgame, maim_subgames, subgame_bases
from .equilibria import is_nash, is_thpe, perturb, pure_nash, spe_solve, undominated_check_2p
from .efg import Efg, export_efg_text
from .convert import absentminded_transform, check_equivalence, efg_to_maim, maim_to_efg
from .io import load_model, load_tree, save_model, save_tree

__version__ = "0.1.0"

__all__ = [
    "CHANCE", "DECISION", "UTILITY", "NULL", "Cpd", "DecisionRule", "JointDistribution", "MaidGraph",
    "Maim", "MirrorCpd", "ModelError", "Node", "PureProfile", "check", "fix_decisions", "induce",
    "validate", "Table", "Unconditioned", "ZeroProbabilityError", "best_response",
    "conditional_expected_utility", "expected_utilities", "expected_utility", "is_feasible_context",
    "is_null_context", "marginal", "condensed_relevance_graph", "d_separated", "r_reachable",
    "relevance_graph", "relevant_nodes", "strategically_relevant_semantic", "is_feasible_subgame",
    "maid_subgame", "maim_subgames", "subgame_bases", "is_nash", "is_thpe", "perturb", "pure_nash",
    "spe_solve", "undominated_check_2p", "Efg", "export_efg_text", "absentminded_transform",
    "check_equivalence", "efg_to_maim", "maim_to_efg", "load_model", "load_tree", "save_model",
    "save_tree",
]
