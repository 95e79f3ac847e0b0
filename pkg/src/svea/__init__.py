"""Feature selection by Shapley-value apportioning of hinge-loss training error."""

from .data import Dataset, load_csv, train_test_split, disjoint_partition
from .game import GameCache, TabularGame, enumerate_all, train_classifier
from .shapley import exact_shapley, monte_carlo_shapley, permutation_shapley, svea, game_svea
from .analysis import select_features

__version__ = "0.1.0"

__all__ = [
    "Dataset", "load_csv", "train_test_split", "disjoint_partition",
    "GameCache", "TabularGame", "enumerate_all", "train_classifier",
    "exact_shapley", "monte_carlo_shapley", "permutation_shapley", "svea", "game_svea",
    "select_features",
]
