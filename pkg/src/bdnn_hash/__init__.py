"""Binary deep neural network hashing (unsupervised and supervised) with Hamming retrieval."""

from .network import LayerSchedule, NetworkParams, encode, forward, load_model, save_model
from .optimizer import LbfgsConfig, minimize
from .search_eval import (
    euclidean_ground_truth,
    evaluate,
    mean_average_precision,
    pack,
    precision_at_radius,
    rank_by_hamming,
    unpack,
)
from .sh_bdnn import ShConfig, train_sh
from .uh_bdnn import UhConfig, train_uh

__all__ = [
    "LayerSchedule", "NetworkParams", "encode", "forward", "load_model", "save_model",
    "LbfgsConfig", "minimize",
    "euclidean_ground_truth", "evaluate", "mean_average_precision", "pack",
    "precision_at_radius", "rank_by_hamming", "unpack",
    "ShConfig", "train_sh", "UhConfig", "train_uh",
]
