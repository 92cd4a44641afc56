"""Multi-attributed graph translation with node-edge co-evolving blocks."""
from .graph import Dataset, Graph, GraphPair, load_dataset, permute_graph, save_dataset, validate_graph
from .model import ModelConfig, ModelParams, forward, init_model
from .training import OptimizerConfig, TrainState, train
from .metrics import EvalReport, evaluate
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint

__all__ = [
    "Dataset", "Graph", "GraphPair", "load_dataset", "save_dataset", "permute_graph", "validate_graph",
    "ModelConfig", "ModelParams", "forward", "init_model",
    "OptimizerConfig", "TrainState", "train",
    "EvalReport", "evaluate",
    "Checkpoint", "load_checkpoint", "save_checkpoint",
]
__version__ = "0.1.0"
