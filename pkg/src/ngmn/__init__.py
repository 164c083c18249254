"""Multi-layer classifiers trained by closed-form updates.

Ridge-regression feature layers are fitted layer by layer in
pre-activation space, label information is passed down by low-rank
back-substitution, and an adaptive-weight multi-class SVM constrained to a
flexible Stiefel manifold serves as the decision layer.
"""

from .activations import Activation, softmax_columns
from .data_eval import Dataset, accuracy, load_csv, load_idx, macro_f1, normalize_rows, split
from .decision_layer import DecisionState, fit_decision_layer, predict_decision
from .manifold_net import ModelConfig, NetworkModel, load_model, predict, save_model, train
from .ridge_net import LayerParams, RidgeConfig, predict_ridge, train_ridge_network

__all__ = [
    "Activation",
    "softmax_columns",
    "Dataset",
    "accuracy",
    "load_csv",
    "load_idx",
    "macro_f1",
    "normalize_rows",
    "split",
    "DecisionState",
    "fit_decision_layer",
    "predict_decision",
    "ModelConfig",
    "NetworkModel",
    "load_model",
    "predict",
    "save_model",
    "train",
    "LayerParams",
    "RidgeConfig",
    "predict_ridge",
    "train_ridge_network",
]

__version__ = "0.1.0"
