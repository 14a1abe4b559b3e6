"""Minimal differentiable stack: cells, layers, losses, optimizers, grad check."""

from .config import TrainConfig
from .gradcheck import GradCheckReport, grad_check
from .layers import (
    BidirectionalLayer,
    Conv1dLayer,
    DenseLayer,
    DropoutLayer,
    EmbeddingLayer,
    RecurrentDirection,
)
from .ops import (
    apply_dropout,
    bidirectional_forward,
    conv1d_forward,
    dense_softmax,
    gru_cell_forward,
    init_cell_params,
    loss,
    lstm_cell_forward,
    sigmoid,
    softmax,
)
from .optim import OPTIMIZER_KINDS, Adam, Optimizer, SGD, make_optimizer

__all__ = [
    "Adam",
    "BidirectionalLayer",
    "Conv1dLayer",
    "DenseLayer",
    "DropoutLayer",
    "EmbeddingLayer",
    "GradCheckReport",
    "OPTIMIZER_KINDS",
    "Optimizer",
    "RecurrentDirection",
    "SGD",
    "TrainConfig",
    "apply_dropout",
    "bidirectional_forward",
    "conv1d_forward",
    "dense_softmax",
    "grad_check",
    "gru_cell_forward",
    "init_cell_params",
    "loss",
    "lstm_cell_forward",
    "make_optimizer",
    "sigmoid",
    "softmax",
]
