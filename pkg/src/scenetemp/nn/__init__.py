"""Hand-written neural network building blocks on numpy."""

from .adam import Adam
from .cnn import CnnModel
from .gradcheck import GradCheckReport, grad_check
from .layers import (Conv2D, Dense, Dropout, Flatten, Layer, MaxPool2D, ReLU,
                     Softmax, glorot_uniform)
from .losses import PROB_FLOOR, cross_entropy, sequence_sum_squares
from .lstm import LstmCell, SequenceModel

__all__ = [
    "Adam", "CnnModel", "Conv2D", "Dense", "Dropout", "Flatten",
    "GradCheckReport", "Layer", "LstmCell", "MaxPool2D", "PROB_FLOOR",
    "ReLU", "SequenceModel", "Softmax", "cross_entropy", "glorot_uniform",
    "grad_check", "sequence_sum_squares",
]
