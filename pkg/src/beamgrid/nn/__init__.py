"""Minimal float64 deep-learning engine: 3D convolution, dense layers,
softmax cross entropy, backprop, Adam/SGD, and FLOPs accounting."""

from .builders import (
    MINI_FILTERS,
    MINI_KERNELS,
    SABA_WIDTHS,
    VDBAN_FC_WIDTHS,
    VDBAN_FILTERS,
    VDBAN_KERNELS,
    VDBAN_MLP_WIDTHS,
    VDF_CHANNELS,
    build_saba,
    build_vdban,
    build_vdban_mini,
    count_flops,
    saba_specs,
    vdban_mini_specs,
    vdban_specs,
)
from .layers import Conv3D, Dense, Flatten, ReLU, ShapeMismatch, SoftmaxCrossEntropy
from .network import LayerSpec, Network, predict_logits
from .training import (
    Adam,
    Dataset,
    DivergenceDetected,
    EmptyDataset,
    SGD,
    SPLIT_TEST,
    SPLIT_TRAIN,
    SPLIT_VAL,
    TrainConfig,
    TrainHistory,
    top1_accuracy,
    train,
)

__all__ = [
    "Adam", "Conv3D", "Dataset", "Dense", "DivergenceDetected", "EmptyDataset",
    "Flatten", "LayerSpec", "Network", "ReLU", "SGD", "ShapeMismatch",
    "SoftmaxCrossEntropy", "TrainConfig", "TrainHistory",
    "SPLIT_TRAIN", "SPLIT_VAL", "SPLIT_TEST",
    "MINI_FILTERS", "MINI_KERNELS", "SABA_WIDTHS", "VDBAN_FC_WIDTHS",
    "VDBAN_FILTERS", "VDBAN_KERNELS", "VDBAN_MLP_WIDTHS", "VDF_CHANNELS",
    "build_saba", "build_vdban", "build_vdban_mini", "count_flops",
    "predict_logits", "saba_specs", "top1_accuracy", "train",
    "vdban_mini_specs", "vdban_specs",
]
