"""Classifier architectures over the voxel features, plus FLOPs accounting."""

from __future__ import annotations

import numpy as np

from .network import LayerSpec, Network

# Grid-feature 3D-CNN: ten conv layers, a four-layer FC stack, and a final
# three-layer MLP ending at the beam-pair class count.
VDBAN_FILTERS = (6, 6, 8, 8, 16, 16, 32, 32, 64, 64)
VDBAN_KERNELS = ((5, 5, 5), (5, 5, 5), (5, 5, 3), (5, 5, 3), (5, 3, 3),
                 (5, 3, 3), (3, 3, 3), (3, 3, 3), (3, 3, 3), (3, 3, 3))
VDBAN_FC_WIDTHS = (512, 256, 128, 64)
VDBAN_MLP_WIDTHS = (512, 1024)

# Fully connected baseline over the flat situational-awareness vector:
# 13 layers ending at the class count.
SABA_WIDTHS = (128, 128, 256, 256, 512, 1024, 1024, 1024, 1024, 1024, 1024, 1024)

# Reduced sibling of the grid-feature CNN for desk-scale experiments.
MINI_FILTERS = (8, 16)
MINI_KERNELS = ((3, 3, 3), (3, 3, 3))
MINI_FC_WIDTHS = (64,)
MINI_MLP_WIDTHS = (64,)

VDF_CHANNELS = 7


def _conv_fc_specs(grid_dims, in_channels, filters, kernels, fc_widths, mlp_widths,
                   classes) -> list[LayerSpec]:
    specs: list[LayerSpec] = []
    channels = in_channels
    for out_c, kernel in zip(filters, kernels):
        specs.append(LayerSpec.conv3d(channels, out_c, kernel))
        specs.append(LayerSpec.relu())
        channels = out_c
    specs.append(LayerSpec.flatten())
    width = channels * int(np.prod(grid_dims))
    for out_w in fc_widths:
        specs.append(LayerSpec.fc(width, out_w))
        specs.append(LayerSpec.relu())
        width = out_w
    mlp = tuple(mlp_widths) + (classes,)
    for i, out_w in enumerate(mlp):
        specs.append(LayerSpec.fc(width, out_w))
        if i < len(mlp) - 1:
            specs.append(LayerSpec.relu())
        width = out_w
    specs.append(LayerSpec.softmax_ce())
    return specs


def vdban_specs(grid_dims=(14, 6, 6), classes: int = 365) -> list[LayerSpec]:
    return _conv_fc_specs(grid_dims, VDF_CHANNELS, VDBAN_FILTERS, VDBAN_KERNELS,
                          VDBAN_FC_WIDTHS, VDBAN_MLP_WIDTHS, classes)


def build_vdban(grid_dims=(14, 6, 6), classes: int = 365, seed: int = 0) -> Network:
    """10 same-padded 3D conv layers, FC stack 512/256/128/64, MLP 512/1024/classes,
    ReLU after every parameterized layer except the last."""
    return Network(vdban_specs(grid_dims, classes), seed=seed)


def vdban_mini_specs(grid_dims=(8, 4, 4), classes: int = 16) -> list[LayerSpec]:
    return _conv_fc_specs(grid_dims, VDF_CHANNELS, MINI_FILTERS, MINI_KERNELS,
                          MINI_FC_WIDTHS, MINI_MLP_WIDTHS, classes)


def build_vdban_mini(grid_dims=(8, 4, 4), classes: int = 16, seed: int = 0) -> Network:
    """Two-conv reduction of the grid-feature CNN; trains in seconds on a laptop."""
    return Network(vdban_mini_specs(grid_dims, classes), seed=seed)


def saba_specs(input_width: int, classes: int = 365) -> list[LayerSpec]:
    specs: list[LayerSpec] = []
    width = input_width
    for out_w in SABA_WIDTHS:
        specs.append(LayerSpec.fc(width, out_w))
        specs.append(LayerSpec.relu())
        width = out_w
    specs.append(LayerSpec.fc(width, classes))
    specs.append(LayerSpec.softmax_ce())
    return specs


def build_saba(input_width: int, classes: int = 365, seed: int = 0) -> Network:
    """13 FC layers (128, 128, 256, 256, 512, then 1024s, ending at classes)."""
    return Network(saba_specs(input_width, classes), seed=seed)


def count_flops(network: Network | list[LayerSpec], input_shape) -> int:
    """Forward-pass FLOPs with a multiply-add counted as 2.

    conv3d contributes 2 * output-volume * out_ch * in_ch * kernel-volume
    (same padding keeps the output volume equal to the input volume);
    fc contributes 2 * in_width * out_width.  Other layers count zero.
    """
    specs = network.specs if isinstance(network, Network) else list(network)
    spatial = tuple(int(d) for d in input_shape[1:]) if len(input_shape) > 1 else ()
    total = 0
    for spec in specs:
        if spec.kind == "conv3d":
            volume = int(np.prod(spatial))
            total += 2 * volume * spec.out_channels * spec.in_channels * int(np.prod(spec.kernel))
        elif spec.kind == "fc":
            total += 2 * spec.in_width * spec.out_width
    return total
