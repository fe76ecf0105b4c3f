"""VGG-style CNN built from a hyperparameter assignment.

The layer layout is fixed: five convolution blocks of (2, 2, 3, 3, 3) conv
layers, each block closed by a 2x2/stride-2 max pool, then two searchable
fully connected layers and the output head; 16 weight layers in total.
Filter size, filter count, activation, optimizer, dropout rate, and FC
widths come from the assignment; pooling never does.
"""

from __future__ import annotations

import torch
from torch import nn

CONV_BLOCKS = (2, 2, 3, 3, 3)
INPUT_SHAPE = (124, 129)
NUM_CLASSES = 8
LEARNING_RATE = 1e-3

ACTIVATIONS = {"ReLU": nn.ReLU, "SELU": nn.SELU, "ELU": nn.ELU}
OPTIMIZERS = {
    "SGD": torch.optim.SGD,
    "Adam": torch.optim.Adam,
    "Adagrad": torch.optim.Adagrad,
    "Adamax": torch.optim.Adamax,
}


def slot_value(phenotype: dict, slot: str, key: str):
    """Resolve a template slot, falling back to a space-wide gene."""
    for name in (f"{slot}.{key}", f"global.{key}"):
        if name in phenotype:
            return phenotype[name]
    raise KeyError(f"phenotype has no gene for template slot {slot}.{key}")


def _kernel(value) -> int:
    if isinstance(value, str):
        if "x" not in value:
            raise ValueError(f"bad filter size {value!r}")
        return int(value.split("x")[0])
    return int(value)


def _activation(phenotype: dict) -> type[nn.Module]:
    name = str(slot_value(phenotype, "global", "activation"))
    if name not in ACTIVATIONS:
        raise ValueError(f"unknown activation {name!r}")
    return ACTIVATIONS[name]


def build_model(phenotype: dict, num_classes: int = NUM_CLASSES, scale: int = 1) -> nn.Module:
    """Instantiate the network; ``scale`` divides filter counts and FC widths
    so synthetic-mode evaluations stay fast."""
    act = _activation(phenotype)
    dropout = float(slot_value(phenotype, "global", "dropout"))
    if not 0.0 <= dropout < 1.0:
        raise ValueError(f"dropout rate {dropout} out of range")

    layers: list[nn.Module] = []
    in_channels = 1
    for block, n_convs in enumerate(CONV_BLOCKS, start=1):
        slot = f"conv_block_{block}"
        kernel = _kernel(slot_value(phenotype, slot, "filter_size"))
        filters = max(2, int(slot_value(phenotype, slot, "num_filters")) // scale)
        for _ in range(n_convs):
            layers.append(nn.Conv2d(in_channels, filters, kernel, padding=kernel // 2))
            layers.append(nn.BatchNorm2d(filters))
            layers.append(act())
            in_channels = filters
        layers.append(nn.MaxPool2d(2))

    rows, cols = INPUT_SHAPE
    for _ in CONV_BLOCKS:
        rows, cols = rows // 2, cols // 2
    flat = in_channels * rows * cols

    layers.append(nn.Flatten())
    for fc in (1, 2):
        width = max(8, int(slot_value(phenotype, f"fc_{fc}", "neurons")) // scale)
        layers.append(nn.Linear(flat, width))
        layers.append(act())
        layers.append(nn.Dropout(dropout))
        flat = width
    layers.append(nn.Linear(flat, num_classes))

    model = nn.Sequential(*layers)
    model.apply(_init_xavier)
    return model


def _init_xavier(module: nn.Module) -> None:
    if isinstance(module, (nn.Conv2d, nn.Linear)):
        nn.init.xavier_uniform_(module.weight)
        if module.bias is not None:
            nn.init.zeros_(module.bias)


def build_optimizer(phenotype: dict, model: nn.Module) -> torch.optim.Optimizer:
    name = str(slot_value(phenotype, "global", "optimizer"))
    if name not in OPTIMIZERS:
        raise ValueError(f"unknown optimizer {name!r}")
    return OPTIMIZERS[name](model.parameters(), lr=LEARNING_RATE)


def count_weight_layers(model: nn.Module) -> int:
    return sum(1 for m in model.modules() if isinstance(m, (nn.Conv2d, nn.Linear)))
