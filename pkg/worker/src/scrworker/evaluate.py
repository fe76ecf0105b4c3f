"""Train a candidate configuration and score it on the validation split."""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from .data import Dataset
from .model import build_model, build_optimizer

BATCH_SIZE = 32
# Synthetic evaluations shrink filter counts and FC widths by this factor so
# one evaluation takes seconds, not minutes.
SYNTHETIC_SCALE = 32


def confusion_matrix(y_true: np.ndarray, y_pred: np.ndarray, num_classes: int) -> np.ndarray:
    matrix = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(matrix, (y_true, y_pred), 1)
    return matrix


def evaluate(phenotype: dict, epochs: int, seed: int, dataset: Dataset,
             scale: int = 1, device: str = "cpu") -> tuple[float, dict]:
    """Returns (validation accuracy, metrics payload for the wire)."""
    torch.manual_seed(seed)
    dev = torch.device(device)
    num_classes = dataset.num_classes
    model = build_model(phenotype, num_classes=num_classes, scale=scale).to(dev)
    optimizer = build_optimizer(phenotype, model)
    loss_fn = nn.CrossEntropyLoss()

    train_x = torch.from_numpy(dataset.train_x).to(dev)
    train_y = torch.from_numpy(dataset.train_y).to(dev)
    shuffler = torch.Generator().manual_seed(seed)

    model.train()
    for _ in range(epochs):
        order = torch.randperm(len(train_x), generator=shuffler)
        for start in range(0, len(order), BATCH_SIZE):
            batch = order[start:start + BATCH_SIZE]
            optimizer.zero_grad()
            loss = loss_fn(model(train_x[batch]), train_y[batch])
            loss.backward()
            optimizer.step()

    model.eval()
    predictions = []
    with torch.no_grad():
        val_x = torch.from_numpy(dataset.val_x).to(dev)
        for start in range(0, len(val_x), BATCH_SIZE):
            logits = model(val_x[start:start + BATCH_SIZE])
            predictions.append(logits.argmax(dim=1).cpu().numpy())
    y_pred = np.concatenate(predictions)
    confusion = confusion_matrix(dataset.val_y, y_pred, num_classes)
    accuracy = float(np.trace(confusion) / confusion.sum())
    metrics = {"accuracy": accuracy, "confusion": [[int(v) for v in row] for row in confusion]}
    return accuracy, metrics
