"""Datasets: seeded synthetic spectrograms, and the 8-command speech set.

Synthetic mode draws class-dependent mean patterns plus noise directly in
feature space, so the whole stack is testable without any audio on disk.
Speech mode expects the usual one-directory-per-command layout of 16 kHz
mono wav clips, takes up to 1000 clips per command, and splits them
800/125/75 per class (6400/1000/600 overall).
"""

from __future__ import annotations

import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .features import CLIP_SAMPLES, log_mel_spectrogram

COMMANDS = ("down", "go", "left", "no", "right", "stop", "up", "yes")
PER_CLASS = 1000
SPLIT = (800, 125, 75)  # train / validation / test, per class

SYNTH_TRAIN_PER_CLASS = 8
SYNTH_VAL_PER_CLASS = 4
SYNTH_NOISE = 0.5


@dataclass
class Dataset:
    train_x: np.ndarray  # (n, 1, 124, 129) float32
    train_y: np.ndarray  # (n,) int64
    val_x: np.ndarray
    val_y: np.ndarray
    test_x: np.ndarray | None = None
    test_y: np.ndarray | None = None

    @property
    def num_classes(self) -> int:
        return int(self.train_y.max()) + 1


def synthetic_dataset(seed: int, num_classes: int = len(COMMANDS)) -> Dataset:
    """Class-separable random spectrogram-shaped tensors; fully seeded."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x5C12)))
    means = rng.normal(0.0, 1.0, size=(num_classes, 124, 129)).astype(np.float32)

    def draw(per_class: int):
        xs, ys = [], []
        for c in range(num_classes):
            noise = rng.normal(0.0, SYNTH_NOISE, size=(per_class, 124, 129))
            xs.append(means[c] + noise.astype(np.float32))
            ys.extend([c] * per_class)
        x = np.concatenate(xs)[:, None, :, :].astype(np.float32)
        return x, np.asarray(ys, dtype=np.int64)

    train_x, train_y = draw(SYNTH_TRAIN_PER_CLASS)
    val_x, val_y = draw(SYNTH_VAL_PER_CLASS)
    return Dataset(train_x, train_y, val_x, val_y)


def load_wav(path: Path) -> np.ndarray:
    with wave.open(str(path), "rb") as fh:
        if fh.getsampwidth() != 2:
            raise ValueError(f"{path}: expected 16-bit PCM")
        frames = np.frombuffer(fh.readframes(fh.getnframes()), dtype=np.int16)
        channels = fh.getnchannels()
    data = frames.astype(np.float32) / 32768.0
    if channels > 1:
        data = data.reshape(-1, channels).mean(axis=1)
    return data


def speech_commands_dataset(root: Path, seed: int, commands=COMMANDS,
                            per_class: int = PER_CLASS, split=SPLIT) -> Dataset:
    """Load, featurize, and split the command directories under ``root``."""
    root = Path(root)
    missing = [c for c in commands if not (root / c).is_dir()]
    if missing:
        raise FileNotFoundError(f"{root} is missing command directories: {missing}")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xD47A)))
    buckets: dict[str, list] = {"train": [], "val": [], "test": []}
    for label, command in enumerate(commands):
        clips = sorted((root / command).glob("*.wav"))
        if not clips:
            raise FileNotFoundError(f"no wav clips under {root / command}")
        clips = clips[:per_class]
        order = rng.permutation(len(clips))
        n_train = min(split[0], len(clips))
        n_val = min(split[1], max(len(clips) - n_train, 0))
        picks = {
            "train": order[:n_train],
            "val": order[n_train:n_train + n_val],
            "test": order[n_train + n_val:n_train + n_val + split[2]],
        }
        for part, indices in picks.items():
            for i in indices:
                features = log_mel_spectrogram(load_wav(clips[i]))
                buckets[part].append((features, label))

    def stack(part):
        if not buckets[part]:
            return None, None
        xs = np.stack([f for f, _ in buckets[part]])[:, None, :, :].astype(np.float32)
        ys = np.asarray([label for _, label in buckets[part]], dtype=np.int64)
        return xs, ys

    train_x, train_y = stack("train")
    val_x, val_y = stack("val")
    test_x, test_y = stack("test")
    if val_x is None:
        raise ValueError(f"{root}: not enough clips to form a validation split")
    return Dataset(train_x, train_y, val_x, val_y, test_x, test_y)
