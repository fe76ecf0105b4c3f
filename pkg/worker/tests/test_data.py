import wave

import numpy as np
import pytest

from scrworker.data import (
    COMMANDS,
    load_wav,
    speech_commands_dataset,
    synthetic_dataset,
)
from scrworker.features import log_mel_spectrogram, mel_filterbank, pad_or_trim


class TestFeatures:
    def test_expected_shape(self):
        wave_data = np.random.default_rng(0).normal(0, 0.1, 16000)
        assert log_mel_spectrogram(wave_data).shape == (124, 129)

    def test_short_clips_padded_long_clips_trimmed(self):
        assert log_mel_spectrogram(np.zeros(4000)).shape == (124, 129)
        assert log_mel_spectrogram(np.zeros(20000)).shape == (124, 129)
        assert pad_or_trim(np.ones(10)).shape == (16000,)

    def test_filterbank_shape_and_sign(self):
        bank = mel_filterbank()
        assert bank.shape == (129, 129)
        assert (bank >= 0).all()

    def test_deterministic(self):
        wave_data = np.random.default_rng(1).normal(0, 0.1, 16000)
        assert np.array_equal(log_mel_spectrogram(wave_data), log_mel_spectrogram(wave_data))


class TestSyntheticDataset:
    def test_shapes_and_labels(self):
        ds = synthetic_dataset(0)
        assert ds.train_x.shape == (64, 1, 124, 129)
        assert ds.val_x.shape == (32, 1, 124, 129)
        assert sorted(set(ds.train_y.tolist())) == list(range(8))
        assert ds.num_classes == 8

    def test_seed_determines_content(self):
        a, b, c = synthetic_dataset(5), synthetic_dataset(5), synthetic_dataset(6)
        assert np.array_equal(a.train_x, b.train_x)
        assert not np.array_equal(a.train_x, c.train_x)

    def test_class_means_differ(self):
        ds = synthetic_dataset(2)
        by_class = [ds.train_x[ds.train_y == c].mean(axis=0) for c in range(8)]
        assert not np.allclose(by_class[0], by_class[1])


def write_wav(path, samples, rate=16000):
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(rate)
        fh.writeframes((np.clip(samples, -1, 1) * 32767).astype(np.int16).tobytes())


class TestSpeechCommands:
    def make_tree(self, root, per_class=12):
        rng = np.random.default_rng(3)
        for c, command in enumerate(COMMANDS):
            d = root / command
            d.mkdir(parents=True)
            for i in range(per_class):
                tone = np.sin(2 * np.pi * (200 + 50 * c) * np.arange(16000) / 16000)
                write_wav(d / f"clip{i:03d}.wav", 0.2 * tone + 0.01 * rng.normal(size=16000))
        return root

    def test_load_wav_round_trip(self, tmp_path):
        samples = np.random.default_rng(0).uniform(-0.5, 0.5, 16000)
        write_wav(tmp_path / "x.wav", samples)
        loaded = load_wav(tmp_path / "x.wav")
        assert loaded.shape == (16000,)
        assert np.abs(loaded - samples).max() < 1e-3

    def test_split_counts(self, tmp_path):
        root = self.make_tree(tmp_path / "gsc")
        ds = speech_commands_dataset(root, seed=0, per_class=12, split=(8, 2, 2))
        assert ds.train_x.shape[0] == 64
        assert ds.val_x.shape[0] == 16
        assert ds.test_x.shape[0] == 16
        assert ds.train_x.shape[1:] == (1, 124, 129)
        assert sorted(set(ds.val_y.tolist())) == list(range(8))

    def test_seeded_split_is_stable(self, tmp_path):
        root = self.make_tree(tmp_path / "gsc")
        a = speech_commands_dataset(root, seed=4, per_class=12, split=(8, 2, 2))
        b = speech_commands_dataset(root, seed=4, per_class=12, split=(8, 2, 2))
        assert np.array_equal(a.train_y, b.train_y)
        assert np.array_equal(a.train_x, b.train_x)

    def test_missing_command_directory(self, tmp_path):
        (tmp_path / "down").mkdir()
        with pytest.raises(FileNotFoundError, match="missing command directories"):
            speech_commands_dataset(tmp_path, seed=0)
