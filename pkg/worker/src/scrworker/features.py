"""Log-mel spectrogram front end for 1-second, 16 kHz audio.

256-sample Hann frames hopped by 128 give 124 frames; a 129-band mel
filterbank over the 129 FFT bins yields the (124, 129) input the models
expect.
"""

from __future__ import annotations

import numpy as np

SAMPLE_RATE = 16_000
N_FFT = 256
HOP = 128
N_MELS = 129
CLIP_SAMPLES = SAMPLE_RATE  # one second


def _hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=float) / 700.0)


def _mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=float) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int = N_MELS, n_fft: int = N_FFT,
                   sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """Triangular filters, shape (n_mels, n_fft // 2 + 1)."""
    n_bins = n_fft // 2 + 1
    fft_freqs = np.linspace(0.0, sample_rate / 2.0, n_bins)
    mel_points = np.linspace(_hz_to_mel(0.0), _hz_to_mel(sample_rate / 2.0), n_mels + 2)
    hz_points = _mel_to_hz(mel_points)
    bank = np.zeros((n_mels, n_bins))
    for m in range(n_mels):
        lower, center, upper = hz_points[m], hz_points[m + 1], hz_points[m + 2]
        rising = (fft_freqs - lower) / max(center - lower, 1e-9)
        falling = (upper - fft_freqs) / max(upper - center, 1e-9)
        bank[m] = np.clip(np.minimum(rising, falling), 0.0, None)
    return bank


def pad_or_trim(wave: np.ndarray, length: int = CLIP_SAMPLES) -> np.ndarray:
    wave = np.asarray(wave, dtype=np.float32).ravel()
    if wave.size >= length:
        return wave[:length]
    return np.pad(wave, (0, length - wave.size))


def log_mel_spectrogram(wave: np.ndarray) -> np.ndarray:
    """(124, 129) log-mel features for a padded/trimmed 16 kHz clip."""
    wave = pad_or_trim(wave)
    window = np.hanning(N_FFT).astype(np.float32)
    n_frames = 1 + (wave.size - N_FFT) // HOP
    idx = np.arange(N_FFT)[None, :] + HOP * np.arange(n_frames)[:, None]
    frames = wave[idx] * window
    power = np.abs(np.fft.rfft(frames, axis=1)) ** 2
    mel = power @ mel_filterbank().T
    return np.log(mel + 1e-6).astype(np.float32)
