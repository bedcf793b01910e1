"""Synthetic sparse channels, training sequences, noise, error metrics and Cramér-Rao bounds."""
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from numerics.api import TrainingModel, build_training_matrix, trace_inverse_gram
from simkit.errors import InvalidChannelError

# Substream purposes; each (snr point, trial, purpose) gets its own generator.
CHANNEL_STREAM = 0
TRAINING_STREAM = 1
NOISE_STREAM = 2


@dataclass(frozen=True, eq=False)
class SparseChannel:
    """Tap vector ``h`` with support indicator ``b`` and sparsity ``K``."""
    h: np.ndarray
    b: np.ndarray
    K: int

    @property
    def M(self) -> int:
        return int(self.h.shape[0])

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.b)

    def validate(self) -> None:
        if self.b.shape != self.h.shape:
            raise InvalidChannelError(f"Support shape {self.b.shape} differs from tap shape {self.h.shape}")
        if not np.array_equal(self.b != 0, self.h != 0):
            raise InvalidChannelError("Support indicator disagrees with the nonzero taps")
        if int(np.count_nonzero(self.b)) != self.K or self.K > self.M:
            raise InvalidChannelError(f"Support size {int(np.count_nonzero(self.b))} does not match K={self.K}")


def substream(seed: int, snr_index: int, trial: int, purpose: int) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, snr_index, trial, purpose)``.

    Streams never overlap, so the data one algorithm sees does not depend on which other
    algorithms run or in which order trials are evaluated.
    """
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(snr_index, trial, purpose))
    return np.random.Generator(np.random.Philox(sequence))


def generate_sparse_channel(M: int, K: int, rng: np.random.Generator) -> SparseChannel:
    """Uniform random size-``K`` support with i.i.d. standard normal taps."""
    if not 0 <= K <= M:
        raise InvalidChannelError(f"Sparsity must satisfy 0 <= K <= M, got K={K}, M={M}")
    support = np.sort(rng.choice(M, size=K, replace=False))
    h = np.zeros(M)
    b = np.zeros(M, dtype=np.int8)
    taps = rng.standard_normal(K)
    # a tap drawn as exactly zero would break b <=> h != 0
    while np.any(taps == 0.0):
        taps[taps == 0.0] = rng.standard_normal(int(np.sum(taps == 0.0)))
    h[support] = taps
    b[support] = 1
    return SparseChannel(h=h, b=b, K=K)


def generate_training_sequence(L: int, rng: np.random.Generator) -> np.ndarray:
    """I.i.d. symmetric Bernoulli symbols in {+1, -1}."""
    if L < 1:
        raise InvalidChannelError(f"Training length must be positive, got L={L}")
    return np.where(rng.integers(0, 2, size=L) == 1, 1.0, -1.0)


def sigma_from_snr(model: TrainingModel, h, snr_db: float) -> float:
    """Noise standard deviation for ``SNR = ||U h||^2 / (N sigma^2)``.

    A zero channel or an infinite SNR gives ``0``.
    """
    clean = model.U @ np.asarray(h, dtype=np.float64)
    power = float(clean @ clean) / model.N
    return float(np.sqrt(power / 10.0 ** (snr_db / 10.0)))


def awgn(clean, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Add i.i.d. zero-mean Gaussian noise of standard deviation ``sigma``."""
    clean = np.asarray(clean, dtype=np.float64)
    if sigma < 0:
        raise InvalidChannelError(f"Noise standard deviation must be nonnegative, got {sigma}")
    if sigma == 0:
        return clean.copy()
    return clean + sigma * rng.standard_normal(clean.shape)


def crb_us(model: TrainingModel, sigma2: float) -> float:
    """Unstructured bound ``sigma^2 Tr{(U^T U)^-1}``."""
    return float(sigma2 * trace_inverse_gram(model.U))


def crb_s(model: TrainingModel, channel: SparseChannel, sigma2: float) -> float:
    """Genie-aided structured bound ``sigma^2 Tr{(U_tau^T U_tau)^-1}`` on the true support.

    An empty support has nothing to estimate and gives ``0``.
    """
    support = channel.support
    if support.size == 0:
        return 0.0
    return float(sigma2 * trace_inverse_gram(model.columns(support)))


def squared_error(h, h_hat) -> float:
    difference = np.asarray(h, dtype=np.float64) - np.asarray(h_hat, dtype=np.float64)
    return float(difference @ difference)


def normalized_squared_error(h, h_hat) -> float:
    """``||h - h_hat||^2 / ||h||^2``; ``nan`` for a zero channel."""
    energy = float(np.asarray(h, dtype=np.float64) @ np.asarray(h, dtype=np.float64))
    if energy == 0.0:
        return float("nan")
    return squared_error(h, h_hat) / energy


@dataclass
class TradeoffPoint:
    L: int
    states: int
    crb_s: float
    crb_us: float


def crb_training_tradeoff(
        M: int,
        K: int,
        L_values: Sequence[int],
        trials: int = 100,
        seed: int = 0,
        sigma2: float = 1.0,
) -> List[TradeoffPoint]:
    """Mean bounds per training length with the training energy held at 1.

    Symbols are ``+-1 / sqrt(L)``: a shorter sequence gives the detector fewer states
    (``2^(L-1)``) but a larger bound.
    """
    points = []
    for index, L in enumerate(L_values):
        structured, unstructured = [], []
        for trial in range(trials):
            u = generate_training_sequence(L, substream(seed, index, trial, TRAINING_STREAM)) / np.sqrt(L)
            model = build_training_matrix(u, M)
            channel = generate_sparse_channel(M, K, substream(seed, index, trial, CHANNEL_STREAM))
            structured.append(crb_s(model, channel, sigma2))
            unstructured.append(crb_us(model, sigma2))
        points.append(TradeoffPoint(
            L=int(L),
            states=1 << (int(L) - 1),
            crb_s=float(np.mean(structured)),
            crb_us=float(np.mean(unstructured)),
        ))
    return points
