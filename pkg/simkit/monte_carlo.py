import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

import numpy as np

from common_utils.logging_mixin import LoggingMixin
from configs.experiment_config import ExperimentConfig, KNOWN_ALGORITHMS
from estimators.api import lse_estimate, omapfg_estimate, omp_estimate, slse_genie
from estimators.errors import EstimatorError
from numerics.api import TrainingModel, build_training_matrix
from numerics.errors import NumericsError
from simkit.api import (
    CHANNEL_STREAM,
    NOISE_STREAM,
    TRAINING_STREAM,
    SparseChannel,
    awgn,
    crb_s,
    crb_us,
    generate_sparse_channel,
    generate_training_sequence,
    normalized_squared_error,
    sigma_from_snr,
    squared_error,
    substream,
)
from simkit.errors import UnknownAlgorithmError
from trellis_map.errors import TrellisError

# A point whose failure share exceeds this is flagged.
FAILURE_FLAG_FRACTION = 0.05

ESTIMATION_ERRORS = (NumericsError, TrellisError, EstimatorError)


@dataclass
class TrialData:
    model: TrainingModel
    channel: SparseChannel
    y: np.ndarray
    sigma2: float
    crb_s: float
    crb_us: float


@dataclass
class ResultRecord:
    algorithm: str
    snr_db: float
    mse: float
    nmse: float
    crb_s: float
    crb_us: float
    mean_iterations: float
    failures: int
    wall_time_s: float
    trials: int = 0
    flagged: bool = False


def draw_trial(cfg: ExperimentConfig, snr_index: int, trial: int) -> TrialData:
    """Draw the channel, training sequence and noisy observation of one trial."""
    snr_db = cfg.snr_grid_db[snr_index]
    channel = generate_sparse_channel(cfg.M, cfg.K, substream(cfg.seed, snr_index, trial, CHANNEL_STREAM))
    u = generate_training_sequence(cfg.L, substream(cfg.seed, snr_index, trial, TRAINING_STREAM))
    model = build_training_matrix(u, cfg.M)
    sigma = sigma_from_snr(model, channel.h, snr_db)
    y = awgn(model.U @ channel.h, sigma, substream(cfg.seed, snr_index, trial, NOISE_STREAM))
    sigma2 = sigma * sigma
    return TrialData(
        model=model,
        channel=channel,
        y=y,
        sigma2=sigma2,
        crb_s=crb_s(model, channel, sigma2),
        crb_us=crb_us(model, sigma2),
    )


def _omapfg(detector: str) -> Callable[[TrialData, ExperimentConfig], Tuple[np.ndarray, int]]:
    def run(data: TrialData, cfg: ExperimentConfig):
        output = omapfg_estimate(
            data.model, data.y, data.sigma2, cfg.prior_probability(),
            eps=cfg.eps, max_iter=cfg.max_iter, detector=detector,
        )
        return output.h_hat, output.iterations
    return run


def _omp(data: TrialData, cfg: ExperimentConfig):
    output = omp_estimate(data.model, data.y, cfg.K)
    return output.h_hat, output.iterations


def _lse(data: TrialData, cfg: ExperimentConfig):
    return lse_estimate(data.model, data.y), 0


def _slse(data: TrialData, cfg: ExperimentConfig):
    return slse_genie(data.model, data.y, data.channel.support), 0


ALGORITHMS: Dict[str, Callable[[TrialData, ExperimentConfig], Tuple[np.ndarray, int]]] = {
    "omapfg": _omapfg("trellis"),
    "omapfg_bruteforce": _omapfg("bruteforce"),
    "omp": _omp,
    "lse": _lse,
    "slse": _slse,
}
assert set(ALGORITHMS) == set(KNOWN_ALGORITHMS)


class _Accumulator:
    def __init__(self):
        self.errors: List[float] = []
        self.normalized: List[float] = []
        self.iterations: List[int] = []
        self.seconds = 0.0
        self.failures = 0


class MonteCarloRunner(LoggingMixin):
    """Runs every configured algorithm on shared seeded trials at each SNR point."""

    def __init__(self, cfg: ExperimentConfig, context=None):
        super().__init__(context)
        unknown = [name for name in cfg.algorithms if name not in ALGORITHMS]
        if unknown:
            raise UnknownAlgorithmError(f"Unknown algorithms: {unknown}")
        self.cfg = cfg
        self.total_seconds: Dict[str, float] = {name: 0.0 for name in cfg.algorithms}

    def run(self) -> List[ResultRecord]:
        records: List[ResultRecord] = []
        for snr_index, snr_db in enumerate(self.cfg.snr_grid_db):
            records.extend(self.run_point(snr_index, snr_db))
        return records

    def run_point(self, snr_index: int, snr_db: float) -> List[ResultRecord]:
        cfg = self.cfg
        accumulators = {name: _Accumulator() for name in cfg.algorithms}
        structured, unstructured = [], []

        for trial in range(cfg.trials):
            data = draw_trial(cfg, snr_index, trial)
            structured.append(data.crb_s)
            unstructured.append(data.crb_us)
            for name in cfg.algorithms:
                accumulator = accumulators[name]
                started = time.perf_counter()
                try:
                    h_hat, iterations = ALGORITHMS[name](data, cfg)
                except ESTIMATION_ERRORS as exception:
                    accumulator.failures += 1
                    self.log.warning("%s failed at snr=%g dB, trial %d: %s", name, snr_db, trial, exception)
                    continue
                finally:
                    accumulator.seconds += time.perf_counter() - started
                accumulator.errors.append(squared_error(data.channel.h, h_hat))
                accumulator.normalized.append(normalized_squared_error(data.channel.h, h_hat))
                accumulator.iterations.append(iterations)

        records = []
        for name in cfg.algorithms:
            accumulator = accumulators[name]
            self.total_seconds[name] += accumulator.seconds
            flagged = accumulator.failures > FAILURE_FLAG_FRACTION * cfg.trials
            if flagged:
                self.log.warning("%s failed on %d of %d trials at snr=%g dB",
                                 name, accumulator.failures, cfg.trials, snr_db)
            records.append(ResultRecord(
                algorithm=name,
                snr_db=float(snr_db),
                mse=_mean(accumulator.errors),
                nmse=_mean(accumulator.normalized),
                crb_s=_mean(structured),
                crb_us=_mean(unstructured),
                mean_iterations=_mean(accumulator.iterations),
                failures=accumulator.failures,
                wall_time_s=accumulator.seconds / cfg.trials if cfg.timing else 0.0,
                trials=cfg.trials,
                flagged=flagged,
            ))
        self.log.info("snr=%g dB done: %s", snr_db,
                      ", ".join(f"{r.algorithm} mse={r.mse:.3e}" for r in records))
        return records

    def timing_summary(self) -> Dict[str, float]:
        """Total estimator seconds per algorithm over every trial run so far."""
        if not self.cfg.timing:
            return {name: 0.0 for name in self.total_seconds}
        return dict(self.total_seconds)


def _mean(values) -> float:
    if len(values) == 0:
        return float("nan")
    return float(np.mean(values))


def run_monte_carlo(cfg: ExperimentConfig) -> List[ResultRecord]:
    """Run the seeded Monte Carlo protocol and return one record per (algorithm, SNR)."""
    return MonteCarloRunner(cfg).run()
