from dataclasses import dataclass
from typing import List, Optional

from configs.base_config import Config
from configs.config_helpers import ConfigHelpers
from configs.errors import InvalidConfigValueError
from trellis_map.oracle import BRUTEFORCE_MAX_M

KNOWN_ALGORITHMS = ("omapfg", "omapfg_bruteforce", "omp", "lse", "slse")

SNR_DEFINITION = "snr_db = 10*log10(||U h||^2 / (N * sigma^2)), per-observation signal power"


def _unsigned_64(value, field_name):
    number = ConfigHelpers.to_int(value, field_name)
    if not 0 <= number < 2 ** 64:
        raise InvalidConfigValueError(f"{field_name} must be an unsigned 64-bit integer, got {value!r}")
    return number


@dataclass
class ExperimentConfig(Config):
    """Monte Carlo experiment settings.

    ``p_a`` left unset means the Bernoulli prior ``K / M``.
    """
    M: Optional[int] = None
    K: Optional[int] = None
    L: Optional[int] = None
    snr_grid_db: Optional[List[float]] = None
    trials: Optional[int] = None
    eps: Optional[float] = None
    max_iter: Optional[int] = None
    seed: Optional[int] = None
    algorithms: Optional[List[str]] = None
    p_a: Optional[float] = None
    timing: Optional[bool] = None

    __default_values__ = {
        "M": 30,
        "K": 5,
        "L": 5,
        "snr_grid_db": "0:30:5",
        "trials": 100,
        "eps": 0.01,
        "max_iter": 50,
        "seed": 0,
        "algorithms": "omapfg,omp,lse,slse",
        "timing": True,
    }

    __mandatory_fields__ = ["M", "K", "L", "snr_grid_db", "trials", "eps", "max_iter", "seed", "algorithms"]

    __coercers__ = {
        "M": ConfigHelpers.to_int,
        "K": ConfigHelpers.to_int,
        "L": ConfigHelpers.to_int,
        "snr_grid_db": lambda value, _: ConfigHelpers.parse_snr_range(value),
        "trials": ConfigHelpers.to_int,
        "eps": ConfigHelpers.to_float,
        "max_iter": ConfigHelpers.to_int,
        "seed": _unsigned_64,
        "algorithms": lambda value, _: ConfigHelpers.parse_list(value),
        "p_a": ConfigHelpers.to_float,
        "timing": lambda value, _: ConfigHelpers.boolify(value),
    }

    def validate(self) -> None:
        if self.M < 1 or self.L < 1:
            raise InvalidConfigValueError(f"M and L must be positive, got M={self.M}, L={self.L}")
        if not 0 <= self.K <= self.M:
            raise InvalidConfigValueError(f"K must satisfy 0 <= K <= M, got K={self.K}, M={self.M}")
        if self.L > self.M:
            raise InvalidConfigValueError(f"L must not exceed M, got L={self.L}, M={self.M}")
        if self.trials < 1:
            raise InvalidConfigValueError(f"trials must be >= 1, got {self.trials}")
        if self.max_iter < 1:
            raise InvalidConfigValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.eps <= 0:
            raise InvalidConfigValueError(f"eps must be positive, got {self.eps}")
        if not self.snr_grid_db:
            raise InvalidConfigValueError("snr_grid_db must not be empty")
        if not self.algorithms:
            raise InvalidConfigValueError("algorithms must not be empty")
        unknown = [name for name in self.algorithms if name not in KNOWN_ALGORITHMS]
        if unknown:
            raise InvalidConfigValueError(
                f"Unknown algorithms {unknown}; choose from {', '.join(KNOWN_ALGORITHMS)}"
            )
        if len(set(self.algorithms)) != len(self.algorithms):
            raise InvalidConfigValueError(f"Duplicate algorithms in {self.algorithms}")
        if "omapfg_bruteforce" in self.algorithms and self.M > BRUTEFORCE_MAX_M:
            raise InvalidConfigValueError(
                f"omapfg_bruteforce enumerates 2^M supports and is limited to M <= {BRUTEFORCE_MAX_M}"
            )
        prior = self.prior_probability()
        needs_prior = any(name.startswith("omapfg") for name in self.algorithms)
        if needs_prior and not 0 < prior < 0.5:
            raise InvalidConfigValueError(
                f"Support prior p_a must lie in (0, 1/2), got {prior} (K={self.K}, M={self.M})"
            )

    def prior_probability(self) -> float:
        """Bernoulli prior on each support bit: ``p_a`` if set, else ``K / M``."""
        if self.p_a is not None:
            return self.p_a
        return self.K / self.M
