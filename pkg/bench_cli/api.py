import argparse
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from bench_cli.errors import CliError, VerificationFailedError
from bench_cli.output import (
    FORMATS,
    RESULT_COLUMNS,
    flagged_points,
    header_block,
    open_output,
    write_table,
)
from bench_cli.scale import FIXED_L, FIXED_M, RUNS, ScaleBenchmark
from bench_cli.verify import VerificationSuite
from common_utils.logging_mixin import LoggingMixin, configure_logging
from configs.config_helpers import ConfigHelpers
from configs.errors import ConfigError, InvalidConfigValueError
from configs.experiment_config import SNR_DEFINITION, ExperimentConfig
from estimators.errors import EstimatorError
from numerics.errors import NumericsError
from simkit.api import crb_training_tradeoff, normalized_squared_error, squared_error
from simkit.errors import SimulationError
from simkit.monte_carlo import ALGORITHMS, MonteCarloRunner, draw_trial
from trellis_map.errors import TrellisError

logger = logging.getLogger(__name__)

SUBCOMMANDS = ("bench", "verify", "scale", "demo")

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

RUNTIME_ERRORS = (NumericsError, TrellisError, EstimatorError, SimulationError, CliError, OSError)

# flag destination -> config key
OVERRIDE_FLAGS = {
    "seed": "seed",
    "snr": "snr_grid_db",
    "algos": "algorithms",
    "trials": "trials",
    "M": "M",
    "K": "K",
    "L": "L",
    "eps": "eps",
    "max_iter": "max_iter",
    "p_a": "p_a",
}


@dataclass
class CliInvocation:
    subcommand: str
    config_path: Optional[str] = None
    overrides: Dict[str, Any] = field(default_factory=dict)
    output_path: Optional[str] = None
    format: str = "csv"
    verbosity: int = 0
    runs: int = RUNS
    scale_L: int = FIXED_L
    scale_M: int = FIXED_M
    inject_offband: bool = False

    def load_config(self) -> ExperimentConfig:
        """File values first, then flag overrides; unknown keys are rejected."""
        values: Dict[str, Any] = {}
        if self.config_path:
            try:
                with open(self.config_path, encoding="utf-8") as stream:
                    text = stream.read()
            except OSError as exception:
                raise InvalidConfigValueError(f"Cannot read config {self.config_path}: {exception}")
            values.update(ConfigHelpers.parse_key_value_text(text, source=self.config_path))
        values.update(self.overrides)
        return ExperimentConfig.from_mapping(values)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bench_cli",
        description="Sparse channel estimation: Monte Carlo benchmark, oracle verification and scaling.",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", dest="config_path", help="flat 'key = value' config file")
    parser.add_argument("--out", dest="output_path", default="-", help="output file, '-' for stdout")
    parser.add_argument("--format", choices=FORMATS, default="csv")
    parser.add_argument("--seed", help="unsigned 64-bit seed")
    parser.add_argument("--snr", help="SNR grid in dB, 'a:b:step' or a comma list")
    parser.add_argument("--algos", help="comma separated algorithm ids: " + ", ".join(ALGORITHMS))
    parser.add_argument("--trials")
    parser.add_argument("--M")
    parser.add_argument("--K")
    parser.add_argument("--L")
    parser.add_argument("--eps")
    parser.add_argument("--max-iter", dest="max_iter")
    parser.add_argument("--p-a", dest="p_a", help="support prior, defaults to K/M")
    parser.add_argument("--no-timing", action="store_true", help="write wall_time_s = 0 for byte-identical reruns")
    parser.add_argument("--runs", type=int, default=RUNS, help="timed runs per scale point")
    parser.add_argument("--scale-L", dest="scale_L", type=int, default=FIXED_L, help="training length of the M sweep")
    parser.add_argument("--scale-M", dest="scale_M", type=int, default=FIXED_M, help="channel memory of the L sweep")
    parser.add_argument("--inject-offband", action="store_true", help=argparse.SUPPRESS)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("-q", "--quiet", action="store_true")
    return parser


def parse_invocation(argv: Optional[Sequence[str]] = None) -> CliInvocation:
    args = build_parser().parse_args(argv)
    overrides = {
        key: getattr(args, flag) for flag, key in OVERRIDE_FLAGS.items() if getattr(args, flag) is not None
    }
    if args.no_timing:
        overrides["timing"] = False
    return CliInvocation(
        subcommand=args.subcommand,
        config_path=args.config_path,
        overrides=overrides,
        output_path=args.output_path,
        format=args.format,
        verbosity=-1 if args.quiet else args.verbose,
        runs=args.runs,
        scale_L=args.scale_L,
        scale_M=args.scale_M,
        inject_offband=args.inject_offband,
    )


class Commands(LoggingMixin):
    """Subcommand implementations; each returns a process exit code."""

    def __init__(self, invocation: CliInvocation, context=None):
        super().__init__(context)
        self.invocation = invocation

    def _header(self, cfg: ExperimentConfig, **extra) -> Dict[str, Any]:
        return header_block(
            self.invocation.subcommand,
            cfg.to_dict(),
            seed=str(cfg.seed),
            snr_definition=SNR_DEFINITION,
            **extra,
        )

    def cmd_bench(self) -> int:
        cfg = self.invocation.load_config()
        self.log.info("Benchmark: M=%d K=%d L=%d, %d trials x %d SNR points, algorithms %s",
                      cfg.M, cfg.K, cfg.L, cfg.trials, len(cfg.snr_grid_db), ",".join(cfg.algorithms))
        runner = MonteCarloRunner(cfg)
        records = runner.run()
        header = self._header(cfg, flagged=",".join(flagged_points(records)) or "none")
        with open_output(self.invocation.output_path) as stream:
            write_table(stream, self.invocation.format, header, RESULT_COLUMNS, records,
                        extras={"timing_summary": runner.timing_summary()})
        return EXIT_OK

    def cmd_verify(self) -> int:
        cfg = self.invocation.load_config()
        suite = VerificationSuite(seed=cfg.seed, inject_offband=self.invocation.inject_offband)
        results = suite.run()
        with open_output(self.invocation.output_path) as stream:
            write_table(stream, self.invocation.format, self._header(cfg), ("check", "passed", "detail"), results)
        failed = [r.check for r in results if not r.passed]
        if failed:
            raise VerificationFailedError(", ".join(failed))
        return EXIT_OK

    def cmd_scale(self) -> int:
        cfg = self.invocation.load_config()
        invocation = self.invocation
        benchmark = ScaleBenchmark(seed=cfg.seed, runs=invocation.runs,
                                   fixed_L=invocation.scale_L, fixed_M=invocation.scale_M)
        points = benchmark.run()
        problems = benchmark.failures(points)
        length_values = [L for L in range(2, 9) if L <= cfg.M]
        tradeoff = crb_training_tradeoff(cfg.M, cfg.K, length_values, trials=cfg.trials, seed=cfg.seed)
        header = self._header(cfg, criteria="pass" if not problems else "; ".join(problems))
        with open_output(invocation.output_path) as stream:
            write_table(stream, invocation.format, header,
                        ("section", "M", "L", "states", "operations", "median_time_s"), points,
                        extras={"training_tradeoff": tradeoff})
        if problems:
            raise VerificationFailedError("; ".join(problems))
        return EXIT_OK

    def cmd_demo(self) -> int:
        cfg = self.invocation.load_config()
        data = draw_trial(cfg, 0, 0)
        rows: List[Dict[str, Any]] = [{
            "algorithm": "truth",
            "squared_error": 0.0,
            "nmse": 0.0,
            "iterations": 0,
            "support": " ".join(str(i) for i in data.channel.support),
        }]
        for name in cfg.algorithms:
            h_hat, iterations = ALGORITHMS[name](data, cfg)
            rows.append({
                "algorithm": name,
                "squared_error": squared_error(data.channel.h, h_hat),
                "nmse": normalized_squared_error(data.channel.h, h_hat),
                "iterations": iterations,
                "support": " ".join(str(i) for i in np.flatnonzero(h_hat)),
            })
        header = self._header(cfg, snr_db=cfg.snr_grid_db[0], sigma2=data.sigma2,
                              crb_s=data.crb_s, crb_us=data.crb_us, taps=data.channel.h.tolist())
        with open_output(self.invocation.output_path) as stream:
            write_table(stream, self.invocation.format, header,
                        ("algorithm", "squared_error", "nmse", "iterations", "support"), rows)
        return EXIT_OK

    def dispatch(self) -> int:
        return getattr(self, f"cmd_{self.invocation.subcommand}")()


def main(argv: Optional[Sequence[str]] = None) -> int:
    invocation = parse_invocation(argv)
    run_id = configure_logging(invocation.verbosity)
    logger.debug("Run %s: %s", run_id, invocation)
    try:
        return Commands(invocation).dispatch()
    except ConfigError as exception:
        logger.error("Configuration error: %s", exception)
        return EXIT_CONFIG
    except VerificationFailedError as exception:
        logger.error("Verification failed: %s", exception)
        return EXIT_VERIFICATION
    except RUNTIME_ERRORS as exception:
        logger.error("Run failed: %s", exception)
        return EXIT_RUNTIME
