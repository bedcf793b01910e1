"""Detector timing and operation-count scaling behind ``bench_cli scale``."""
import time
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from bench_cli.verify import random_instance
from common_utils.logging_mixin import LoggingMixin
from trellis_map.api import map_detect_trellis

MEMORY_SWEEP = (64, 128, 256)
LENGTH_SWEEP = tuple(range(2, 9))
FIXED_L = 4
FIXED_M = 128
RUNS = 20
# Doubling M may cost at most this factor in median detector time.
MAX_DOUBLING_RATIO = 2.5


@dataclass
class ScalePoint:
    section: str
    M: int
    L: int
    states: int
    operations: int
    median_time_s: float


class ScaleBenchmark(LoggingMixin):
    """Times ``map_detect_trellis`` over channel memory and training length sweeps."""

    def __init__(self, seed: int = 0, runs: int = RUNS, fixed_L: int = FIXED_L, fixed_M: int = FIXED_M,
                 memory_sweep: Sequence[int] = MEMORY_SWEEP, length_sweep: Sequence[int] = LENGTH_SWEEP,
                 context=None):
        super().__init__(context)
        self.seed = seed
        self.runs = runs
        self.fixed_L = fixed_L
        self.fixed_M = fixed_M
        self.memory_sweep = tuple(memory_sweep)
        self.length_sweep = tuple(length_sweep)

    def measure(self, section: str, M: int, L: int) -> ScalePoint:
        rng = np.random.default_rng([self.seed, M, L])
        instance = random_instance(rng, M, L)
        timings = []
        operations = 0
        for _ in range(self.runs):
            started = time.perf_counter()
            operations = map_detect_trellis(instance.q, M, keep_history=False).operations
            timings.append(time.perf_counter() - started)
        point = ScalePoint(
            section=section,
            M=M,
            L=L,
            states=1 << (L - 1),
            operations=operations,
            median_time_s=float(np.median(timings)),
        )
        self.log.debug("%s M=%d L=%d: %.3e s, %d additions", section, M, L, point.median_time_s, operations)
        return point

    def run(self) -> List[ScalePoint]:
        points = [self.measure("memory", M, self.fixed_L) for M in self.memory_sweep]
        points.extend(self.measure("length", self.fixed_M, L) for L in self.length_sweep)
        return points

    def failures(self, points: List[ScalePoint]) -> List[str]:
        """Return the violated scaling criteria (empty when all hold)."""
        problems = []
        memory = {p.M: p for p in points if p.section == "memory"}
        for M, point in memory.items():
            if point.operations != M * 2 ** point.L:
                problems.append(f"M={M}: {point.operations} additions, expected {M * 2 ** point.L}")
            if 2 * M in memory:
                ratio = memory[2 * M].median_time_s / point.median_time_s
                if ratio > MAX_DOUBLING_RATIO:
                    problems.append(f"time ratio M={2 * M}/M={M} is {ratio:.2f} > {MAX_DOUBLING_RATIO}")
        length = sorted((p for p in points if p.section == "length"), key=lambda p: p.L)
        for shorter, longer in zip(length, length[1:]):
            if longer.L != shorter.L + 1:
                continue
            if longer.operations != 2 * shorter.operations:
                problems.append(f"L={shorter.L}->{longer.L}: additions {shorter.operations} -> {longer.operations}")
            if longer.states != 2 * shorter.states:
                problems.append(f"L={shorter.L}->{longer.L}: states {shorter.states} -> {longer.states}")
        return problems
