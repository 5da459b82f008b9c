from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, TypeVar

logger = logging.getLogger(__name__)

TELEMETRY_ENV = "INHOMWALK_TELEMETRY"
PARALLELISM_ENV = "INHOMWALK_PARALLELISM"

T = TypeVar("T")
R = TypeVar("R")


def default_parallelism() -> int:
    raw = os.getenv(PARALLELISM_ENV, "").strip()
    if raw.isdigit() and int(raw) >= 1:
        return int(raw)
    return 1


@dataclass(frozen=True)
class RunContext:
    """Knobs shared by every verifier of a run.

    Grid points are evaluated on a thread pool of ``parallelism`` workers;
    results keep input order so reports do not depend on scheduling.
    """

    spread_cap: float = 10.0
    seed: int = 0
    parallelism: int = 1
    mc_samples: int = 100_000
    strict_floor: bool = False
    telemetry_hook: Callable[[str, dict], None] | None = None

    def __post_init__(self) -> None:
        if not self.spread_cap >= 1.0:
            raise ValueError(f"spread cap must be >= 1, got {self.spread_cap}")
        if self.parallelism < 1:
            raise ValueError(f"parallelism must be >= 1, got {self.parallelism}")
        if self.mc_samples < 10_000:
            raise ValueError(f"mc_samples must be >= 10000, got {self.mc_samples}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")

    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
        items = list(items)
        if self.parallelism <= 1 or len(items) < 2:
            return [fn(item) for item in items]
        with ThreadPoolExecutor(max_workers=self.parallelism) as pool:
            return list(pool.map(fn, items))

    def emit(self, stage: str, payload: dict) -> None:
        if self.telemetry_hook is not None:
            self.telemetry_hook(stage, payload)
            return
        if os.getenv(TELEMETRY_ENV) == "1":
            logger.info("[Harness][%s] %s", stage, payload)
