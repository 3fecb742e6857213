"""Seeded simulation of right decision rates and limited-skip success rates.

Samples are drawn in fixed-size chunks so that memory stays bounded and the
random stream consumed for a given ``(cfg, n, seed, stream_index)`` never
depends on worker count. Each estimator owns a fixed substream of its
``RngSpec``.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import binomtest

from . import bounds, oracle
from .world import Outcome, RngSpec, WorldConfig, classify_batch, sample_batch

DEFAULT_TRIALS = 100_000
DEFAULT_EPISODES = 400_000
CHUNK_TRIALS = 1 << 16
WORKERS_ENV = "ENSOLVER_WORKERS"

_RDR_STREAM = 0
_SUCCESS_STREAM = 1


@dataclass(frozen=True)
class Estimate:
    value: float
    n: int
    ci_low: float
    ci_high: float

    @property
    def successes(self) -> int:
        return round(self.value * self.n)

    @property
    def stderr(self) -> float:
        return float(np.sqrt(self.value * (1 - self.value) / self.n))


def wilson_estimate(successes: int, n: int) -> Estimate:
    """Proportion with its 95% Wilson score interval."""
    if n < 1:
        raise ValueError("need at least one sample")
    value = successes / n
    ci = binomtest(int(successes), int(n)).proportion_ci(0.95, method="wilson")
    return Estimate(value, n, float(min(ci.low, value)), float(max(ci.high, value)))


def _chunks(n: int, size: int):
    done = 0
    while done < n:
        step = min(size, n - done)
        yield step
        done += step


def estimate_rdr(cfg: WorldConfig, trials: int = DEFAULT_TRIALS, seed: int = 0,
                 stream_index: int = 0) -> Estimate:
    if trials < 1:
        raise ValueError("trials must be positive")
    rng = RngSpec(seed, stream_index).child(_RDR_STREAM).generator()
    right = 0
    for n in _chunks(trials, CHUNK_TRIALS):
        batch = sample_batch(cfg, rng, n)
        outcomes, _ = classify_batch(cfg, batch)
        ok = np.where(
            batch.in_distribution,
            outcomes == Outcome.CORRECT,
            outcomes != Outcome.WRONG,
        )
        right += int(ok.sum())
    return wilson_estimate(right, trials)


def episode_success(outcomes: np.ndarray, majority_correct: np.ndarray) -> np.ndarray:
    """Success flags for episodes laid out as ``(episodes, T + 1)`` arrays.

    The first answered trial among the first ``T`` decides the episode;
    otherwise the majority label of trial ``T + 1`` is submitted.
    """
    T = outcomes.shape[1] - 1
    if T == 0:
        return majority_correct[:, 0].copy()
    answered = outcomes[:, :T] != Outcome.SKIP
    first = answered.argmax(axis=1)
    first_correct = outcomes[np.arange(len(outcomes)), first] == Outcome.CORRECT
    return np.where(answered.any(axis=1), first_correct, majority_correct[:, T])


def estimate_success_rate(cfg: WorldConfig, T: int | None = None,
                          episodes: int = DEFAULT_EPISODES, seed: int = 0,
                          stream_index: int = 0) -> Estimate:
    T = cfg.T if T is None else T
    if episodes < 1:
        raise ValueError("episodes must be positive")
    if T < 0:
        raise ValueError("T must be nonnegative")
    rng = RngSpec(seed, stream_index).child(_SUCCESS_STREAM).generator()
    per_chunk = max(1, CHUNK_TRIALS // (T + 1))
    wins = 0
    for n in _chunks(episodes, per_chunk):
        batch = sample_batch(cfg, rng, n * (T + 1))
        outcomes, majority_correct = classify_batch(cfg, batch)
        ok = episode_success(outcomes.reshape(n, T + 1), majority_correct.reshape(n, T + 1))
        wins += int(ok.sum())
    return wilson_estimate(wins, episodes)


@dataclass(frozen=True)
class SweepRow:
    cfg: WorldConfig
    T: int
    metric: str
    empirical: Estimate
    theoretical: float | None
    exact: float | None = None


def _theoretical(cfg: WorldConfig, T: int, metric: str) -> float | None:
    try:
        if metric == "rdr":
            return bounds.rdr_lower_bound(cfg)
        return bounds.success_rate_lower_bound(cfg, T)
    except (bounds.DegenerateThresholdError, bounds.AssumptionError):
        return None


def _exact(cfg: WorldConfig, T: int, metric: str) -> float | None:
    try:
        if metric == "rdr":
            return oracle.exact_rdr(cfg)
        return oracle.exact_session_success_rate(cfg, T)
    except (oracle.OracleTooLargeError, ValueError):
        return None


def _run_cell(args) -> SweepRow:
    index, cfg, T, metric, n, seed, with_exact = args
    if metric == "rdr":
        est = estimate_rdr(cfg, n, seed, index)
    else:
        est = estimate_success_rate(cfg, T, n, seed, index)
    exact = _exact(cfg, T, metric) if with_exact else None
    return SweepRow(cfg, T, metric, est, _theoretical(cfg, T, metric), exact)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def sweep(grid: Sequence[tuple[WorldConfig, int]], n: int | None = None, seed: int = 0,
          metric: str = "success", with_exact: bool = True,
          workers: int | None = None) -> list[SweepRow]:
    """Estimate ``metric`` ('rdr' or 'success') on every ``(cfg, T)`` cell.

    Cell ``i`` draws from stream ``(seed, i)``; rows come back in grid order
    whatever the worker count.
    """
    if not grid:
        raise ValueError("empty grid")
    if metric not in ("rdr", "success"):
        raise ValueError(f"unknown metric {metric!r}")
    if n is None:
        n = DEFAULT_TRIALS if metric == "rdr" else DEFAULT_EPISODES
    jobs = [(i, cfg, T, metric, n, seed, with_exact) for i, (cfg, T) in enumerate(grid)]
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(jobs) == 1:
        return [_run_cell(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_cell, jobs))
