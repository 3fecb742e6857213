"""Synthetic world where the uniform-error assumptions hold exactly.

Labels are integer ids in ``[0, N_S)``. The true label is fixed at 0: under
uniform errors the world is symmetric under relabeling, so this loses
nothing and keeps the exact oracle tractable. A randomized-true-label mode
exists only to check that symmetry.

Random streams come from numpy's Philox (counter-based) bit generator keyed by
``SeedSequence(seed, spawn_key=(stream_index, ...))``, so a stream depends on
``(seed, stream_index)`` alone and never on execution order.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

from .votes import Answer, answer_count_threshold, decide, majority_batch, tally


class Outcome(IntEnum):
    CORRECT = 0
    WRONG = 1
    SKIP = 2


@dataclass(frozen=True)
class WorldConfig:
    M: int
    N_S: float
    tau: float
    alpha: float
    betas: tuple[float, ...]
    T: int = 0

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if self.M < 1:
            raise ValueError("M must be positive")
        if not self.N_S >= 2:
            raise ValueError("N_S must be at least 2")
        if not 0 < self.tau <= 1:
            raise ValueError("threshold out of range")
        if not 0 <= self.alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")
        if len(self.betas) != self.M:
            raise ValueError(f"expected {self.M} betas, got {len(self.betas)}")
        if any(not 0 <= b <= 1 for b in self.betas):
            raise ValueError("betas must lie in [0, 1]")
        if self.T < 0:
            raise ValueError("T must be nonnegative")

    @property
    def beta_min(self) -> float:
        return min(self.betas)

    @property
    def beta_max(self) -> float:
        return max(self.betas)

    @property
    def k(self) -> int:
        return answer_count_threshold(self.M, self.tau)

    @property
    def n_labels(self) -> int:
        """N_S as an integer id range; sampling needs a whole number."""
        if float(self.N_S) != int(self.N_S):
            raise ValueError(f"N_S={self.N_S} is not a whole number")
        return int(self.N_S)

    def replace(self, **changes) -> "WorldConfig":
        d = asdict(self)
        d.update(changes)
        return WorldConfig(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["betas"] = list(self.betas)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "WorldConfig":
        d = dict(d)
        if "betas" not in d and "beta_min" in d:
            # shorthand: only the extremes matter to the bounds
            lo, hi = d.pop("beta_min"), d.pop("beta_max", None)
            hi = lo if hi is None else hi
            d["betas"] = list(np.linspace(lo, hi, int(d["M"])))
        allowed = {"M", "N_S", "tau", "alpha", "betas", "T"}
        unknown = set(d) - allowed
        if unknown:
            raise ValueError(f"unknown WorldConfig fields: {sorted(unknown)}")
        return cls(
            M=int(d["M"]),
            N_S=d["N_S"],
            tau=float(d["tau"]),
            alpha=float(d.get("alpha", 1.0)),
            betas=tuple(d["betas"]),
            T=int(d.get("T", 0)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "WorldConfig":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path: str | Path) -> "WorldConfig":
        return cls.from_json(Path(path).read_text())


@dataclass(frozen=True)
class RngSpec:
    seed: int
    stream_index: int = 0
    substream: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.stream_index < 0:
            raise ValueError("stream_index must be nonnegative")

    def child(self, i: int) -> "RngSpec":
        return RngSpec(self.seed, self.stream_index, self.substream + (i,))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(
            self.seed, spawn_key=(self.stream_index, *self.substream)
        )
        return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class Trial:
    in_distribution: bool
    true_label: int
    predictions: tuple[int, ...]

    @property
    def provenance(self) -> str:
        return "in" if self.in_distribution else "out"


@dataclass(frozen=True)
class TrialBatch:
    in_distribution: np.ndarray  # (n,) bool
    true_labels: np.ndarray  # (n,) int64
    predictions: np.ndarray  # (n, M) int64

    def __len__(self):
        return len(self.in_distribution)

    def trial(self, i: int) -> Trial:
        return Trial(
            bool(self.in_distribution[i]),
            int(self.true_labels[i]),
            tuple(int(p) for p in self.predictions[i]),
        )


def sample_batch(
    cfg: WorldConfig,
    rng: np.random.Generator,
    n: int,
    random_true_label: bool = False,
) -> TrialBatch:
    """Draw ``n`` independent trials.

    Every array is drawn in full regardless of provenance, so the amount of
    randomness consumed depends only on ``(cfg.M, n)``.
    """
    N = cfg.n_labels
    betas = np.asarray(cfg.betas)
    in_dist = rng.random(n) < cfg.alpha
    hit = rng.random((n, cfg.M)) < betas
    wrong = rng.integers(1, N, size=(n, cfg.M), dtype=np.int64)
    uniform = rng.integers(0, N, size=(n, cfg.M), dtype=np.int64)
    if random_true_label:
        truth = rng.integers(0, N, size=n, dtype=np.int64)
        # wrong ids stay uniform over the N-1 labels other than the truth
        wrong = (truth[:, None] + wrong) % N
        in_preds = np.where(hit, truth[:, None], wrong)
    else:
        truth = np.zeros(n, dtype=np.int64)
        in_preds = wrong
        in_preds[hit] = 0
    uniform[in_dist] = in_preds[in_dist]
    return TrialBatch(in_dist, truth, uniform)


def sample_trial(cfg: WorldConfig, rng: np.random.Generator) -> Trial:
    return sample_batch(cfg, rng, 1).trial(0)


def trial_verdict(cfg: WorldConfig, trial: Trial) -> Outcome:
    verdict = decide(tally(trial.predictions), cfg.tau)
    if not isinstance(verdict, Answer):
        return Outcome.SKIP
    return Outcome.CORRECT if verdict.label == trial.true_label else Outcome.WRONG


def classify_batch(cfg: WorldConfig, batch: TrialBatch) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`trial_verdict`.

    Returns ``(outcomes, majority_correct)``; the second array says whether
    the majority label is right, which is what a forced answer uses.
    """
    labels, max_counts = majority_batch(batch.predictions)
    majority_correct = labels == batch.true_labels
    answered = max_counts >= cfg.k
    outcomes = np.where(
        answered,
        np.where(majority_correct, Outcome.CORRECT, Outcome.WRONG),
        Outcome.SKIP,
    ).astype(np.int8)
    return outcomes, majority_correct
