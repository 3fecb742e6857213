"""Ensemble vote aggregation and the answer-or-skip decision rule.

Everything here operates on label *outputs* only. A label is any hashable
token (strings from ingested logs, integer ids in the synthetic world) and
equality is exact; no normalization happens at this layer.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import floor
from typing import Hashable, Iterable, Sequence

import numpy as np

Label = Hashable


class EmptyEnsembleError(ValueError):
    pass


class ThresholdError(ValueError):
    pass


class InsufficientTrialsError(RuntimeError):
    pass


@dataclass(frozen=True)
class VoteTally:
    """Per-label vote counts, kept in order of each label's first voter."""

    total_models: int
    counts: tuple[tuple[Label, int], ...]

    def __post_init__(self):
        if self.total_models < 1:
            raise EmptyEnsembleError("empty ensemble")
        if any(c < 1 for _, c in self.counts):
            raise ValueError("vote counts must be positive")
        if sum(c for _, c in self.counts) != self.total_models:
            raise ValueError("vote counts must sum to total_models")

    def as_dict(self) -> dict:
        return dict(self.counts)

    @property
    def max_count(self) -> int:
        return max(c for _, c in self.counts)


@dataclass(frozen=True)
class Answer:
    label: Label
    uncertainty: float


@dataclass(frozen=True)
class Skip:
    pass


SKIP = Skip()
Verdict = Answer | Skip


@dataclass(frozen=True)
class SessionOutcome:
    final_label: Label
    skips_used: int
    forced: bool


def tally(predictions: Sequence[Label]) -> VoteTally:
    if len(predictions) == 0:
        raise EmptyEnsembleError("empty ensemble")
    counts: dict = {}
    for p in predictions:
        counts[p] = counts.get(p, 0) + 1
    return VoteTally(len(predictions), tuple(counts.items()))


def predict_with_uncertainty(t: VoteTally) -> tuple[Label, float]:
    """Majority label and ``u = 1 - max_count / M``.

    Ties go to the tied label whose first vote came from the lowest model
    index, which is the first maximum in the tally's ordering.
    """
    label, best = t.counts[0]
    for lab, c in t.counts[1:]:
        if c > best:
            label, best = lab, c
    return label, 1.0 - best / t.total_models


def _as_fraction(tau: float) -> Fraction:
    # decimal literal intent: 10 * (1 - 0.9) must floor to 1, not 0
    return Fraction(repr(float(tau))) if not isinstance(tau, Fraction) else tau


def agreement_floor(M: int, tau: float) -> int:
    """floor(M * (1 - tau)), evaluated on the decimal value of ``tau``."""
    if not 0 < tau <= 1:
        raise ThresholdError("threshold out of range")
    return floor(M * (1 - _as_fraction(tau)))


def answer_count_threshold(M: int, tau: float) -> int:
    """Smallest majority count at which the ensemble answers."""
    if M < 1:
        raise EmptyEnsembleError("empty ensemble")
    return agreement_floor(M, tau) + 1


def decide(t: VoteTally, tau: float) -> Verdict:
    k = answer_count_threshold(t.total_models, tau)
    label, u = predict_with_uncertainty(t)
    if t.max_count >= k:
        return Answer(label, u)
    return SKIP


def run_limited(
    trial_source: Iterable[Sequence[Label]], tau: float, T: int
) -> SessionOutcome:
    """Limited-skip session: skip at most ``T`` trials, then answer regardless.

    ``trial_source`` is consumed lazily; no trial past the answering one is
    drawn.
    """
    if T < 0:
        raise ValueError("T must be nonnegative")
    it = iter(trial_source)
    for skipped in range(T + 1):
        try:
            predictions = next(it)
        except StopIteration:
            raise InsufficientTrialsError("insufficient trials") from None
        t = tally(predictions)
        if skipped == T:
            label, _ = predict_with_uncertainty(t)
            return SessionOutcome(label, T, True)
        verdict = decide(t, tau)
        if isinstance(verdict, Answer):
            return SessionOutcome(verdict.label, skipped, False)
    raise AssertionError("unreachable")


def majority_batch(predictions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized majority vote over the last axis of an integer array.

    Returns ``(labels, max_counts)`` with the same tie rule as
    :func:`predict_with_uncertainty`: ``argmax`` picks the first model index
    whose label attains the maximal count.
    """
    preds = np.asarray(predictions)
    M = preds.shape[-1]
    counts = np.zeros(preds.shape, dtype=np.int32)
    for i in range(M):
        counts += preds == preds[..., i : i + 1]
    j = counts.argmax(axis=-1)[..., None]
    labels = np.take_along_axis(preds, j, axis=-1)[..., 0]
    max_counts = np.take_along_axis(counts, j, axis=-1)[..., 0]
    return labels, max_counts
