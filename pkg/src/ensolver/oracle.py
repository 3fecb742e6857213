"""Exact rates by enumerating every joint base-model output.

Each of the ``N_S**M`` prediction vectors is classified once with the scalar
vote rule (:func:`ensolver.votes.decide`), independently of the vectorized
path the simulator uses. Only the vector probabilities depend on ``betas``,
so classifications are cached per ``(M, N_S, tau)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from .bounds import geometric_sum
from .votes import Answer, answer_count_threshold, decide, predict_with_uncertainty, tally
from .world import Outcome, WorldConfig

MAX_OUTCOMES = 10**7


class OracleTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class ExactRates:
    p_correct_in: float
    p_skip_in: float
    p_wrong_in: float
    p_correct_out: float
    p_skip_out: float
    p_wrong_out: float
    p_tail_event_in: float
    # majority label correct whatever the uncertainty (a forced answer)
    p_majority_in: float = float("nan")
    p_majority_out: float = float("nan")

    def mixed(self, alpha: float) -> tuple[float, float]:
        """(p_correct, p_skip) for a random input with in-dist share ``alpha``."""
        pc = alpha * self.p_correct_in + (1 - alpha) * self.p_correct_out
        ps = alpha * self.p_skip_in + (1 - alpha) * self.p_skip_out
        return pc, ps

    def mixed_majority(self, alpha: float) -> float:
        return alpha * self.p_majority_in + (1 - alpha) * self.p_majority_out


@lru_cache(maxsize=64)
def _classify_all(M: int, N: int, tau: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Outcome class, tail-event flag, and majority-is-correct flag per vector.

    Vectors are in lexicographic order of ``itertools.product(range(N),
    repeat=M)``.
    """
    k = answer_count_threshold(M, tau)
    n = N**M
    outcome = np.empty(n, dtype=np.int8)
    tail = np.empty(n, dtype=bool)
    majority = np.empty(n, dtype=bool)
    for idx, vec in enumerate(product(range(N), repeat=M)):
        t = tally(vec)
        verdict = decide(t, tau)
        if isinstance(verdict, Answer):
            outcome[idx] = Outcome.CORRECT if verdict.label == 0 else Outcome.WRONG
        else:
            outcome[idx] = Outcome.SKIP
        tail[idx] = any(c >= k for lab, c in t.counts if lab != 0)
        majority[idx] = predict_with_uncertainty(t)[0] == 0
    for arr in (outcome, tail, majority):
        arr.setflags(write=False)
    return outcome, tail, majority


def _correct_votes(M: int, N: int) -> np.ndarray:
    """Boolean (N**M, M) matrix: model i predicted the true label 0."""
    idx = np.arange(N**M, dtype=np.int64)
    return np.stack([(idx // N ** (M - 1 - i)) % N == 0 for i in range(M)], axis=1)


def _check_size(cfg: WorldConfig) -> int:
    N = cfg.n_labels
    if N**cfg.M > MAX_OUTCOMES:
        raise OracleTooLargeError("instance too large for exact oracle")
    return N


def _class_sums(prob: np.ndarray, outcome: np.ndarray) -> tuple[float, float, float]:
    return tuple(
        math.fsum(prob[outcome == cls]) for cls in (Outcome.CORRECT, Outcome.SKIP, Outcome.WRONG)
    )


def exact_rates(cfg: WorldConfig) -> ExactRates:
    N = _check_size(cfg)
    outcome, tail, majority = _classify_all(cfg.M, N, cfg.tau)
    betas = np.asarray(cfg.betas)
    hit = _correct_votes(cfg.M, N)
    per_model = np.where(hit, betas, (1.0 - betas) / (N - 1))
    p_in = per_model.prod(axis=1)
    p_out = np.full(len(outcome), float(N) ** -cfg.M)

    c_in, s_in, w_in = _class_sums(p_in, outcome)
    c_out, s_out, w_out = _class_sums(p_out, outcome)
    return ExactRates(
        p_correct_in=c_in,
        p_skip_in=s_in,
        p_wrong_in=w_in,
        p_correct_out=c_out,
        p_skip_out=s_out,
        p_wrong_out=w_out,
        p_tail_event_in=math.fsum(p_in[tail]),
        p_majority_in=math.fsum(p_in[majority]),
        p_majority_out=math.fsum(p_out[majority]),
    )


def exact_rdr(cfg: WorldConfig, rates: ExactRates | None = None) -> float:
    r = exact_rates(cfg) if rates is None else rates
    a = cfg.alpha
    return a * r.p_correct_in + (1 - a) * (r.p_correct_out + r.p_skip_out)


def exact_success_rate(
    cfg: WorldConfig, T: int | None = None, rates: ExactRates | None = None
) -> float:
    """p_correct * sum_{t<=T} p_skip**t for the mixed input distribution."""
    T = cfg.T if T is None else T
    r = exact_rates(cfg) if rates is None else rates
    pc, ps = r.mixed(cfg.alpha)
    if ps >= 1.0:
        return (T + 1) * pc
    return pc * geometric_sum(ps, T)


def exact_session_success_rate(
    cfg: WorldConfig, T: int | None = None, rates: ExactRates | None = None
) -> float:
    """Exact success probability of a limited-skip session as actually run.

    Differs from :func:`exact_success_rate` in the last trial: after ``T``
    skips the majority label is submitted even when the ensemble would skip,
    so that trial succeeds with the majority-correct probability rather than
    the answer-correct one. This is the quantity episode simulation estimates.
    """
    T = cfg.T if T is None else T
    r = exact_rates(cfg) if rates is None else rates
    pc, ps = r.mixed(cfg.alpha)
    pm = r.mixed_majority(cfg.alpha)
    if T == 0:
        return pm
    head = (T * pc) if ps >= 1.0 else pc * geometric_sum(ps, T - 1)
    return head + ps**T * pm


def exact_success_limit(cfg: WorldConfig, rates: ExactRates | None = None) -> float:
    """Success rate with unlimited skips, p_correct / (1 - p_skip)."""
    r = exact_rates(cfg) if rates is None else rates
    pc, ps = r.mixed(cfg.alpha)
    return pc / (1.0 - ps)
