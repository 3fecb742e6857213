"""Prediction logs from externally trained ensembles.

CSV layout (UTF-8, comma separated, double-quote escaping)::

    sample_id,provenance,true_label,pred_0,...,pred_{M-1}

``provenance`` is ``in`` or ``out``; ``M`` is read off the header. A JSON
document ``{"records": [{"sample_id", "provenance", "true_label",
"predictions"}, ...]}`` is accepted as well.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .montecarlo import Estimate, episode_success, wilson_estimate
from .votes import Answer, decide, predict_with_uncertainty, tally
from .world import Outcome, RngSpec, TrialBatch, WorldConfig


class Normalization(str, Enum):
    NONE = "none"
    LOWERCASE = "lowercase"

    def apply(self, text: str) -> str:
        return text.lower() if self is Normalization.LOWERCASE else text


class LogFormatError(ValueError):
    """Malformed prediction log; ``row`` is the 1-based line/record number."""

    def __init__(self, message: str, row: int | None = None, path: str | None = None):
        self.row = row
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if row is not None:
            where += f"row {row}: "
        elif where:
            where += " "
        super().__init__(where + message)


@dataclass(frozen=True)
class Record:
    sample_id: str
    in_distribution: bool
    true_label: str
    predictions: tuple[str, ...]

    @property
    def provenance(self) -> str:
        return "in" if self.in_distribution else "out"


@dataclass(frozen=True)
class PredictionLog:
    records: tuple[Record, ...]
    M: int
    normalization: Normalization = Normalization.NONE

    def pool(self, in_distribution: bool) -> list[Record]:
        return [r for r in self.records if r.in_distribution == in_distribution]

    def to_json(self) -> str:
        return json.dumps({
            "M": self.M,
            "normalization": self.normalization.value,
            "records": [
                {
                    "sample_id": r.sample_id,
                    "provenance": r.provenance,
                    "true_label": r.true_label,
                    "predictions": list(r.predictions),
                }
                for r in self.records
            ],
        })

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(log_header(self.M))
        for r in self.records:
            w.writerow([r.sample_id, r.provenance, r.true_label, *r.predictions])
        return buf.getvalue()


def log_header(M: int) -> list[str]:
    return ["sample_id", "provenance", "true_label"] + [f"pred_{i}" for i in range(M)]


def _parse_provenance(value, row, path) -> bool:
    v = (value or "").strip().lower()
    if v == "in":
        return True
    if v == "out":
        return False
    if not v:
        raise LogFormatError("missing provenance", row, path)
    raise LogFormatError(f"provenance must be 'in' or 'out', got {value!r}", row, path)


def _build(raw_rows, M, normalization, path) -> PredictionLog:
    seen: set[str] = set()
    records = []
    for row, (sid, prov, truth, preds) in raw_rows:
        if sid in seen:
            raise LogFormatError(f"duplicate sample_id {sid!r}", row, path)
        seen.add(sid)
        if len(preds) != M:
            raise LogFormatError(f"expected {M} predictions, found {len(preds)}", row, path)
        records.append(Record(
            sid,
            _parse_provenance(prov, row, path),
            normalization.apply(str(truth)),
            tuple(normalization.apply(str(p)) for p in preds),
        ))
    return PredictionLog(tuple(records), M, normalization)


def parse_csv(text: str, normalization=Normalization.NONE, path: str | None = None) -> PredictionLog:
    normalization = Normalization(normalization)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise LogFormatError("empty file", None, path) from None
    fixed = ["sample_id", "provenance", "true_label"]
    if header[:3] != fixed:
        raise LogFormatError(f"header must start with {','.join(fixed)}", 1, path)
    M = len(header) - 3
    if M < 1 or header[3:] != [f"pred_{i}" for i in range(M)]:
        raise LogFormatError("prediction columns must be pred_0..pred_{M-1}", 1, path)
    raw = []
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) < 3:
            raise LogFormatError(f"expected {M + 3} fields, found {len(row)}", line, path)
        raw.append((line, (row[0], row[1], row[2], row[3:])))
    return _build(raw, M, normalization, path)


def parse_json(text: str, normalization=Normalization.NONE, path: str | None = None) -> PredictionLog:
    normalization = Normalization(normalization)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LogFormatError(f"invalid JSON: {exc}", exc.lineno, path) from None
    recs = doc.get("records") if isinstance(doc, dict) else None
    if not recs:
        raise LogFormatError("no records", None, path)
    raw = []
    for i, rec in enumerate(recs, start=1):
        try:
            raw.append((i, (str(rec["sample_id"]), rec.get("provenance"),
                            rec["true_label"], list(rec["predictions"]))))
        except (KeyError, TypeError) as exc:
            raise LogFormatError(f"missing field {exc}", i, path) from None
    M = int(doc.get("M", len(raw[0][1][3])))
    return _build(raw, M, normalization, path)


def load_prediction_log(path: str | Path, normalization=Normalization.NONE) -> PredictionLog:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        return parse_json(text, normalization, str(path))
    return parse_csv(text, normalization, str(path))


def log_from_batch(batch: TrialBatch) -> PredictionLog:
    """Export simulated trials as a prediction log with labels as text."""
    records = tuple(
        Record(
            str(i),
            bool(batch.in_distribution[i]),
            str(int(batch.true_labels[i])),
            tuple(str(int(p)) for p in batch.predictions[i]),
        )
        for i in range(len(batch))
    )
    return PredictionLog(records, batch.predictions.shape[1])


@dataclass(frozen=True)
class FittedParams:
    betas: tuple[float, ...]
    beta_min: float
    beta_max: float
    n_in: int
    n_out: int


def fit_params(log: PredictionLog) -> FittedParams:
    """Per-model accuracy on the in-distribution records."""
    pool = log.pool(True)
    if not pool:
        raise ValueError("log has no in-distribution records")
    hits = np.zeros(log.M, dtype=np.int64)
    for r in pool:
        hits += [p == r.true_label for p in r.predictions]
    betas = tuple(float(h) / len(pool) for h in hits)
    return FittedParams(betas, min(betas), max(betas), len(pool), len(log.records) - len(pool))


def world_config_from_fit(fit: FittedParams, N_S: float, tau: float, alpha: float,
                          T: int = 0) -> WorldConfig:
    return WorldConfig(len(fit.betas), N_S, tau, alpha, fit.betas, T)


@dataclass(frozen=True)
class _Scored:
    outcomes: np.ndarray  # int8 Outcome per record
    majority_correct: np.ndarray  # bool per record


def _score(pool: list[Record], tau: float) -> _Scored:
    out = np.empty(len(pool), dtype=np.int8)
    maj = np.empty(len(pool), dtype=bool)
    for i, r in enumerate(pool):
        t = tally(r.predictions)
        v = decide(t, tau)
        if isinstance(v, Answer):
            out[i] = Outcome.CORRECT if v.label == r.true_label else Outcome.WRONG
        else:
            out[i] = Outcome.SKIP
        maj[i] = predict_with_uncertainty(t)[0] == r.true_label
    return _Scored(out, maj)


@dataclass(frozen=True)
class EmpiricalRates:
    rdr: dict[float, Estimate]
    success: dict[tuple[float, int], Estimate]


def _mixed_rdr(alpha: float, right_in: int, n_in: int, right_out: int, n_out: int) -> Estimate:
    """Convex combination of per-pool rates.

    The interval mixes the per-pool Wilson bounds the same way, which is
    conservative for the combined rate.
    """
    parts = []
    if alpha > 0:
        parts.append((alpha, wilson_estimate(right_in, n_in)))
    if alpha < 1:
        parts.append((1 - alpha, wilson_estimate(right_out, n_out)))
    value = sum(w * e.value for w, e in parts)
    lo = sum(w * e.ci_low for w, e in parts)
    hi = sum(w * e.ci_high for w, e in parts)
    n = sum(e.n for _, e in parts)
    return Estimate(value, n, min(lo, value), max(hi, value))


def _needed_pools(alpha: float) -> tuple[bool, bool]:
    return alpha > 0, alpha < 1


def empirical_rates(log: PredictionLog, tau: float, alphas, Ts=(), seed: int = 0,
                    episodes: int = 400_000) -> EmpiricalRates:
    """Right decision rates and limited-skip success rates on a logged test set.

    Right decision rates mix the two pools analytically; success rates
    simulate ``episodes`` sessions per ``(alpha, T)``, drawing each trial's
    pool with probability ``alpha`` and a record uniformly with replacement.
    Cell ``i`` in ``(alpha, T)`` order uses stream ``(seed, i)``.
    """
    pools = {True: log.pool(True), False: log.pool(False)}
    scored = {flag: _score(pools[flag], tau) for flag in (True, False)}
    right_in = int((scored[True].outcomes == Outcome.CORRECT).sum())
    right_out = int((scored[False].outcomes != Outcome.WRONG).sum())

    def check(alpha):
        if not 0 <= alpha <= 1:
            raise ValueError(f"alpha={alpha} outside [0, 1]")
        for flag, needed in zip((True, False), _needed_pools(alpha)):
            if needed and not pools[flag]:
                raise ValueError(
                    f"alpha={alpha} needs {'in' if flag else 'out'}-distribution records, log has none"
                )

    rdr = {}
    for a in alphas:
        check(a)
        rdr[a] = _mixed_rdr(a, right_in, len(pools[True]), right_out, len(pools[False]))

    success = {}
    cell = 0
    for a in alphas:
        for T in Ts:
            if T < 0:
                raise ValueError("T must be nonnegative")
            success[(a, T)] = _simulate_sessions(scored, a, T, episodes, RngSpec(seed, cell))
            cell += 1
    return EmpiricalRates(rdr, success)


def _simulate_sessions(scored: dict[bool, _Scored], alpha: float, T: int, episodes: int,
                       spec: RngSpec) -> Estimate:
    rng = spec.generator()
    n = episodes * (T + 1)
    from_in = rng.random(n) < alpha
    outcomes = np.empty(n, dtype=np.int8)
    majority = np.empty(n, dtype=bool)
    for flag in (True, False):
        mask = from_in == flag
        size = int(mask.sum())
        if size == 0:
            continue
        pick = rng.integers(0, len(scored[flag].outcomes), size=size)
        outcomes[mask] = scored[flag].outcomes[pick]
        majority[mask] = scored[flag].majority_correct[pick]
    ok = episode_success(outcomes.reshape(episodes, T + 1), majority.reshape(episodes, T + 1))
    return wilson_estimate(int(ok.sum()), episodes)
