import json
import random

import numpy as np
import pytest

from ensolver import oracle
from ensolver.ingest import (
    LogFormatError,
    PredictionLog,
    empirical_rates,
    fit_params,
    load_prediction_log,
    log_from_batch,
    parse_csv,
    parse_json,
    world_config_from_fit,
)
from ensolver.world import RngSpec, WorldConfig, sample_batch

HEADER = "sample_id,provenance,true_label,pred_0,pred_1\n"


def test_parse_small_csv():
    log = parse_csv(HEADER + "a,in,x,x,x\nb,out,y,z,q\nc,in,\"p,q\",\"p,q\",r\n")
    assert log.M == 2 and len(log.records) == 3
    assert log.records[2].true_label == "p,q"
    assert [r.provenance for r in log.records] == ["in", "out", "in"]


def test_ragged_row_reports_line():
    with pytest.raises(LogFormatError, match="row 3") as e:
        parse_csv(HEADER + "a,in,x,x,x\nb,in,x,x,x,x\n")
    assert e.value.row == 3


def test_duplicate_and_missing_provenance():
    with pytest.raises(LogFormatError, match="row 3: duplicate sample_id"):
        parse_csv(HEADER + "a,in,x,x,x\na,in,x,x,x\n")
    with pytest.raises(LogFormatError, match="row 2: missing provenance"):
        parse_csv(HEADER + "a,,x,x,x\n")
    with pytest.raises(LogFormatError, match="provenance must be"):
        parse_csv(HEADER + "a,maybe,x,x,x\n")


def test_bad_header():
    with pytest.raises(LogFormatError, match="row 1"):
        parse_csv("id,prov,label,p0\n")
    with pytest.raises(LogFormatError, match="empty"):
        parse_csv("")


def test_normalization_is_opt_in():
    text = HEADER + "a,in,AbC,abc,ABC\n"
    assert fit_params(parse_csv(text)).betas == (0.0, 0.0)
    assert fit_params(parse_csv(text, "lowercase")).betas == (1.0, 1.0)


def test_csv_and_json_round_trip(tmp_path):
    cfg = WorldConfig(3, 6, 0.5, 0.5, (0.6, 0.7, 0.8))
    log = log_from_batch(sample_batch(cfg, RngSpec(0).generator(), 200))
    assert parse_csv(log.to_csv()) == log
    assert parse_json(log.to_json()) == log
    p = tmp_path / "log.json"
    p.write_text(log.to_json())
    assert load_prediction_log(p) == log
    p = tmp_path / "log.csv"
    p.write_text(log.to_csv())
    assert load_prediction_log(p) == log


def test_json_errors():
    with pytest.raises(LogFormatError, match="invalid JSON"):
        parse_json("{")
    doc = {"records": [{"sample_id": "a", "provenance": "in", "true_label": "x"}]}
    with pytest.raises(LogFormatError, match="row 1: missing field"):
        parse_json(json.dumps(doc))


def test_fit_params_order_invariant_and_accurate():
    betas = (0.55, 0.7, 0.85)
    cfg = WorldConfig(3, 10, 0.5, 1.0, betas)
    log = log_from_batch(sample_batch(cfg, RngSpec(1).generator(), 100_000))
    fit = fit_params(log)
    for b, got in zip(betas, fit.betas):
        assert abs(got - b) < 3 * np.sqrt(b * (1 - b) / 100_000)
    shuffled = list(log.records)
    random.Random(0).shuffle(shuffled)
    assert fit_params(PredictionLog(tuple(shuffled), log.M)) == fit
    c = world_config_from_fit(fit, 10, 0.5, 0.5)
    assert c.betas == fit.betas and c.beta_min == fit.beta_min


def test_empirical_rdr_pure_pools():
    text = HEADER + "a,in,x,x,x\nb,in,x,x,y\nc,in,x,y,y\nd,out,x,y,z\ne,out,x,y,y\n"
    log = parse_csv(text)
    r = empirical_rates(log, 0.5, [0.0, 1.0])
    # in-pool: only record a answers correctly; out-pool: d skips, e answers wrongly
    assert r.rdr[1.0].value == pytest.approx(1 / 3)
    assert r.rdr[0.0].value == pytest.approx(1 / 2)
    again = empirical_rates(log, 0.5, [0.0, 1.0])
    assert again.rdr == r.rdr


def test_everything_skipped_out_of_distribution():
    log = parse_csv(HEADER + "a,out,x,y,z\nb,out,x,q,r\n")
    assert empirical_rates(log, 0.5, [0.0]).rdr[0.0].value == 1.0


def test_missing_pool_is_an_error():
    log = parse_csv(HEADER + "a,in,x,x,x\n")
    with pytest.raises(ValueError, match="out-distribution"):
        empirical_rates(log, 0.5, [0.5])


def test_round_trip_against_oracle():
    cfg = WorldConfig(2, 4, 0.5, 0.5, (0.7, 0.7))
    log = log_from_batch(sample_batch(cfg, RngSpec(2).generator(), 100_000))
    r = empirical_rates(log, 0.5, [0.0, 0.5, 1.0], Ts=[3], seed=3, episodes=200_000)
    rates = oracle.exact_rates(cfg)
    for a, est in r.rdr.items():
        exact = oracle.exact_rdr(cfg.replace(alpha=a), rates)
        assert est.ci_low - 1e-3 <= exact <= est.ci_high + 1e-3
    for (a, T), est in r.success.items():
        exact = oracle.exact_session_success_rate(cfg.replace(alpha=a), T, rates)
        # resampling a finite log adds the log's own sampling error
        sd = np.sqrt(exact * (1 - exact) * (1 / est.n + 4 / 100_000))
        assert abs(est.value - exact) < 4 * sd
