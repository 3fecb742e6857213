"""Command-line front end.

Subcommands: ``bounds``, ``simulate``, ``oracle``, ``empirical``, and
``export-log``. Grid configs are JSON; reports are CSV or JSON, fully built in
memory before anything is written so that a failure never leaves a partial
file behind.

Grid config layout (top-level keys act as defaults for every cell; ``alpha``
and ``T`` may be lists and become grid axes)::

    {"N_S": 2.9e12, "alpha": [0, 0.5, 1], "T": [3],
     "cells": [{"label": "3E", "M": 2, "tau": 0.5,
                "beta_min": 0.734, "beta_max": 0.739}]}

A bare WorldConfig document (``M``, ``N_S``, ``tau``, ``alpha``, ``betas``,
``T``) is a one-cell grid.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import bounds, montecarlo, oracle
from .ingest import (
    LogFormatError,
    Normalization,
    empirical_rates,
    fit_params,
    load_prediction_log,
    log_from_batch,
    world_config_from_fit,
)
from .votes import answer_count_threshold
from .world import RngSpec, WorldConfig, sample_batch

NA = "na"
_EXPORT_STREAM = 2


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Cell:
    label: str
    cfg: WorldConfig
    T: int


def _as_list(value, name):
    items = value if isinstance(value, list) else [value]
    if not items:
        raise ConfigError(f"grid axis {name!r} is empty")
    return items


def expand_grid(doc: dict, alphas=None, Ts=None) -> list[Cell]:
    """Cells in config order, then alpha, then T."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    defaults = {k: v for k, v in doc.items() if k != "cells"}
    raw_cells = doc.get("cells", [{}])
    if not isinstance(raw_cells, list) or not raw_cells:
        raise ConfigError("'cells' must be a nonempty list")
    out = []
    for n, raw in enumerate(raw_cells, start=1):
        merged = {**defaults, **raw}
        label = str(merged.pop("label", ""))
        a_axis = _as_list(alphas if alphas is not None else merged.pop("alpha", 1.0), "alpha")
        t_axis = _as_list(Ts if Ts is not None else merged.pop("T", 0), "T")
        merged.pop("alpha", None)
        merged.pop("T", None)
        for a in a_axis:
            for T in t_axis:
                try:
                    cfg = WorldConfig.from_dict({**merged, "alpha": a, "T": T})
                except (KeyError, TypeError, ValueError) as exc:
                    raise ConfigError(f"cell {n}: {exc}") from None
                out.append(Cell(label, cfg, cfg.T))
    return out


def load_grid(path: str, alphas=None, Ts=None) -> list[Cell]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        return expand_grid(doc, alphas, Ts)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _fmt3(x) -> str:
    return NA if x is None else f"{x:.3f}"


def _full(x) -> str:
    return NA if x is None else repr(float(x))


def _cell_columns(cell: Cell) -> dict:
    c = cell.cfg
    return {"label": cell.label, "M": c.M, "N_S": _full(c.N_S), "tau": repr(c.tau),
            "alpha": repr(c.alpha), "T": cell.T}


BOUNDS_COLUMNS = [
    "label", "M", "N_S", "tau", "alpha", "T", "k", "oeb_log10",
    "rdr_lower", "correct_lower", "skip_lower", "success_lower",
    "rdr_lower_full", "correct_lower_full", "skip_lower_full", "success_lower_full",
    "vacuous_flags",
]


def bounds_rows(cells: list[Cell]) -> list[dict]:
    rows = []
    for cell in cells:
        row = _cell_columns(cell)
        row["k"] = answer_count_threshold(cell.cfg.M, cell.cfg.tau)
        try:
            rep = bounds.bound_report(cell.cfg, cell.T)
        except bounds.DegenerateThresholdError:
            rep = None
        names = ["rdr_lower", "correct_lower", "skip_lower", "success_lower"]
        if rep is None:
            row["oeb_log10"] = NA
            for name in names:
                row[name] = NA
                row[name + "_full"] = NA
            row["vacuous_flags"] = NA
        else:
            row["oeb_log10"] = f"{rep.oeb.log10:.6f}"
            for name in names:
                row[name] = _fmt3(getattr(rep, name))
                row[name + "_full"] = _full(getattr(rep, name))
            row["vacuous_flags"] = ";".join(rep.vacuous_names)
        rows.append(row)
    return rows


SIM_COLUMNS = [
    "label", "M", "N_S", "tau", "alpha", "T", "trials", "episodes",
    "rdr_empirical", "rdr_ci_low", "rdr_ci_high", "rdr_theoretical",
    "success_empirical", "success_ci_low", "success_ci_high", "success_theoretical",
]
SIM_EXACT_COLUMNS = ["rdr_exact", "success_exact"]
PLOT_COLUMNS = ["label", "T", "alpha", "empirical", "ci_low", "ci_high", "theoretical"]


def simulate_rows(cells: list[Cell], trials: int, episodes: int, seed: int,
                  exact: bool) -> list[dict]:
    grid = [(c.cfg, c.T) for c in cells]
    rdr = montecarlo.sweep(grid, trials, seed, "rdr", with_exact=exact)
    succ = montecarlo.sweep(grid, episodes, seed, "success", with_exact=exact)
    rows = []
    for cell, r, s in zip(cells, rdr, succ):
        row = _cell_columns(cell)
        row.update({
            "trials": trials, "episodes": episodes,
            "rdr_empirical": _full(r.empirical.value),
            "rdr_ci_low": _full(r.empirical.ci_low),
            "rdr_ci_high": _full(r.empirical.ci_high),
            "rdr_theoretical": _full(r.theoretical),
            "success_empirical": _full(s.empirical.value),
            "success_ci_low": _full(s.empirical.ci_low),
            "success_ci_high": _full(s.empirical.ci_high),
            "success_theoretical": _full(s.theoretical),
        })
        if exact:
            row["rdr_exact"] = _full(r.exact)
            row["success_exact"] = _full(s.exact)
        rows.append(row)
    return rows


def plot_rows(sim_rows: list[dict]) -> list[dict]:
    return [
        {"label": r["label"], "T": r["T"], "alpha": r["alpha"],
         "empirical": r["success_empirical"], "ci_low": r["success_ci_low"],
         "ci_high": r["success_ci_high"], "theoretical": r["success_theoretical"]}
        for r in sim_rows
    ]


ORACLE_COLUMNS = [
    "label", "M", "N_S", "tau", "alpha", "T",
    "p_correct_in", "p_skip_in", "p_wrong_in",
    "p_correct_out", "p_skip_out", "p_wrong_out",
    "p_tail_event_in", "p_majority_in", "p_majority_out", "oeb",
    "exact_rdr", "rdr_lower", "exact_success", "exact_session_success", "success_lower",
    "dominance",
]


def oracle_rows(cells: list[Cell]) -> list[dict]:
    rows = []
    for cell in cells:
        cfg = cell.cfg
        rates = oracle.exact_rates(cfg)
        row = _cell_columns(cell)
        for name in ORACLE_COLUMNS[6:15]:
            row[name] = _full(getattr(rates, name))
        ex_rdr = oracle.exact_rdr(cfg, rates)
        ex_s = oracle.exact_success_rate(cfg, cell.T, rates)
        row["exact_rdr"] = _full(ex_rdr)
        row["exact_success"] = _full(ex_s)
        row["exact_session_success"] = _full(oracle.exact_session_success_rate(cfg, cell.T, rates))
        try:
            E = float(bounds.oeb(cfg.M, cfg.N_S, cfg.tau))
            lo_rdr = bounds.rdr_lower_bound(cfg)
            lo_s = bounds.success_rate_lower_bound(cfg, cell.T)
            pc, ps = rates.mixed(cfg.alpha)
            holds = (
                rates.p_wrong_out < E and rates.p_tail_event_in < E and ex_rdr > lo_rdr
                and pc > bounds.correct_rate_lower_bound(cfg)
                and ps > bounds.skip_rate_lower_bound(cfg) and ex_s > lo_s
            )
            row.update(oeb=_full(E), rdr_lower=_full(lo_rdr), success_lower=_full(lo_s),
                       dominance="ok" if holds else "violated")
        except (bounds.DegenerateThresholdError, bounds.AssumptionError):
            row.update(oeb=NA, rdr_lower=NA, success_lower=NA, dominance=NA)
        rows.append(row)
    return rows


EMPIRICAL_COLUMNS = [
    "alpha", "T", "rdr", "rdr_ci_low", "rdr_ci_high",
    "success", "success_ci_low", "success_ci_high",
    "n_in", "n_out", "beta_min", "beta_max", "betas",
]
EMPIRICAL_THEORY_COLUMNS = ["rdr_theoretical", "success_theoretical"]


def empirical_rows(log, tau, alphas, Ts, seed, episodes, n_s=None) -> list[dict]:
    rates = empirical_rates(log, tau, alphas, Ts, seed, episodes)
    try:
        fit = fit_params(log)
    except ValueError:
        fit = None
    rows = []
    for a in alphas:
        for T in Ts:
            r, s = rates.rdr[a], rates.success[(a, T)]
            row = {
                "alpha": repr(float(a)), "T": T,
                "rdr": _full(r.value), "rdr_ci_low": _full(r.ci_low), "rdr_ci_high": _full(r.ci_high),
                "success": _full(s.value), "success_ci_low": _full(s.ci_low),
                "success_ci_high": _full(s.ci_high),
                "n_in": len(log.pool(True)), "n_out": len(log.pool(False)),
                "beta_min": _full(fit.beta_min) if fit else NA,
                "beta_max": _full(fit.beta_max) if fit else NA,
                "betas": ";".join(repr(b) for b in fit.betas) if fit else NA,
            }
            if n_s is not None:
                th_r = th_s = None
                if fit is not None:
                    cfg = world_config_from_fit(fit, n_s, tau, a, T)
                    try:
                        th_r = bounds.rdr_lower_bound(cfg)
                        th_s = bounds.success_rate_lower_bound(cfg, T)
                    except (bounds.DegenerateThresholdError, bounds.AssumptionError):
                        pass
                row["rdr_theoretical"] = _full(th_r)
                row["success_theoretical"] = _full(th_s)
            rows.append(row)
    return rows


def render(rows: list[dict], columns: list[str], fmt: str) -> str:
    if fmt == "json":
        return json.dumps([{c: r[c] for c in columns} for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([r[c] for c in columns])
    return buf.getvalue()


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def _int_list(text: str) -> list[int]:
    try:
        values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}")
    if any(v < 0 for v in values):
        raise argparse.ArgumentTypeError("skip counts must be nonnegative")
    return values


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ensolver", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, help="grid or WorldConfig JSON")
        sp.add_argument("--out", help="report path (default: stdout)")
        sp.add_argument("--format", choices=["csv", "json"], default="csv")

    def axes(sp):
        sp.add_argument("--alpha", type=_float_list, help="override the alpha axis, e.g. 0,0.5,1")
        sp.add_argument("--max-skips", type=_int_list, help="override the T axis, e.g. 0,1,3")

    sp = sub.add_parser("bounds", help="closed-form lower bounds per grid cell")
    common(sp)
    axes(sp)

    sp = sub.add_parser("simulate", help="Monte Carlo estimates per grid cell")
    common(sp)
    axes(sp)
    sp.add_argument("--seed", type=_u64, default=0)
    sp.add_argument("--trials", type=_positive, default=montecarlo.DEFAULT_TRIALS)
    sp.add_argument("--episodes", type=_positive, default=montecarlo.DEFAULT_EPISODES)
    sp.add_argument("--exact", action="store_true", help="add exact oracle columns")
    sp.add_argument("--plot-data", action="store_true",
                    help="emit only T, alpha, success estimate, CI, and bound")

    sp = sub.add_parser("oracle", help="exact rates by enumeration (small instances)")
    common(sp)
    axes(sp)

    sp = sub.add_parser("empirical", help="rates from a prediction log")
    common(sp, config=False)
    sp.add_argument("log", help="prediction log (.csv or .json)")
    sp.add_argument("--tau", type=float, required=True)
    sp.add_argument("--alpha", type=_float_list, default=[0.0, 0.2, 0.4, 0.6, 0.8, 1.0])
    sp.add_argument("--max-skips", type=_int_list, default=[3])
    sp.add_argument("--seed", type=_u64, default=0)
    sp.add_argument("--episodes", type=_positive, default=montecarlo.DEFAULT_EPISODES)
    sp.add_argument("--normalize", choices=[n.value for n in Normalization], default="none")
    sp.add_argument("--n-s", type=float, help="label-domain size; adds bound columns")

    sp = sub.add_parser("export-log", help="write simulated trials as a prediction log")
    common(sp)
    sp.add_argument("--seed", type=_u64, default=0)
    sp.add_argument("--trials", type=_positive, default=montecarlo.DEFAULT_TRIALS)
    return p


def run(args) -> str:
    if args.command == "empirical":
        if not 0 < args.tau <= 1:
            raise ConfigError("--tau must lie in (0, 1]")
        log = load_prediction_log(args.log, args.normalize)
        rows = empirical_rows(log, args.tau, args.alpha, args.max_skips, args.seed,
                              args.episodes, args.n_s)
        cols = EMPIRICAL_COLUMNS + (EMPIRICAL_THEORY_COLUMNS if args.n_s is not None else [])
        return render(rows, cols, args.format)

    if args.command == "export-log":
        cells = load_grid(args.config)
        if len(cells) != 1:
            raise ConfigError(f"export-log needs a single-cell config, got {len(cells)} cells")
        rng = RngSpec(args.seed).child(_EXPORT_STREAM).generator()
        log = log_from_batch(sample_batch(cells[0].cfg, rng, args.trials))
        return log.to_json() + "\n" if args.format == "json" else log.to_csv()

    cells = load_grid(args.config, args.alpha, args.max_skips)
    if args.command == "bounds":
        return render(bounds_rows(cells), BOUNDS_COLUMNS, args.format)
    if args.command == "oracle":
        return render(oracle_rows(cells), ORACLE_COLUMNS, args.format)
    if args.command == "simulate":
        rows = simulate_rows(cells, args.trials, args.episodes, args.seed, args.exact)
        if args.plot_data:
            return render(plot_rows(rows), PLOT_COLUMNS, args.format)
        cols = SIM_COLUMNS + (SIM_EXACT_COLUMNS if args.exact else [])
        return render(rows, cols, args.format)
    raise ConfigError(f"unknown command {args.command}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = run(args)
    except (ConfigError, LogFormatError, oracle.OracleTooLargeError, ValueError, OSError) as exc:
        print(f"ensolver {args.command}: error: {exc}", file=sys.stderr)
        return 1
    if args.out:
        try:
            Path(args.out).write_text(text, encoding="utf-8")
        except OSError as exc:
            print(f"ensolver {args.command}: error: {args.out}: {exc.strerror}", file=sys.stderr)
            return 1
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
