"""Check every bound against the exact oracle on the small grid and report the
tightest margins.

    python3 scripts/verify_small_grid.py
"""

from collections import defaultdict

from ensolver import bounds, oracle
from ensolver.grids import SMALL_T, small_grid


def main():
    margins = defaultdict(lambda: (float("inf"), None))
    cells = 0
    for family, cfg in small_grid():
        cells += 1
        r = oracle.exact_rates(cfg)
        pc, ps = r.mixed(cfg.alpha)
        E = float(bounds.oeb(cfg.M, cfg.N_S, cfg.tau))
        gaps = {
            "out wrong < oeb": E - r.p_wrong_out,
            "in tail < oeb": E - r.p_tail_event_in,
            "rdr": oracle.exact_rdr(cfg, r) - bounds.rdr_lower_bound(cfg),
            "correct": pc - bounds.correct_rate_lower_bound(cfg),
            "skip": ps - bounds.skip_rate_lower_bound(cfg),
        }
        for T in SMALL_T:
            gaps[f"success T={T}"] = oracle.exact_success_rate(cfg, T, r) - bounds.success_rate_lower_bound(cfg, T)
        lhs, rhs = bounds.uniform_tail_gap(cfg.M, cfg.N_S, cfg.tau)
        gaps["uniform tail"] = float(rhs) - float(lhs)
        for name, g in gaps.items():
            if g < margins[name][0]:
                margins[name] = (g, (family, cfg.M, cfg.N_S, cfg.tau, cfg.alpha))
    print(f"{cells} cells")
    for name, (g, where) in margins.items():
        status = "ok" if g > 0 else "VIOLATED"
        print(f"{name:<16} min margin {g:.3e} {status}  at {where}")


if __name__ == "__main__":
    main()
