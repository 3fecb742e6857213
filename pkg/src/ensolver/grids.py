"""Named parameter grids used by the test suite and the experiment scripts."""

from __future__ import annotations

from typing import Iterator

import numpy as np

from .votes import agreement_floor
from .world import WorldConfig

SMALL_M = (2, 3, 4, 5)
SMALL_N_S = (3, 4, 5, 8)
SMALL_TAU = (0.3, 0.5, 0.7)
SMALL_ALPHA = (0.0, 0.25, 0.5, 0.75, 1.0)
SMALL_T = (0, 1, 3, 5)


def beta_families(M: int) -> dict[str, tuple[float, ...]]:
    return {
        "uniform-0.5": (0.5,) * M,
        "uniform-0.8": (0.8,) * M,
        "mixed": tuple(float(b) for b in np.linspace(0.5, 0.9, M)),
    }


def small_grid() -> Iterator[tuple[str, WorldConfig]]:
    """Every tractable world with a nondegenerate threshold and beta_min > 1/N_S.

    Yields ``(family, cfg)`` with ``cfg.T == 0``; callers pick T.
    """
    for M in SMALL_M:
        for N in SMALL_N_S:
            for tau in SMALL_TAU:
                if agreement_floor(M, tau) < 1:
                    continue
                for family, betas in beta_families(M).items():
                    if min(betas) <= 1 / N:
                        continue
                    for alpha in SMALL_ALPHA:
                        yield family, WorldConfig(M, N, tau, alpha, betas)
