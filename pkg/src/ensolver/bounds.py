"""Closed-form guarantees for the ensemble solver, evaluated in log space.

The out-of-distribution error bound (OEB) reaches 1e-33 and below for
realistic label domains, so binomial coefficients, powers, and tail sums are
carried as natural logs and only exponentiated at the end. Non-integer
``M * (1 - tau)`` is floored everywhere (the threshold count ``k``, the OEB
exponent, and the sum ranges).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.special import xlogy

from .logreal import LogReal, log_sum
from .votes import agreement_floor
from .world import WorldConfig

# Horner's rule is exact for T = 0 and has no division; past this the
# closed form is cheaper and just as accurate
_HORNER_MAX_T = 10_000


class DegenerateThresholdError(ValueError):
    pass


class AssumptionError(ValueError):
    pass


def log_binomial(n: int, r: int) -> LogReal:
    if not 0 <= r <= n:
        raise ValueError(f"binomial index out of range: C({n}, {r})")
    return LogReal(math.lgamma(n + 1) - math.lgamma(r + 1) - math.lgamma(n - r + 1))


def check_threshold(M: int, tau: float) -> int:
    """Return floor(M(1 - tau)) or raise if the bounds do not apply."""
    if M < 2:
        raise DegenerateThresholdError("degenerate threshold")
    j = agreement_floor(M, tau)
    if j < 1:
        raise DegenerateThresholdError("degenerate threshold")
    return j


def oeb(M: int, N_S: float, tau: float) -> LogReal:
    """Out-of-distribution error bound C(M, floor(M/2)) / N_S**floor(M(1-tau))."""
    j = check_threshold(M, tau)
    if not N_S >= 2:
        raise ValueError("N_S must be at least 2")
    return LogReal(log_binomial(M, M // 2).ln_value - j * math.log(N_S))


def binomial_range_sum(M: int, lo: int, hi: int, beta_min: float, beta_max: float) -> float:
    """sum_{i=lo}^{hi} C(M, i) beta_min**i (1 - beta_max)**(M - i).

    A bound expression, not a probability mass: with ``beta_min < beta_max``
    the full range sums to less than one.
    """
    if not 0 <= lo <= hi <= M:
        raise ValueError(f"invalid range [{lo}, {hi}] for M={M}")
    if not 0 <= beta_min <= beta_max <= 1:
        raise ValueError("need 0 <= beta_min <= beta_max <= 1")
    terms = [
        LogReal(
            log_binomial(M, i).ln_value
            + xlogy(i, beta_min)
            + xlogy(M - i, 1.0 - beta_max)
        )
        for i in range(lo, hi + 1)
    ]
    return float(log_sum(terms))


def _check_cfg(cfg: WorldConfig) -> None:
    check_threshold(cfg.M, cfg.tau)
    if not cfg.beta_min > 1.0 / cfg.N_S:
        raise AssumptionError(
            f"beta_min={cfg.beta_min} must exceed 1/N_S={1.0 / cfg.N_S}"
        )


def _tail(cfg: WorldConfig) -> float:
    return binomial_range_sum(cfg.M, cfg.k, cfg.M, cfg.beta_min, cfg.beta_max)


def _head(cfg: WorldConfig) -> float:
    return binomial_range_sum(cfg.M, 0, cfg.k - 1, cfg.beta_min, cfg.beta_max)


def rdr_lower_bound(cfg: WorldConfig) -> float:
    """Lower bound on the right decision rate (answer correctly in-dist,
    answer correctly or skip out-of-dist)."""
    _check_cfg(cfg)
    E = float(oeb(cfg.M, cfg.N_S, cfg.tau))
    return cfg.alpha * _tail(cfg) + (1.0 - cfg.alpha) - E


def correct_rate_lower_bound(cfg: WorldConfig) -> float:
    _check_cfg(cfg)
    E = float(oeb(cfg.M, cfg.N_S, cfg.tau))
    return cfg.alpha * _tail(cfg) - cfg.alpha * E


def _skip_bound_parts(cfg: WorldConfig) -> tuple[float, float]:
    """Skip-rate lower bound rho and 1 - rho, the latter formed directly.

    At alpha = 0, rho = 1 - N_S/(N_S-1) * OEB rounds to exactly 1.0 in double
    precision; 1 - rho must never be computed by subtraction.
    """
    _check_cfg(cfg)
    a, N = cfg.alpha, cfg.N_S
    E = float(oeb(cfg.M, N, cfg.tau))
    head = _head(cfg)
    c = (N - a) / (N - 1.0)
    rho = a * head + (1.0 - a) - c * E
    one_minus_rho = a * (1.0 - head) + c * E
    return rho, one_minus_rho


def skip_rate_lower_bound(cfg: WorldConfig) -> float:
    return _skip_bound_parts(cfg)[0]


def geometric_sum(r: float, T: int, one_minus_r: float | None = None) -> float:
    """sum_{t=0}^{T} r**t for r < 1."""
    if T < 0:
        raise ValueError("T must be nonnegative")
    if one_minus_r is None:
        one_minus_r = 1.0 - r
    if T <= _HORNER_MAX_T:
        s = 1.0
        for _ in range(T):
            s = 1.0 + r * s
        return s
    if 0 < one_minus_r < 1:
        return -math.expm1((T + 1) * math.log1p(-one_minus_r)) / one_minus_r
    return (1.0 - r ** (T + 1)) / one_minus_r


def success_rate_lower_bound(cfg: WorldConfig, T: int | None = None) -> float:
    """Lower bound on the limited-skip success rate with at most ``T`` skips.

    Combines the correct-rate bound gamma and skip-rate bound rho as
    ``gamma * sum_{t<=T} rho**t``. A negative factor carries no information
    and must not enter the product, where two negatives (or an alternating
    power of negative rho) can exceed the true rate: a nonpositive gamma is
    returned as is (still a valid, vacuous bound) and a negative rho is
    replaced by 0. Whenever gamma, rho >= 0 the result is the plain formula,
    and at T = 0 it is always exactly gamma.
    """
    T = cfg.T if T is None else T
    if T < 0:
        raise ValueError("T must be nonnegative")
    gamma = correct_rate_lower_bound(cfg)
    rho, one_minus_rho = _skip_bound_parts(cfg)
    if gamma <= 0:
        return gamma
    if one_minus_rho <= 0:
        return gamma * (T + 1)
    if rho < 0:
        rho, one_minus_rho = 0.0, 1.0
    return gamma * geometric_sum(rho, T, one_minus_rho)


def uniform_tail_gap(M: int, N_S: float, tau: float) -> tuple[LogReal, LogReal]:
    """Both sides of sum_{i=k}^{M} C(M, i) / N_S**i < OEB / (N_S - 1)."""
    j = check_threshold(M, tau)
    k = j + 1
    lnN = math.log(N_S)
    lhs = log_sum(LogReal(log_binomial(M, i).ln_value - i * lnN) for i in range(k, M + 1))
    rhs = LogReal(oeb(M, N_S, tau).ln_value - math.log(N_S - 1.0))
    return lhs, rhs


@dataclass(frozen=True)
class BoundReport:
    k: int
    T: int
    oeb: LogReal
    rdr_lower: float
    correct_lower: float
    skip_lower: float
    success_lower: float
    vacuous: dict[str, bool] = field(default_factory=dict)

    @property
    def vacuous_names(self) -> list[str]:
        return [name for name, flag in self.vacuous.items() if flag]


def _is_vacuous(x: float) -> bool:
    return x <= 0.0 or x >= 1.0


def bound_report(cfg: WorldConfig, T: int | None = None) -> BoundReport:
    T = cfg.T if T is None else T
    gamma = correct_rate_lower_bound(cfg)
    rho, one_minus_rho = _skip_bound_parts(cfg)
    values = {
        "rdr": rdr_lower_bound(cfg),
        "correct": gamma,
        "skip": rho,
        "success": success_rate_lower_bound(cfg, T),
    }
    vacuous = {name: _is_vacuous(v) for name, v in values.items()}
    # a negative factor means the composite is not the plain formula
    vacuous["success"] = vacuous["success"] or gamma < 0 or rho < 0 or one_minus_rho <= 0
    return BoundReport(
        k=cfg.k,
        T=T,
        oeb=oeb(cfg.M, cfg.N_S, cfg.tau),
        rdr_lower=values["rdr"],
        correct_lower=gamma,
        skip_lower=rho,
        success_lower=values["success"],
        vacuous=vacuous,
    )
