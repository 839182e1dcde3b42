"""Chance-overlap probability, binomial KL tail bounds and the FWER-calibrated threshold.

Under the independent random-timing null each insider picks trade days
uniformly (with replacement) from ``A`` allowed days. A trade has a weekly
neighbour in a log of ``n`` trades with probability
``p_n = 1 - (1 - 14/A)^n``, and the directional best-match score is
dominated by Binomial(m, p_n)/m, which gives a Chernoff bound on the pair
similarity. The calibrated threshold is the smallest tau whose bound, after a
union bound over all within-firm pairs, keeps the family-wise error at alpha.
All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .similarity import DEFAULT_KERNEL, KernelConfig


class InfeasibleThreshold(ValueError):
    pass


@dataclass(frozen=True)
class CalibrationConfig:
    allowed_days: int = 1200
    m: int = 8
    n: int = 8
    n_firms: int = 9426
    n_insiders: int = 70941
    alpha: float = 0.05
    window_days: int = 14  # +-7 days around a trade
    allow_asymmetric: bool = False

    def __post_init__(self):
        if self.allowed_days <= self.window_days:
            raise ValueError("allowed_days must exceed the hit window")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.m != self.n and not self.allow_asymmetric:
            raise ValueError("asymmetric (m, n) is only supported with allow_asymmetric=True")


@dataclass(frozen=True)
class CalibrationResult:
    p_n: float
    p_m: float
    n_pairs: float
    required_kl: float
    tau_star: float
    chernoff_at_tau_star: float

    def as_dict(self) -> dict:
        return asdict(self)


def chance_neighbor_prob(n: int, allowed_days: int, window_days: int = 14) -> float:
    """Probability that a fixed trade has at least one of ``n`` random trades within the window."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if allowed_days <= window_days:
        raise ValueError("allowed_days must exceed the hit window")
    # 1 - (1-q)^n without cancellation for tiny q
    return -math.expm1(n * math.log1p(-window_days / allowed_days))


def kl_divergence(a: float, b: float) -> float:
    """Binary KL divergence D(a||b) with 0 log 0 = 0; ``inf`` if b is 0 or 1 and a differs."""
    if not (0 <= a <= 1 and 0 <= b <= 1):
        raise ValueError("arguments must lie in [0, 1]")
    out = 0.0
    for p, q in ((a, b), (1 - a, 1 - b)):
        if p == 0:
            continue
        if q == 0:
            return math.inf
        out += p * math.log(p / q)
    return out


def n_pairs_estimate(n_firms: int, n_insiders: int) -> float:
    """Within-firm pair count from the mean firm size: n_firms * C(nbar, 2)."""
    nbar = n_insiders / n_firms
    return n_firms * nbar * (nbar - 1) / 2


def n_pairs_exact(firm_sizes) -> int:
    return int(sum(s * (s - 1) // 2 for s in firm_sizes))


def pair_tail_bound(m: int, n: int, tau: float, allowed_days: int = 1200, window_days: int = 14) -> float:
    """Chernoff bound exp(-m D(tau||p_n) - n D(tau||p_m)) on P(S >= tau); 1 when vacuous."""
    p_n = chance_neighbor_prob(n, allowed_days, window_days)
    p_m = chance_neighbor_prob(m, allowed_days, window_days)
    if tau <= max(p_n, p_m):
        return 1.0
    return math.exp(-m * kl_divergence(tau, p_n) - n * kl_divergence(tau, p_m))


def _required_kl(cfg: CalibrationConfig, n_pairs: float) -> float:
    return max(0.0, math.log(n_pairs / cfg.alpha)) / (cfg.m + cfg.n)


def solve_threshold(p: float, required_kl: float, tol: float = 1e-6) -> float:
    """Smallest tau in (p, 1) with D(tau||p) >= required_kl, by bisection."""
    if required_kl <= 0:
        return p
    if kl_divergence(1.0, p) < required_kl:
        raise InfeasibleThreshold(
            f"required KL {required_kl:.4f} exceeds the maximum D(1||p) = {kl_divergence(1.0, p):.4f}"
        )
    lo, hi = p, 1.0
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if kl_divergence(mid, p) >= required_kl:
            hi = mid
        else:
            lo = mid
    return hi


def calibrate_threshold(cfg: CalibrationConfig = CalibrationConfig(), n_pairs: float | None = None) -> CalibrationResult:
    """Family-wise calibrated critical similarity.

    With ``m == n`` the two exponents coincide and the condition reduces to
    D(tau||p_n) >= log(N_pairs/alpha)/(m+n). For asymmetric counts the
    threshold solves m D(tau||p_n) + n D(tau||p_m) >= log(N_pairs/alpha).
    """
    pairs = n_pairs_estimate(cfg.n_firms, cfg.n_insiders) if n_pairs is None else n_pairs
    p_n = chance_neighbor_prob(cfg.n, cfg.allowed_days, cfg.window_days)
    p_m = chance_neighbor_prob(cfg.m, cfg.allowed_days, cfg.window_days)
    req = _required_kl(cfg, pairs)
    if cfg.m == cfg.n:
        tau = solve_threshold(p_n, req)
    else:
        budget = req * (cfg.m + cfg.n)
        lo, hi = max(p_n, p_m), 1.0

        def exponent(t):
            return cfg.m * kl_divergence(t, p_n) + cfg.n * kl_divergence(t, p_m)

        if exponent(hi) < budget:
            raise InfeasibleThreshold("no threshold below 1 meets the budget")
        while hi - lo > 1e-6:
            mid = (lo + hi) / 2
            lo, hi = (lo, mid) if exponent(mid) >= budget else (mid, hi)
        tau = hi
    return CalibrationResult(
        p_n=p_n,
        p_m=p_m,
        n_pairs=pairs,
        required_kl=req,
        tau_star=tau,
        chernoff_at_tau_star=pair_tail_bound(cfg.m, cfg.n, tau, cfg.allowed_days, cfg.window_days),
    )


def simulate_pair_similarity(
    m: int,
    n: int,
    allowed_days: int,
    trials: int,
    seed: int = 0,
    kernel: KernelConfig = DEFAULT_KERNEL,
    chunk: int = 100_000,
) -> np.ndarray:
    """Best-match similarity of ``trials`` independent random pairs under the uniform null.

    Allowed days are the consecutive integers 0..A-1; draws are with replacement.
    """
    rng = np.random.default_rng(seed)
    width = kernel.width_days
    out = np.empty(trials)
    for lo in range(0, trials, chunk):
        size = min(chunk, trials - lo)
        x = rng.integers(0, allowed_days, size=(size, m))
        y = rng.integers(0, allowed_days, size=(size, n))
        gap = np.abs(x[:, :, None] - y[:, None, :])
        credit = np.clip(width - gap, 0, None)
        cx = credit.max(axis=2).sum(axis=1)
        cy = credit.max(axis=1).sum(axis=1)
        out[lo : lo + size] = (cx * n + cy * m) / (2 * m * n * width)
    return out


def empirical_false_positive_rate(
    m: int = 8,
    n: int = 8,
    tau: float = 0.8,
    allowed_days: int = 1200,
    trials: int = 1_000_000,
    seed: int = 0,
) -> float:
    """Monte-Carlo fraction of null pairs with similarity >= tau."""
    if trials < 1:
        raise ValueError("trials must be positive")
    s = simulate_pair_similarity(m, n, allowed_days, trials, seed)
    return float(np.mean(s >= tau))


def wilson_interval(hits: int, trials: int, z: float = 3.0) -> tuple[float, float]:
    p = hits / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)
