"""Synthetic trade datasets for the two null hypotheses.

calibrated
    Every insider-firm pair keeps its trade count and its anchored tenure
    [first trade, last trade]; dates are redrawn uniformly (with replacement)
    from the global open-day calendar restricted to the tenure, and each
    trade's direction is an independent Bernoulli(p_buy) purchase.

shuffle
    Timestamps and directions stay fixed; insider identities are permuted
    uniformly within each (firm, time-bin) stratum.

Each replica draws from its own stream seeded by ``(seed, replica_index)``,
so replicas are reproducible and independent of how they are scheduled.
"""

from __future__ import annotations

import enum
import logging
from collections import defaultdict
from dataclasses import dataclass
from datetime import date, timedelta
from functools import lru_cache
from typing import Sequence

import numpy as np

from .ingest import DEFAULT_HORIZON, Direction, InsiderFirmLog, TradeEvent

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CalibratedNullConfig:
    horizon: tuple[date, date] = DEFAULT_HORIZON
    quarter_length_days: int = 91
    open_business_days_per_quarter: int = 30
    p_buy: float = 0.528
    seed: int = 0
    replicas: int = 100

    def __post_init__(self):
        if not 0 <= self.p_buy <= 1:
            raise ValueError("p_buy must lie in [0, 1]")
        # a 91-day quarter holds 65 weekdays
        max_bd = (self.quarter_length_days // 7) * 5 + min(self.quarter_length_days % 7, 5)
        if self.open_business_days_per_quarter > max_bd:
            raise ValueError("more open days than business days in a quarter")
        if self.horizon[0] > self.horizon[1]:
            raise ValueError("empty horizon")


class Bin(str, enum.Enum):
    QUARTER = "quarter"
    MONTH = "month"


@dataclass(frozen=True)
class ShuffleConfig:
    bin: Bin = Bin.QUARTER
    seed: int = 0
    replicas: int = 100

    def __post_init__(self):
        object.__setattr__(self, "bin", Bin(self.bin))


def replica_rng(seed: int, replica_index: int, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, stream, replica_index]))


# ---------------------------------------------------------------------------
# calibrated generative null


@lru_cache(maxsize=16)
def _calendar(horizon: tuple[date, date], q_len: int, n_open: int) -> tuple[date, ...]:
    start, end = horizon
    out = []
    q_start = start
    while q_start <= end:
        q_end = min(q_start + timedelta(days=q_len - 1), end)
        d, taken = q_start, 0
        while d <= q_end and taken < n_open:
            if d.weekday() < 5:
                out.append(d)
                taken += 1
            d += timedelta(days=1)
        q_start += timedelta(days=q_len)
    return tuple(out)


def open_day_calendar(cfg: CalibratedNullConfig = CalibratedNullConfig()) -> list[date]:
    """First N weekdays of each fixed-length quarter tiling the horizon from its start."""
    return list(_calendar(cfg.horizon, cfg.quarter_length_days, cfg.open_business_days_per_quarter))


def _nearest_open_day(open_ord: np.ndarray, target: int) -> int:
    i = int(np.searchsorted(open_ord, target))
    cands = [open_ord[j] for j in (i - 1, i) if 0 <= j < len(open_ord)]
    # ties go to the earlier day
    return int(min(cands, key=lambda o: (abs(o - target), o)))


def generate_calibrated(
    logs: Sequence[InsiderFirmLog],
    cfg: CalibratedNullConfig = CalibratedNullConfig(),
    replica_index: int = 0,
) -> list[TradeEvent]:
    """One calibrated-null replica: per-pair counts and tenures kept, dates redrawn."""
    rng = replica_rng(cfg.seed, replica_index, stream=1)
    open_ord = np.array([d.toordinal() for d in open_day_calendar(cfg)], dtype=np.int64)
    events: list[TradeEvent] = []
    snapped = 0
    for log in sorted(logs, key=lambda l: (l.firm_id, l.insider_id)):
        lo, hi = log.first_date.toordinal(), log.last_date.toordinal()
        a, b = np.searchsorted(open_ord, lo, "left"), np.searchsorted(open_ord, hi, "right")
        count = log.n_trades
        if b > a:
            days = open_ord[rng.integers(a, b, size=count)]
        else:
            snapped += 1
            days = np.full(count, _nearest_open_day(open_ord, (lo + hi) // 2), dtype=np.int64)
        buys = rng.random(count) < cfg.p_buy
        for o, buy in zip(days, buys):
            events.append(
                TradeEvent(
                    log.insider_id,
                    log.firm_id,
                    date.fromordinal(int(o)),
                    Direction.ACQUIRE if buy else Direction.DISPOSE,
                )
            )
    if snapped:
        logger.info("calibrated replica %d: %d tenures without open days snapped", replica_index, snapped)
    return events


# ---------------------------------------------------------------------------
# constrained temporal shuffle


def time_bin(d: date, bin: Bin) -> tuple[int, int]:
    if bin is Bin.MONTH:
        return d.year, d.month
    return d.year, (d.month - 1) // 3 + 1


def strata(events: Sequence[TradeEvent], bin: Bin = Bin.QUARTER) -> dict[tuple, list[TradeEvent]]:
    """Events grouped by (firm, bin); each stratum sorted deterministically."""
    out: dict[tuple, list[TradeEvent]] = defaultdict(list)
    for e in events:
        out[(e.firm_id, *time_bin(e.date, bin))].append(e)
    return {k: sorted(v, key=lambda e: (e.date, e.direction.value, e.insider_id)) for k, v in sorted(out.items())}


def generate_shuffled(
    events: Sequence[TradeEvent],
    cfg: ShuffleConfig = ShuffleConfig(),
    replica_index: int = 0,
) -> list[TradeEvent]:
    """Permute insider ids within every (firm, bin) stratum; dates and directions stay put."""
    rng = replica_rng(cfg.seed, replica_index, stream=2)
    out: list[TradeEvent] = []
    for _, trades in strata(events, cfg.bin).items():
        ids = [e.insider_id for e in trades]
        perm = rng.permutation(len(ids))
        for j, e in enumerate(trades):
            out.append(TradeEvent(ids[perm[j]], e.firm_id, e.date, e.direction))
    return out


def logs_to_events(logs: Sequence[InsiderFirmLog]) -> list[TradeEvent]:
    return [e for log in logs for e in log.events()]
