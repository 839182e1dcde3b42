"""Temporal-alignment similarity between two insiders' trade logs.

Two measures are provided:

* best-match: each trade is credited with the kernel weight of its closest
  counterpart in the other log, averaged per log and symmetrised;
* assignment: trades are paired one-to-one by an exact maximum-weight matching
  and the matched weight is normalised by the number of calendar (ISO) weeks
  in which both insiders trade.

Kernel weights are ``(width - gap) / width`` for ``gap <= width``, so every
sum is carried out on the integer numerators and divided once at the end.
That keeps scores bit-reproducible and exactly symmetric.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import date
from typing import Sequence

import numpy as np

from .ingest import InsiderFirmLog
from .matching import max_weight_matching

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KernelConfig:
    width_days: int = 7

    def __post_init__(self):
        if int(self.width_days) != self.width_days or self.width_days < 1:
            raise ValueError(f"width_days must be a positive integer, got {self.width_days}")


DEFAULT_KERNEL = KernelConfig()


def kernel(d: int, cfg: KernelConfig = DEFAULT_KERNEL) -> float:
    """Linear weekly kernel: 1 at a same-day match, 0 from ``width_days`` on."""
    if d < 0:
        raise ValueError(f"gap must be nonnegative, got {d}")
    w = cfg.width_days
    return (w - d) / w if d <= w else 0.0


def _ordinals(dates) -> np.ndarray:
    if isinstance(dates, np.ndarray) and dates.dtype.kind in "iu":
        return np.sort(dates.astype(np.int64))
    return np.sort(np.fromiter((d.toordinal() for d in dates), dtype=np.int64, count=len(dates)))


def _nearest_gaps(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """For each element of sorted ``a``, the distance to the nearest element of sorted ``b``."""
    idx = np.searchsorted(b, a)
    right = b[np.minimum(idx, len(b) - 1)]
    left = b[np.maximum(idx - 1, 0)]
    return np.minimum(np.abs(a - right), np.abs(a - left))


def _credit(gaps: np.ndarray, width: int) -> int:
    return int(np.clip(width - gaps, 0, None).sum())


def directional_similarity(x_dates, y_dates, cfg: KernelConfig = DEFAULT_KERNEL) -> float:
    """Average over ``x_dates`` of the best kernel weight found in ``y_dates``."""
    x, y = _ordinals(x_dates), _ordinals(y_dates)
    if len(x) == 0 or len(y) == 0:
        return 0.0
    return _credit(_nearest_gaps(x, y), cfg.width_days) / (len(x) * cfg.width_days)


def best_match_similarity(x_dates, y_dates, cfg: KernelConfig = DEFAULT_KERNEL) -> float:
    """Symmetrised best-match similarity; 0 when either log is empty.

    Accepts sequences of ``datetime.date`` or integer day ordinals. Duplicate
    dates are allowed and counted with multiplicity.
    """
    x, y = _ordinals(x_dates), _ordinals(y_dates)
    if len(x) == 0 or len(y) == 0:
        return 0.0
    width = cfg.width_days
    cx = _credit(_nearest_gaps(x, y), width)
    cy = _credit(_nearest_gaps(y, x), width)
    # (cx/(m w) + cy/(n w)) / 2 as a single rational -> symmetric by construction
    m, n = len(x), len(y)
    return (cx * n + cy * m) / (2 * m * n * width)


def _iso_week(ordinal: int) -> tuple[int, int]:
    iso = date.fromordinal(int(ordinal)).isocalendar()
    return iso[0], iso[1]


def matched_week_set(x_dates, y_dates, cfg: KernelConfig = DEFAULT_KERNEL) -> set[tuple[int, int]]:
    """ISO weeks holding at least one cross-log pair with positive kernel weight.

    A pair is attributed to the week of its earlier date.
    """
    x, y = _ordinals(x_dates), _ordinals(y_dates)
    weeks: set[tuple[int, int]] = set()
    if len(x) == 0 or len(y) == 0:
        return weeks
    width = cfg.width_days
    lo = np.searchsorted(y, x - width, side="right")
    hi = np.searchsorted(y, x + width, side="left")
    for xi, a, b in zip(x, lo, hi):
        for yj in y[a:b]:
            weeks.add(_iso_week(min(xi, yj)))
    return weeks


@dataclass(frozen=True)
class SimilarityScore:
    s_acquire: float
    s_dispose: float
    combined: float
    n_acquire_x: int
    n_acquire_y: int
    n_dispose_x: int
    n_dispose_y: int
    matched_weeks: int

    @property
    def total_trades(self) -> int:
        return self.n_acquire_x + self.n_acquire_y + self.n_dispose_x + self.n_dispose_y


def _activity_blend(s_a: float, s_d: float, t_a: int, t_d: int) -> float:
    t = t_a + t_d
    if t == 0:
        raise ValueError("no trades in either log (T = 0)")
    return (t_a / t) * s_a + (t_d / t) * s_d


def _matched_weeks(x: InsiderFirmLog, y: InsiderFirmLog, cfg: KernelConfig) -> int:
    weeks = matched_week_set(x.acquire_dates, y.acquire_dates, cfg)
    weeks |= matched_week_set(x.dispose_dates, y.dispose_dates, cfg)
    return len(weeks)


def combined_similarity(
    x: InsiderFirmLog, y: InsiderFirmLog, cfg: KernelConfig = DEFAULT_KERNEL
) -> SimilarityScore:
    """Best-match similarity per direction, blended by each direction's trade share."""
    s_a = best_match_similarity(x.acquire_dates, y.acquire_dates, cfg)
    s_d = best_match_similarity(x.dispose_dates, y.dispose_dates, cfg)
    t_a = len(x.acquire_dates) + len(y.acquire_dates)
    t_d = len(x.dispose_dates) + len(y.dispose_dates)
    return SimilarityScore(
        s_acquire=s_a,
        s_dispose=s_d,
        combined=_activity_blend(s_a, s_d, t_a, t_d),
        n_acquire_x=len(x.acquire_dates),
        n_acquire_y=len(y.acquire_dates),
        n_dispose_x=len(x.dispose_dates),
        n_dispose_y=len(y.dispose_dates),
        matched_weeks=_matched_weeks(x, y, cfg),
    )


# ---------------------------------------------------------------------------
# assignment-based measure


@dataclass(frozen=True)
class CategoryAssignment:
    matching: tuple[tuple[date, date], ...]
    matched_weight: float
    overlap_weeks: int
    score: float


@dataclass(frozen=True)
class AssignmentScore:
    acquire: CategoryAssignment
    dispose: CategoryAssignment
    combined: float
    matched_weeks: int
    t_acquire: int
    t_dispose: int

    @property
    def matching(self) -> tuple[tuple[date, date], ...]:
        return self.acquire.matching + self.dispose.matching

    @property
    def overlap_weeks(self) -> int:
        return self.acquire.overlap_weeks + self.dispose.overlap_weeks

    @property
    def exceeds_one(self) -> bool:
        # the week normalisation is not bounded by 1 when one week holds several matched pairs
        return self.acquire.score > 1 or self.dispose.score > 1


def _clusters(x: np.ndarray, y: np.ndarray, width: int):
    """Split the gap graph into independent blocks.

    Dates closer than ``width`` are the only eligible pairs, so a gap of at
    least ``width`` between consecutive merged dates separates components.
    """
    merged = np.concatenate([x, y])
    side = np.concatenate([np.zeros(len(x), dtype=np.int8), np.ones(len(y), dtype=np.int8)])
    idx = np.concatenate([np.arange(len(x)), np.arange(len(y))])
    order = np.lexsort((idx, side, merged))
    merged, side, idx = merged[order], side[order], idx[order]
    breaks = np.flatnonzero(np.diff(merged) >= width) + 1
    for lo, hi in zip(np.r_[0, breaks], np.r_[breaks, len(merged)]):
        s, i = side[lo:hi], idx[lo:hi]
        xs, ys = i[s == 0], i[s == 1]
        if len(xs) and len(ys):
            yield xs, ys


def match_dates(
    x_dates: Sequence[date], y_dates: Sequence[date], cfg: KernelConfig = DEFAULT_KERNEL
) -> tuple[list[tuple[int, int]], int]:
    """Exact maximum-weight one-to-one matching of two date lists.

    Returns index pairs into the *sorted* inputs and the total weight in kernel
    numerator units (divide by ``width_days`` for the real-valued weight).
    """
    x, y = _ordinals(x_dates), _ordinals(y_dates)
    width = cfg.width_days
    pairs: list[tuple[int, int]] = []
    total = 0
    for xs, ys in _clusters(x, y, width):
        gaps = np.abs(x[xs][:, None] - y[ys][None, :])
        w = np.clip(width - gaps, 0, None)
        sub, t = max_weight_matching(w)
        pairs.extend((int(xs[a]), int(ys[b])) for a, b in sub)
        total += t
    pairs.sort()
    return pairs, total


def _category(x_dates: Sequence[date], y_dates: Sequence[date], cfg: KernelConfig) -> CategoryAssignment:
    xs, ys = sorted(x_dates), sorted(y_dates)
    if not xs or not ys:
        return CategoryAssignment((), 0.0, 0, 0.0)
    pairs, total = match_dates(xs, ys, cfg)
    weeks_x = {_iso_week(d.toordinal()) for d in xs}
    weeks_y = {_iso_week(d.toordinal()) for d in ys}
    overlap = len(weeks_x & weeks_y)
    score = total / (overlap * cfg.width_days) if overlap else 0.0
    return CategoryAssignment(
        matching=tuple((xs[a], ys[b]) for a, b in pairs),
        matched_weight=total / cfg.width_days,
        overlap_weeks=overlap,
        score=score,
    )


def assignment_similarity(
    x: InsiderFirmLog, y: InsiderFirmLog, cfg: KernelConfig = DEFAULT_KERNEL
) -> AssignmentScore:
    """One-to-one matching similarity normalised by overlap-capable weeks.

    The X-given-Y and Y-given-X scores share the same matching and the same
    denominator, so the symmetric average is just that single value. Scores
    above 1 are reported as is (see ``AssignmentScore.exceeds_one``).
    """
    acq = _category(x.acquire_dates, y.acquire_dates, cfg)
    dis = _category(x.dispose_dates, y.dispose_dates, cfg)
    t_a = len(x.acquire_dates) + len(y.acquire_dates)
    t_d = len(x.dispose_dates) + len(y.dispose_dates)
    out = AssignmentScore(
        acquire=acq,
        dispose=dis,
        combined=_activity_blend(acq.score, dis.score, t_a, t_d),
        matched_weeks=_matched_weeks(x, y, cfg),
        t_acquire=t_a,
        t_dispose=t_d,
    )
    if out.exceeds_one:
        logger.debug("assignment score > 1 for %s/%s at %s", x.insider_id, y.insider_id, x.firm_id)
    return out
