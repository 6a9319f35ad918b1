"""Replay of timestamped rating events as a doubly sequential experiment.

Each item becomes a task at its first review. Ratings on the 1..5 scale are
centered at 3, so observations lie in ``[-2, 2]`` and the sign of the mean
says whether the item beats the threshold: ``theta = A`` iff the mean rating
is strictly above 3.

Decision times are one second before each later item's first review, plus
the last event time. At a decision time the engine sees every rating with
timestamp up to and including that time; the comparators see only the
ratings in the latest grid interval.
"""
from __future__ import annotations

import csv
import io
import math
from bisect import bisect_right
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Union

import numpy as np

from .engine import DecisionGrid


class ReviewRecord(NamedTuple):
    item_id: str
    user_id: str
    rating: int
    timestamp: int


class RecordError(ValueError):
    """A row failed to parse or validate; ``line`` is 1-based."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


_HEADER = ("item_id", "user_id", "rating", "timestamp")


def _sniff_delimiter(sample: str) -> str:
    first = next((ln for ln in sample.splitlines() if ln.strip()), "")
    return "\t" if first.count("\t") > first.count(",") else ","


def _parse_row(row: list, line: int) -> ReviewRecord:
    if len(row) != 4:
        raise RecordError(line, f"expected 4 fields, got {len(row)}")
    item, user, rating, ts = (c.strip() for c in row)
    if not item:
        raise RecordError(line, "empty item_id")
    try:
        r = float(rating)
    except ValueError:
        raise RecordError(line, f"rating {rating!r} is not a number") from None
    if r != int(r) or not 1 <= r <= 5:
        raise RecordError(line, f"rating {rating!r} not in 1..5")
    try:
        t = int(ts)
    except ValueError:
        raise RecordError(line, f"timestamp {ts!r} is not an integer") from None
    if t <= 0:
        raise RecordError(line, f"timestamp {t} must be positive")
    return ReviewRecord(item, user, int(r), t)


def parse_records(source: Union[str, io.TextIOBase], strict: bool = True,
                  errors: Optional[list] = None) -> list[ReviewRecord]:
    """Parse a comma- or tab-delimited table of ``item_id, user_id, rating, timestamp``.

    ``source`` is a path or an open text stream. A header row is optional.
    With ``strict=False`` bad rows are skipped and their :class:`RecordError`
    appended to ``errors`` when a list is given.
    """
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, encoding="utf-8", newline="") as fh:
            text = fh.read()
    else:
        text = source.read()
    if not text.strip():
        return []
    reader = csv.reader(io.StringIO(text), delimiter=_sniff_delimiter(text[:4096]))
    out = []
    for line, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if line == 1 and tuple(c.strip().lower() for c in row) == _HEADER:
            continue
        try:
            out.append(_parse_row(row, line))
        except RecordError as e:
            if strict:
                raise
            if errors is not None:
                errors.append(e)
    return out


def filter_items(records: Iterable[ReviewRecord], min_reviews: int = 50) -> list[ReviewRecord]:
    """Keep items with strictly more than ``min_reviews`` reviews."""
    if min_reviews < 1:
        raise ValueError(f"min_reviews must be >= 1, got {min_reviews}")
    records = list(records)
    counts = defaultdict(int)
    for r in records:
        counts[r.item_id] += 1
    return [r for r in records if counts[r.item_id] > min_reviews]


@dataclass
class Replay:
    """Rating streams laid out on a decision grid.

    ``samples(j, t_lo, t_hi)`` returns item ``j``'s centered ratings with
    timestamp in ``(t_lo, t_hi]``; with ``t_lo = -inf`` that is the cumulative
    view up to ``t_hi``.
    """

    grid: DecisionGrid
    items: tuple
    truths: tuple
    times: list           # per task: sorted event timestamps
    values: list          # per task: centered ratings aligned with ``times``
    tied_first_reviews: bool = False
    mean_ratings: np.ndarray = field(default=None)

    @property
    def n_tasks(self) -> int:
        return len(self.items)

    def samples(self, j: int, t_lo: float, t_hi: float) -> np.ndarray:
        ts = self.times[j - 1]
        lo = 0 if t_lo == -math.inf else bisect_right(ts, t_lo)
        hi = bisect_right(ts, t_hi)
        return self.values[j - 1][lo:hi]

    def task_index(self, item_id: str) -> int:
        return self.items.index(item_id) + 1


def build_streams(records: Iterable[ReviewRecord]) -> Replay:
    by_item: dict[str, list[tuple[int, int]]] = defaultdict(list)
    for r in records:
        by_item[r.item_id].append((r.timestamp, r.rating))
    if len(by_item) < 2:
        raise ValueError(f"need at least 2 items to form a decision grid, got {len(by_item)}")
    # stable sort keeps file order among same-second events
    for events in by_item.values():
        events.sort(key=lambda e: e[0])
    items = sorted(by_item, key=lambda it: (by_item[it][0][0], it))
    firsts = [by_item[it][0][0] for it in items]
    last = max(e[-1][0] for e in by_item.values())
    pts = sorted({f - 1 for f in firsts[1:]} | {last})
    times, values, truths, means = [], [], [], []
    for it in items:
        ev = by_item[it]
        times.append([e[0] for e in ev])
        ratings = np.array([e[1] for e in ev], dtype=np.float64)
        values.append(ratings - 3.0)
        m = float(ratings.mean())
        means.append(m)
        truths.append("A" if m > 3.0 else "B")
    grid = DecisionGrid(tuple(pts), tuple(firsts))
    return Replay(grid, tuple(items), tuple(truths), times, values,
                  tied_first_reviews=grid.tied_arrivals, mean_ratings=np.array(means))
