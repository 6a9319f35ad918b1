"""Synthetic rating-event streams with well separated item means."""
import numpy as np

from sava.ingest import ReviewRecord

GOOD = np.array([0.0, 0.03, 0.07, 0.25, 0.65])   # mean rating ~4.5
BAD = GOOD[::-1]


def synthetic_reviews(n_items=240, reviews=60, spacing=1000, gap=400.0, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for j in range(n_items):
        first = spacing * (j + 1)
        probs = GOOD if rng.random() < 0.5 else BAD
        times = first + np.concatenate(([0], np.cumsum(rng.exponential(gap, reviews - 1)).astype(int)))
        ratings = rng.choice(5, size=reviews, p=probs) + 1
        for t, r in zip(times, ratings):
            out.append(ReviewRecord(f"item{j:04d}", f"user{rng.integers(10**6)}", int(r), int(t)))
    out.sort(key=lambda r: r.timestamp)
    return out


def write_reviews(path, records, delimiter=","):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(delimiter.join(("item_id", "user_id", "rating", "timestamp")) + "\n")
        for r in records:
            fh.write(delimiter.join((r.item_id, r.user_id, str(r.rating), str(r.timestamp))) + "\n")
