"""Regenerate the vendored banana-shaped benchmark CSV.

Produces src/omltune/data/bananas.csv: 5300 rows of two interleaved
crescent-shaped clusters with a binary target in the last column.  The
head 3710 rows and tail 1590 rows (the default 0.7/0.3 sequential split)
are normalized to pinned per-column moments so that summary statistics
stay byte-stable across regenerations; tests assert these exact values.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "omltune" / "data" / "bananas.csv"

# (rows, positives, x1 mean, x1 std, x2 mean, x2 std) per sequential block
BLOCKS = [
    (3710, 1675, -0.016243, 0.995490, 0.002430, 1.001150),
    (1590, 701, 0.037900, 1.009744, -0.005670, 0.997603),
]


def crescents(rng, n_neg: int, n_pos: int) -> tuple[np.ndarray, np.ndarray]:
    t0 = rng.uniform(0.0, np.pi, size=n_neg)
    neg = np.column_stack([np.cos(t0), np.sin(t0)])
    t1 = rng.uniform(0.0, np.pi, size=n_pos)
    pos = np.column_stack([1.0 - np.cos(t1), 0.5 - np.sin(t1)])
    xy = np.vstack([neg, pos]) + rng.normal(scale=0.18, size=(n_neg + n_pos, 2))
    labels = np.concatenate([np.zeros(n_neg, dtype=int), np.ones(n_pos, dtype=int)])
    order = rng.permutation(n_neg + n_pos)
    return xy[order], labels[order]


def pin_moments(col: np.ndarray, mean: float, std: float) -> np.ndarray:
    return (col - col.mean()) / col.std(ddof=1) * std + mean


def main() -> None:
    rng = np.random.default_rng(58302)
    rows = []
    for n, n_pos, m1, s1, m2, s2 in BLOCKS:
        xy, labels = crescents(rng, n - n_pos, n_pos)
        xy[:, 0] = pin_moments(xy[:, 0], m1, s1)
        xy[:, 1] = pin_moments(xy[:, 1], m2, s2)
        rows.append((xy, labels))
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with OUT.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("x1,x2,y\n")
        for xy, labels in rows:
            for (a, b), y in zip(xy, labels):
                fh.write(f"{float(a)!r},{float(b)!r},{y}\n")
    print(f"wrote {OUT} ({sum(len(l) for _, l in rows)} rows)")


if __name__ == "__main__":
    main()
