"""Synthetic bars data, feature matching and graymap rendering."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .densemat import Matrix, ShapeError

__all__ = [
    "BarsSpec",
    "MatchReport",
    "original_features",
    "single_bar_indices",
    "generate",
    "match_features",
    "render_pgm",
    "write_pgm",
]

SIDE = 3


@dataclass(frozen=True)
class BarsSpec:
    n_samples: int = 500
    active_prob: float = 0.2
    amp_scale: float = 1.0
    seed: int = 0
    image_side: int = SIDE

    def __post_init__(self):
        if int(self.n_samples) < 1:
            raise ValueError(f"n_samples must be positive, got {self.n_samples}")
        if not 0.0 < self.active_prob <= 1.0:
            raise ValueError(f"active_prob must be in (0, 1], got {self.active_prob}")
        if not self.amp_scale > 0:
            raise ValueError(f"amp_scale must be > 0, got {self.amp_scale}")
        if self.image_side != SIDE:
            raise ValueError(f"only {SIDE}x{SIDE} images are supported, got side {self.image_side}")


def _bar(rows=(), cols=()) -> np.ndarray:
    img = np.zeros((SIDE, SIDE))
    for r in rows:
        img[r, :] = 1.0
    for c in cols:
        img[:, c] = 1.0
    v = img.ravel()
    return v / np.linalg.norm(v)


def original_features() -> Matrix:
    """The ten unit-norm 3x3 generating features, one per column.

    Columns 0-2 are horizontal bars (rows 0, 1, 2), 3-5 vertical bars
    (columns 0, 1, 2), 6-7 horizontal double bars (rows 0+1, 1+2) and 8-9
    vertical double bars (columns 0+1, 1+2). Pixels are flattened row-major.
    """
    feats = [_bar(rows=(i,)) for i in range(SIDE)]
    feats += [_bar(cols=(j,)) for j in range(SIDE)]
    feats += [_bar(rows=(i, i + 1)) for i in range(SIDE - 1)]
    feats += [_bar(cols=(j, j + 1)) for j in range(SIDE - 1)]
    return Matrix(np.column_stack(feats))


def single_bar_indices() -> list[int]:
    return list(range(2 * SIDE))


def generate(spec: BarsSpec) -> tuple[Matrix, Matrix, Matrix]:
    """Draw sparse sources and mix them through the original features.

    Each source entry is active with probability ``active_prob`` and then
    exponentially distributed with mean ``amp_scale``.

    Returns
    -------
    x, s_orig, a_orig : Matrix
        Data (9 x n), sources (10 x n) and features (9 x 10), ``x = a_orig @ s_orig``.
    """
    a = original_features()
    rng = np.random.default_rng(spec.seed)
    shape = (a.cols, int(spec.n_samples))
    gate = rng.random(shape) < spec.active_prob
    amp = rng.exponential(spec.amp_scale, size=shape)
    s = np.where(gate, amp, 0.0)
    x = a.values @ s
    return Matrix(x), Matrix(s), a


@dataclass(frozen=True)
class MatchReport:
    assignment: list[tuple[int, int]]
    similarities: list[float]
    threshold: float

    @property
    def recovered_count(self) -> int:
        return sum(1 for s in self.similarities if s >= self.threshold)

    @property
    def total(self) -> int:
        return len(self.assignment)

    def summary(self) -> str:
        return f"recovered={self.recovered_count} total={self.total} threshold={self.threshold:g}"

    def to_text(self) -> str:
        lines = ["learned  reference  similarity  recovered"]
        for (i, j), sim in zip(self.assignment, self.similarities):
            lines.append(f"{i:7d}  {j:9d}  {sim:10.6f}  {'yes' if sim >= self.threshold else 'no'}")
        return "\n".join(lines)


def _unit_columns(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=0)
    out = np.zeros_like(m)
    nz = norms > 0
    out[:, nz] = m[:, nz] / norms[nz]
    return out


def match_features(learned: Matrix, reference: Matrix, threshold: float = 0.99) -> MatchReport:
    """Pair learned and reference columns greedily by cosine similarity.

    Pairs are taken in order of decreasing similarity, ties broken by lower
    learned index and then lower reference index; each column is used at
    most once. ``total`` is ``min(learned.cols, reference.cols)``.
    """
    if learned.rows != reference.rows:
        raise ShapeError(f"learned has {learned.rows} rows but reference has {reference.rows}")
    sim = _unit_columns(learned.values).T @ _unit_columns(reference.values)
    # A column compared with a positive multiple of itself must score exactly
    # 1; rounding leaves it a few ulps off in either direction.
    sim = np.clip(sim, -1.0, 1.0)
    sim[sim >= 1.0 - 1e-12] = 1.0
    order = sorted(
        ((sim[i, j], i, j) for i in range(sim.shape[0]) for j in range(sim.shape[1])),
        key=lambda t: (-t[0], t[1], t[2]),
    )
    used_l, used_r = set(), set()
    pairs = []
    for s, i, j in order:
        if i in used_l or j in used_r:
            continue
        used_l.add(i)
        used_r.add(j)
        pairs.append((i, j, float(s)))
    pairs.sort()
    return MatchReport(
        assignment=[(i, j) for i, j, _ in pairs],
        similarities=[s for _, _, s in pairs],
        threshold=float(threshold),
    )


def render_pgm(m: Matrix, side: int) -> str:
    """Plain (P2) graymap with one side x side tile per column.

    Tiles run left to right separated by a one-pixel black column. Values
    map linearly from [0, max entry] onto [0, 255]; negatives render black.
    """
    if side < 1 or m.rows != side * side:
        raise ShapeError(f"column length {m.rows} is not side^2 for side {side}")
    k = m.cols
    width = k * side + (k - 1)
    img = np.zeros((side, width), dtype=np.int64)
    v = np.maximum(m.values, 0.0)
    top = float(v.max())
    scaled = np.rint(v / top * 255.0).astype(np.int64) if top > 0 else np.zeros(v.shape, dtype=np.int64)
    for j in range(k):
        c0 = j * (side + 1)
        img[:, c0:c0 + side] = scaled[:, j].reshape(side, side)
    lines = ["P2", f"{width} {side}", "255"]
    lines += [" ".join(str(int(p)) for p in row) for row in img]
    return "\n".join(lines) + "\n"


def write_pgm(m: Matrix, side: int, path: str | os.PathLike) -> None:
    text = render_pgm(m, side)
    with open(path, "w", newline="") as fh:
        fh.write(text)
