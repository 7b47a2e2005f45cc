"""Supervision targets for the similarity learner.

For one meta-path subgraph this module propagates node attributes and one-hot
train labels through the row-normalized adjacency (k hops), centers every hop
by its column mean, and exposes pairwise products of hop cosines. Pairs are
evaluated lazily; full matrices only materialize below a size cutoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .graph import HeteroGraph
from .metapath import MetaPathSubgraph
from .sparse import row_normalize, spmm

ZERO_NORM_CUTOFF = 1e-12


@dataclass(frozen=True)
class TargetsConfig:
    num_hops: int = 1
    alpha: float = 0.6
    dense_cutoff: int = 20_000

    def __post_init__(self):
        if self.num_hops < 1:
            raise ValueError("num_hops must be >= 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")


@dataclass(frozen=True)
class DistributionFeatures:
    """Per-hop neighborhood attribute and label distributions plus the
    labeled-neighbor coverage used for masking."""

    attr: tuple[np.ndarray, ...]
    label: tuple[np.ndarray, ...]
    train_neighbor_frac: np.ndarray
    mask: np.ndarray

    @property
    def num_hops(self) -> int:
        return len(self.attr)


def neighborhood_distributions(
    sub: MetaPathSubgraph, g: HeteroGraph, cfg: TargetsConfig
) -> DistributionFeatures:
    n = g.target_count
    if sub.adjacency.n_rows != n or sub.adjacency.n_cols != n:
        raise DataError("subgraph is not over the graph's target type")
    walk = row_normalize(sub.adjacency)

    x = np.asarray(g.features[g.target_type], dtype=np.float64)
    y = np.zeros((n, g.num_classes))
    train_labeled = g.train_mask & (g.labels >= 0)
    y[np.flatnonzero(train_labeled), g.labels[train_labeled]] = 1.0

    attr, label = [], []
    cur_x, cur_y = x, y
    for _ in range(cfg.num_hops):
        cur_x = spmm(walk, cur_x)
        cur_y = spmm(walk, cur_y)
        attr.append(cur_x)
        label.append(cur_y)

    degree = np.diff(sub.adjacency.row_offsets).astype(np.float64)
    train_neighbors = spmm(sub.adjacency, train_labeled.astype(np.float64)).ravel()
    frac = np.where(degree > 0, train_neighbors / np.where(degree > 0, degree, 1.0), 0.0)
    return DistributionFeatures(
        attr=tuple(attr),
        label=tuple(label),
        train_neighbor_frac=frac,
        mask=frac > cfg.alpha,
    )


def label_mask(df: DistributionFeatures, alpha: float) -> np.ndarray:
    """Nodes whose labeled-neighbor fraction strictly exceeds alpha."""
    return df.train_neighbor_frac > alpha


def centered_cosine(x: np.ndarray, y: np.ndarray, mean: np.ndarray) -> float:
    """Cosine of (x - mean) and (y - mean); 0 when either side is (nearly)
    the zero vector, so degenerate pairs carry no signal."""
    cx = np.asarray(x, dtype=np.float64) - mean
    cy = np.asarray(y, dtype=np.float64) - mean
    nx = float(np.linalg.norm(cx))
    ny = float(np.linalg.norm(cy))
    if nx < ZERO_NORM_CUTOFF or ny < ZERO_NORM_CUTOFF:
        return 0.0
    return float(cx @ cy) / (nx * ny)


def centered_unit_rows(mat: np.ndarray) -> np.ndarray:
    """Center columns by their mean, then scale rows to unit norm.

    Rows whose centered norm falls under the zero cutoff become zero rows, so
    any dot product against them is exactly 0 (the degenerate-pair value).
    """
    centered = mat - mat.mean(axis=0)
    norms = np.linalg.norm(centered, axis=1, keepdims=True)
    safe = np.where(norms < ZERO_NORM_CUTOFF, 1.0, norms)
    units = centered / safe
    units[norms.ravel() < ZERO_NORM_CUTOFF] = 0.0
    return units


class SimilarityTargets:
    """Read-only handle over target similarities for one meta-path.

    attr_target/label_target return the product over hops of centered cosine
    similarities between the two nodes' hop distributions. Block accessors
    evaluate rows x cols windows without materializing the full matrix.
    """

    def __init__(self, df: DistributionFeatures, cfg: TargetsConfig):
        self.df = df
        self._attr_units = tuple(centered_unit_rows(m) for m in df.attr)
        self._label_units = tuple(centered_unit_rows(m) for m in df.label)
        self.mask = df.mask.astype(np.float64)
        self.dense_cutoff = cfg.dense_cutoff
        self.n = df.attr[0].shape[0]
        self.num_hops = df.num_hops
        self._full_cache: dict[str, np.ndarray] = {}
        self._arange = np.arange(self.n)

    def _is_full(self, rows: np.ndarray, cols: np.ndarray) -> bool:
        return (
            rows.size == self.n
            and cols.size == self.n
            and np.array_equal(rows, self._arange)
            and np.array_equal(cols, self._arange)
        )

    def _block(self, kind: str, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        units = self._attr_units if kind == "attr" else self._label_units
        # the full window recurs every epoch of a small-graph training run;
        # the cached result is no bigger than the block being returned
        if self._is_full(rows, cols):
            if kind not in self._full_cache:
                out = units[0] @ units[0].T
                for u in units[1:]:
                    out *= u @ u.T
                self._full_cache[kind] = out
            return self._full_cache[kind]
        out = units[0][rows] @ units[0][cols].T
        for u in units[1:]:
            out *= u[rows] @ u[cols].T
        return out

    def attr_block(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        return self._block("attr", rows, cols)

    def label_block(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        return self._block("label", rows, cols)

    def mask_block(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        if self._is_full(rows, cols):
            if "mask" not in self._full_cache:
                self._full_cache["mask"] = np.outer(self.mask, self.mask)
            return self._full_cache["mask"]
        return np.outer(self.mask[rows], self.mask[cols])

    def attr_target(self, i: int, j: int) -> float:
        return float(self.attr_block(np.array([i]), np.array([j]))[0, 0])

    def label_target(self, i: int, j: int) -> float:
        return float(self.label_block(np.array([i]), np.array([j]))[0, 0])

    def pair_mask(self, i: int, j: int) -> float:
        return float(self.mask[i] * self.mask[j])

    def _guard_dense(self) -> np.ndarray:
        if self.n > self.dense_cutoff:
            raise MemoryError(
                f"refusing to materialize a {self.n}x{self.n} similarity matrix "
                f"(dense cutoff {self.dense_cutoff}); use block accessors"
            )
        return np.arange(self.n)

    def attr_matrix(self) -> np.ndarray:
        idx = self._guard_dense()
        return self.attr_block(idx, idx)

    def label_matrix(self) -> np.ndarray:
        idx = self._guard_dense()
        return self.label_block(idx, idx)


def similarity_targets(
    sub: MetaPathSubgraph, g: HeteroGraph, cfg: TargetsConfig
) -> tuple[DistributionFeatures, SimilarityTargets]:
    df = neighborhood_distributions(sub, g, cfg)
    return df, SimilarityTargets(df, cfg)
