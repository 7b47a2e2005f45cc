"""Reporting utilities: homophily before/after tables, the intra/inter-class
complexity measure of representation sets, and relative-improvement summaries."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import NumericError, UndefinedMeasureError
from .graph import HeteroGraph
from .metapath import (
    MetaPath,
    MetaPathSubgraph,
    compose_metapath,
    edge_label_counts,
    homophily_ratio,
    path_label,
)
from .sparse import row_normalize, spmm


@dataclass(frozen=True)
class ComplexityInputs:
    representations: np.ndarray
    classes: np.ndarray
    p: int = 2


def complexity_measure(inputs: ComplexityInputs, squared: bool = False) -> float:
    """Davies-Bouldin style ratio of intra-class spread to centroid
    separation, averaged over classes; lower means cleaner class geometry.

    With ``squared`` the per-class terms enter as squares (variance ratio
    form); the plain form sums the spreads linearly.
    """
    reps = np.asarray(inputs.representations, dtype=np.float64)
    classes = np.asarray(inputs.classes)
    ids = np.unique(classes)
    if ids.shape[0] < 2:
        raise UndefinedMeasureError("complexity measure needs at least two classes")
    p = inputs.p

    centroids = []
    spreads = []
    for c in ids:
        members = reps[classes == c]
        mu = members.mean(axis=0)
        centroids.append(mu)
        dists = np.linalg.norm(members - mu, ord=p, axis=1)
        spreads.append(float(np.mean(dists**p) ** (1.0 / p)))
    centroids = np.stack(centroids)

    k = ids.shape[0]
    total = 0.0
    for i in range(k):
        worst = -np.inf
        for j in range(k):
            if i == j:
                continue
            sep = float(np.linalg.norm(centroids[i] - centroids[j], ord=p))
            if sep == 0.0:
                raise UndefinedMeasureError(
                    f"classes {ids[i]} and {ids[j]} have coincident centroids"
                )
            if squared:
                ratio = (spreads[i] ** 2 + spreads[j] ** 2) / sep**2
            else:
                ratio = (spreads[i] + spreads[j]) / sep
            worst = max(worst, ratio)
        total += worst
    return total / k


def mean_aggregation(sub: MetaPathSubgraph, g: HeteroGraph) -> np.ndarray:
    """One layer of neighbor mean aggregation of the target features over a
    meta-path subgraph (zero rows for isolated nodes)."""
    walk = row_normalize(sub.adjacency)
    return spmm(walk, np.asarray(g.features[g.target_type], dtype=np.float64))


def ari(before: np.ndarray, after: np.ndarray) -> float:
    """Average relative improvement, in percent, of paired accuracy readings."""
    before = np.asarray(before, dtype=np.float64)
    after = np.asarray(after, dtype=np.float64)
    if before.shape != after.shape or before.ndim != 1 or before.shape[0] == 0:
        raise ValueError("before/after must be equal-length non-empty vectors")
    if np.any(before <= 0):
        raise NumericError("relative improvement undefined for a zero baseline")
    return float(np.mean((after - before) / before)) * 100.0


@dataclass(frozen=True)
class PathHomophily:
    label: str
    hr_before: float
    hr_after: float
    edges_before: int
    edges_after: int
    coverage: float


@dataclass(frozen=True)
class HomophilyReport:
    paths: tuple[PathHomophily, ...]
    mh_before: float
    mh_after: float

    def to_json_dict(self) -> dict:
        return {
            "paths": [
                {
                    "metapath": row.label,
                    "hr_before": row.hr_before,
                    "hr_after": row.hr_after,
                    "edges_before": row.edges_before,
                    "edges_after": row.edges_after,
                    "coverage": row.coverage,
                }
                for row in self.paths
            ],
            "mh_before": self.mh_before,
            "mh_after": self.mh_after,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    def tsv_lines(self) -> list[str]:
        lines = ["metapath\thr_before\thr_after\tedges_before\tedges_after\tcoverage"]
        for row in self.paths:
            lines.append(
                f"{row.label}\t{row.hr_before:.6f}\t{row.hr_after:.6f}"
                f"\t{row.edges_before}\t{row.edges_after}\t{row.coverage:.6f}"
            )
        lines.append(f"#mh\t{self.mh_before:.6f}\t{self.mh_after:.6f}")
        return lines


def _after_subgraph(g_before: HeteroGraph, g_after: HeteroGraph, path: MetaPath) -> MetaPathSubgraph:
    """The rewired relation when the merge installed one, else the path
    recomposed on the after graph. The merge names relations with the schema
    it merged into, so the lookup label comes from the before graph."""
    name = f"rw:{path_label(g_before.schema, path)}"
    for r in g_after.schema.relations:
        if r.name == name:
            return compose_metapath(g_after, MetaPath((r.rel_id,)), symmetrize=True)
    return compose_metapath(g_after, path, symmetrize=True)


def homophily_report(
    g_before: HeteroGraph,
    g_after: HeteroGraph,
    paths: list[MetaPath],
    labels: np.ndarray,
) -> HomophilyReport:
    """Per-path homophily before and after rewiring. Coverage is the labeled
    fraction of the after subgraph's edges, the graph consumers train on."""
    if g_before.target_type != g_after.target_type:
        raise ValueError("graphs disagree on the target type")
    rows = []
    mh_before, mh_after = -np.inf, -np.inf
    for path in paths:
        sub_b = compose_metapath(g_before, path, symmetrize=True)
        sub_a = _after_subgraph(g_before, g_after, path)
        hr_b = homophily_ratio(sub_b, labels)
        hr_a = homophily_ratio(sub_a, labels)
        _, counted, total = edge_label_counts(sub_a, labels)
        rows.append(
            PathHomophily(
                label=path_label(g_before.schema, path),
                hr_before=hr_b,
                hr_after=hr_a,
                edges_before=sub_b.adjacency.nnz,
                edges_after=sub_a.adjacency.nnz,
                coverage=counted / total if total else 0.0,
            )
        )
        mh_before = max(mh_before, hr_b)
        mh_after = max(mh_after, hr_a)
    return HomophilyReport(paths=tuple(rows), mh_before=mh_before, mh_after=mh_after)
