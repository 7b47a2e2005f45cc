"""Rewiring of meta-path subgraphs with the learned similarity.

Per target node, up to ``edge_budget`` new neighbors with similarity above
``epsilon`` are proposed; existing edges scoring below ``gamma`` are pruned.
Additions and removals apply symmetrically. Candidate scoring scans node
blocks so peak memory stays at block_size x n_target.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .graph import HeteroGraph, HeteroSchema, Relation
from .learner import SimilarityModel, _path_reps
from .metapath import MetaPath, MetaPathSubgraph, path_label
from .sparse import CsrMatrix, bool_spgemm, symmetrize_union


@dataclass(frozen=True)
class RewireConfig:
    edge_budget: int = 6
    epsilon: float = 0.6
    gamma: float = -1.0
    block_size: int = 512
    restrict_two_hop: bool = False

    def __post_init__(self):
        if self.edge_budget < 0:
            raise ValueError("edge_budget must be >= 0")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")


@dataclass(frozen=True)
class CandidateSet:
    """Per-node top candidates: parallel index/score arrays per source node."""

    indices: list[np.ndarray]
    scores: list[np.ndarray]

    @property
    def n(self) -> int:
        return len(self.indices)


@dataclass
class RewirePlan:
    path: MetaPath
    additions: list[tuple[int, int, float]] = field(default_factory=list)
    removals: list[tuple[int, int, float]] = field(default_factory=list)

    @property
    def empty(self) -> bool:
        return not self.additions and not self.removals


def worker_count() -> int:
    """Worker cap from HGRW_THREADS (default 1: fully sequential)."""
    raw = os.environ.get("HGRW_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _two_hop_mask_rows(sub: CsrMatrix, two_hop: CsrMatrix, rows: np.ndarray, n: int) -> np.ndarray:
    mask = np.zeros((len(rows), n), dtype=bool)
    for local, i in enumerate(rows):
        mask[local, sub.row_cols(int(i))] = True
        mask[local, two_hop.row_cols(int(i))] = True
    return mask


def score_candidates(
    m: SimilarityModel,
    path: MetaPath,
    cfg: RewireConfig,
    sub: MetaPathSubgraph | None = None,
) -> CandidateSet:
    """For every target node the edge_budget highest-scoring partners with
    similarity strictly above epsilon, ties broken by ascending node index.

    ``sub`` is only needed when restrict_two_hop limits the candidate pool to
    the subgraph's one- and two-hop neighborhoods.
    """
    n = m.graph.target_count
    k = cfg.edge_budget
    if k == 0:
        empty_i = np.zeros(0, dtype=np.int64)
        empty_s = np.zeros(0)
        return CandidateSet(indices=[empty_i] * n, scores=[empty_s] * n)

    reps = _path_reps(m, path)
    two_hop = None
    if cfg.restrict_two_hop:
        if sub is None:
            raise ValueError("restrict_two_hop needs the meta-path subgraph")
        two_hop = bool_spgemm(sub.adjacency, sub.adjacency)

    blocks = [
        np.arange(start, min(start + cfg.block_size, n))
        for start in range(0, n, cfg.block_size)
    ]

    def scan(rows: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
        sim = np.ones((len(rows), n))
        for rep in reps:
            sim *= rep.units[rows] @ rep.units.T
        sim[np.arange(len(rows)), rows] = -2.0  # self pairs never qualify
        if two_hop is not None:
            allowed = _two_hop_mask_rows(sub.adjacency, two_hop, rows, n)
            sim[~allowed] = -2.0
        idx_out, score_out = [], []
        for local in range(len(rows)):
            row = sim[local]
            eligible = np.flatnonzero(row > cfg.epsilon)
            if eligible.size > k:
                order = np.lexsort((eligible, -row[eligible]))[:k]
                eligible = eligible[order]
            else:
                order = np.lexsort((eligible, -row[eligible]))
                eligible = eligible[order]
            idx_out.append(eligible.astype(np.int64))
            score_out.append(row[eligible])
        return idx_out, score_out

    workers = worker_count()
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(scan, blocks))
    else:
        results = [scan(b) for b in blocks]

    indices: list[np.ndarray] = []
    scores: list[np.ndarray] = []
    for idx_out, score_out in results:
        indices.extend(idx_out)
        scores.extend(score_out)
    return CandidateSet(indices=indices, scores=scores)


def _pair_scores(m: SimilarityModel, path: MetaPath, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    reps = _path_reps(m, path)
    out = np.ones(len(a))
    for rep in reps:
        out *= np.einsum("ij,ij->i", rep.units[a], rep.units[b])
    return out


def rewire_metapath(
    sub: MetaPathSubgraph,
    candidates: CandidateSet,
    m: SimilarityModel,
    cfg: RewireConfig,
) -> tuple[MetaPathSubgraph, RewirePlan]:
    """Apply additions and prunes to one subgraph; returns the rewired
    subgraph (canonical, symmetric, diagonal-free) and the audit plan."""
    adj = sub.adjacency
    n = adj.n_rows
    rows = adj.coo_rows()
    cols = adj.col_indices
    upper = rows < cols
    existing = set(zip(rows[upper].tolist(), cols[upper].tolist()))
    # symmetric structure stores both directions; lone directed entries still
    # count as an existing undirected pair
    lower_pairs = set(zip(cols[~upper].tolist(), rows[~upper].tolist()))
    existing |= {p for p in lower_pairs if p[0] != p[1]}

    plan = RewirePlan(path=sub.path)
    added_pairs: set[tuple[int, int]] = set()
    for i in range(candidates.n):
        for j, score in zip(candidates.indices[i], candidates.scores[i]):
            j = int(j)
            key = (min(i, j), max(i, j))
            if i == j or key in existing:
                continue
            plan.additions.append((i, j, float(score)))
            added_pairs.add(key)

    removed_pairs: set[tuple[int, int]] = set()
    if existing and cfg.gamma > -1.0:
        pairs = np.array(sorted(existing), dtype=np.int64)
        scores = _pair_scores(m, sub.path, pairs[:, 0], pairs[:, 1])
        low = scores < cfg.gamma
        for (i, j), score in zip(pairs[low].tolist(), scores[low].tolist()):
            plan.removals.append((int(i), int(j), float(score)))
            removed_pairs.add((int(i), int(j)))

    final = (existing - removed_pairs) | added_pairs
    if final:
        arr = np.array(sorted(final), dtype=np.int64)
        new_adj = CsrMatrix.from_coo(
            np.concatenate([arr[:, 0], arr[:, 1]]),
            np.concatenate([arr[:, 1], arr[:, 0]]),
            (n, n),
            None,
        )
    else:
        new_adj = CsrMatrix.empty(n, n)
    if not sub.symmetric:
        new_adj = symmetrize_union(new_adj)
    return MetaPathSubgraph(path=sub.path, adjacency=new_adj, symmetric=True), plan


def merge_into_graph(g: HeteroGraph, rewired: list[MetaPathSubgraph]) -> HeteroGraph:
    """Attach each rewired subgraph as a new target-to-target relation named
    rw:<path label>; the original relations are untouched."""
    new_rels = list(g.schema.relations)
    new_adj = list(g.adjacency)
    taken = {r.name for r in g.schema.relations}
    for sub in rewired:
        n = g.target_count
        if sub.adjacency.n_rows != n or sub.adjacency.n_cols != n:
            raise DataError("rewired subgraph is not over the target type")
        name = f"rw:{path_label(g.schema, sub.path)}"
        if name in taken:
            raise DataError(f"relation name {name!r} already exists")
        taken.add(name)
        new_rels.append(
            Relation(rel_id=len(new_rels), name=name, src_type=g.target_type, dst_type=g.target_type)
        )
        new_adj.append(sub.adjacency)
    schema = HeteroSchema(node_types=g.schema.node_types, relations=tuple(new_rels))
    return HeteroGraph(
        schema=schema,
        adjacency=tuple(new_adj),
        features=g.features,
        labels=g.labels,
        splits=g.splits,
        target_type=g.target_type,
        num_classes=g.num_classes,
    )


def plan_tsv_lines(plans: list[RewirePlan], schema: HeteroSchema) -> list[str]:
    lines = ["metapath\top\ti\tj\tscore"]
    for plan in plans:
        label = path_label(schema, plan.path)
        for i, j, s in plan.additions:
            lines.append(f"{label}\tadd\t{i}\t{j}\t{s!r}")
        for i, j, s in plan.removals:
            lines.append(f"{label}\tdel\t{i}\t{j}\t{s!r}")
    return lines


def save_plan_tsv(plans: list[RewirePlan], schema: HeteroSchema, filename: str) -> None:
    with open(filename, "w", encoding="utf-8") as fh:
        fh.write("\n".join(plan_tsv_lines(plans, schema)) + "\n")
