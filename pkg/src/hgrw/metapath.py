"""Meta-path enumeration, subgraph composition and homophily metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, UndefinedRatioError
from .graph import HeteroGraph, HeteroSchema
from .sparse import CsrMatrix, bool_spgemm, drop_diagonal, symmetrize_union


@dataclass(frozen=True)
class MetaPath:
    """A type-compatible sequence of relation ids, target to target."""

    relation_ids: tuple[int, ...]

    def __post_init__(self):
        if len(self.relation_ids) < 1:
            raise ValueError("a meta-path needs at least one relation")

    def __len__(self) -> int:
        return len(self.relation_ids)


@dataclass(frozen=True)
class MetaPathSubgraph:
    path: MetaPath
    adjacency: CsrMatrix
    symmetric: bool


def path_type_sequence(schema: HeteroSchema, path: MetaPath) -> tuple[int, ...]:
    """Node type sequence visited by the path; raises on incompatible hops."""
    rels = schema.relations
    seq = [rels[path.relation_ids[0]].src_type]
    for rid in path.relation_ids:
        r = rels[rid]
        if r.src_type != seq[-1]:
            raise DataError(
                f"meta-path {path.relation_ids}: relation {r.name!r} starts at type "
                f"{r.src_type}, previous hop ends at type {seq[-1]}"
            )
        seq.append(r.dst_type)
    return tuple(seq)


def path_label(schema: HeteroSchema, path: MetaPath) -> str:
    """Display label: initials of the visited node types, with the relation
    name spelled out whenever several relations share the same endpoints."""
    seq = path_type_sequence(schema, path)
    pieces = [schema.node_types[seq[0]].name[:1].upper()]
    for rid, dst in zip(path.relation_ids, seq[1:]):
        r = schema.relations[rid]
        siblings = [
            q for q in schema.relations if q.src_type == r.src_type and q.dst_type == r.dst_type
        ]
        if len(siblings) > 1:
            pieces.append(f"({r.name})")
        pieces.append(schema.node_types[dst].name[:1].upper())
    return "".join(pieces)


def compose_metapath(g: HeteroGraph, path: MetaPath, symmetrize: bool = True) -> MetaPathSubgraph:
    """Compose the path's relation matrices into a boolean subgraph over the
    target type. The diagonal is always removed; when ``symmetrize`` is set
    the result is the union with its transpose."""
    seq = path_type_sequence(g.schema, path)
    if seq[0] != g.target_type or seq[-1] != g.target_type:
        raise DataError(
            f"meta-path {path.relation_ids} runs {seq[0]}->{seq[-1]}, "
            f"must start and end at target type {g.target_type}"
        )
    acc: CsrMatrix | None = None
    for rid in path.relation_ids:
        step = g.adjacency[rid]
        acc = step if acc is None else bool_spgemm(acc, step)
    adj = drop_diagonal(acc)
    if adj.values is not None:
        adj = CsrMatrix(adj.n_rows, adj.n_cols, adj.row_offsets, adj.col_indices, None)
    if symmetrize:
        adj = symmetrize_union(adj)
    return MetaPathSubgraph(path=path, adjacency=adj, symmetric=symmetrize)


def _mirror_map(schema: HeteroSchema) -> dict[int, int]:
    """rel_id -> rel_id of its unique structural inverse, when unambiguous.

    A pair (r, q) mirrors when q is the only relation with r's endpoints
    swapped and vice versa; only such mutual pairs enter the map.
    """
    by_ends: dict[tuple[int, int], list[int]] = {}
    for r in schema.relations:
        by_ends.setdefault((r.src_type, r.dst_type), []).append(r.rel_id)
    mirror: dict[int, int] = {}
    for r in schema.relations:
        swapped = by_ends.get((r.dst_type, r.src_type), [])
        back = by_ends.get((r.src_type, r.dst_type), [])
        if len(swapped) == 1 and len(back) == 1:
            mirror[r.rel_id] = swapped[0]
    return mirror


def enumerate_metapaths(schema: HeteroSchema, target: int, max_len: int) -> list[MetaPath]:
    """All type-compatible paths of length <= max_len anchored at ``target``,
    in lexicographic relation-id order. A path whose structural reverse is a
    distinct, lexicographically smaller path is dropped (both induce the same
    symmetric subgraph)."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    out_rels: dict[int, list[int]] = {}
    for r in schema.relations:
        out_rels.setdefault(r.src_type, []).append(r.rel_id)
    for lst in out_rels.values():
        lst.sort()

    found: list[tuple[int, ...]] = []

    def walk(cur_type: int, prefix: list[int]) -> None:
        if len(prefix) >= max_len:
            return
        for rid in out_rels.get(cur_type, []):
            r = schema.relations[rid]
            prefix.append(rid)
            if r.dst_type == target:
                found.append(tuple(prefix))
            walk(r.dst_type, prefix)
            prefix.pop()

    walk(target, [])

    mirror = _mirror_map(schema)
    kept: list[MetaPath] = []
    for ids in found:
        if all(rid in mirror for rid in ids):
            rev = tuple(mirror[rid] for rid in reversed(ids))
            if rev < ids:
                continue
        kept.append(MetaPath(ids))
    return kept


def edge_label_counts(sub: MetaPathSubgraph, labels: np.ndarray) -> tuple[int, int, int]:
    """(same-label entries, entries with both endpoints labeled, all entries)."""
    labels = np.asarray(labels)
    rows = sub.adjacency.coo_rows()
    cols = sub.adjacency.col_indices
    total = rows.shape[0]
    known = (labels[rows] >= 0) & (labels[cols] >= 0)
    counted = int(known.sum())
    same = int(((labels[rows] == labels[cols]) & known).sum())
    return same, counted, total


def homophily_ratio(sub: MetaPathSubgraph, labels: np.ndarray) -> float:
    """Fraction of edges joining same-label endpoints. Edges with an
    unlabeled endpoint are excluded from numerator and denominator."""
    same, counted, total = edge_label_counts(sub, labels)
    if total == 0:
        raise UndefinedRatioError("homophily ratio of an empty subgraph is undefined")
    if counted == 0:
        raise UndefinedRatioError("homophily ratio undefined: no edge has both endpoints labeled")
    return same / counted


def hg_homophily(g: HeteroGraph, max_len: int, symmetrize: bool = True) -> tuple[float, MetaPath]:
    """Maximum homophily ratio over all meta-path subgraphs up to max_len,
    with the path attaining it. Paths with no countable edges are skipped."""
    best: tuple[float, MetaPath] | None = None
    for path in enumerate_metapaths(g.schema, g.target_type, max_len):
        sub = compose_metapath(g, path, symmetrize=symmetrize)
        try:
            hr = homophily_ratio(sub, g.labels)
        except UndefinedRatioError:
            continue
        if best is None or hr > best[0]:
            best = (hr, path)
    if best is None:
        raise UndefinedRatioError(f"no meta-path up to length {max_len} has a measurable subgraph")
    return best
