"""Pairwise similarity learner over meta-paths.

The encoder maps every node type into one hidden space, propagates the
stacked features through the row-normalized union adjacency of the whole
graph (its type-blind homogeneous counterpart), and applies one projection
per meta-path per hop. Pair similarity is the product over hops of centered
cosines, trained against the targets module with exact hand-derived
gradients; a min-norm solver balances the per-path objectives.

Parameter order (used for gradient flattening and checkpoints): input
projections by ascending node type id, then for each meta-path in model
order its per-hop projections.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DataError, NumericError
from .graph import HeteroGraph
from .metapath import MetaPath
from .multiobjective import SimplexWeights, min_norm_point
from .sparse import CsrMatrix, row_normalize
from .targets import ZERO_NORM_CUTOFF, DistributionFeatures, SimilarityTargets

CHECKPOINT_MAGIC = b"MSL1"


@dataclass(frozen=True)
class LearnerConfig:
    hidden_dim: int = 32
    num_hops: int = 1
    epochs_attr: int = 200
    epochs_label: int = 30
    learning_rate: float = 5e-4
    weight_decay: float = 1e-4
    batch_rows: int = 1000
    batch_cols: int = 1000
    concat_distribution_features: bool = False
    keep_attr_in_finetune: bool = True
    seed: int = 0

    def __post_init__(self):
        for name in ("hidden_dim", "num_hops", "epochs_attr", "epochs_label", "batch_rows", "batch_cols"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


@dataclass(frozen=True)
class PairBatch:
    """A rows x cols window of node pairs."""

    rows: np.ndarray
    cols: np.ndarray


def full_batch(n: int) -> PairBatch:
    idx = np.arange(n)
    return PairBatch(idx, idx)


def union_adjacency(g: HeteroGraph) -> tuple[CsrMatrix, np.ndarray]:
    """Type-blind union of all relation edges under a global node indexing.

    Returns the boolean adjacency and the per-type global offsets. No self
    loops are added; whatever the relations contain is kept as stored.
    """
    counts = [t.node_count for t in g.schema.node_types]
    offsets = np.concatenate([[0], np.cumsum(counts)])
    n_all = int(offsets[-1])
    rows, cols = [], []
    for r, adj in zip(g.schema.relations, g.adjacency):
        rows.append(adj.coo_rows() + offsets[r.src_type])
        cols.append(adj.col_indices + offsets[r.dst_type])
    if rows:
        all_rows = np.concatenate(rows)
        all_cols = np.concatenate(cols)
    else:
        all_rows = np.zeros(0, dtype=np.int64)
        all_cols = np.zeros(0, dtype=np.int64)
    return CsrMatrix.from_coo(all_rows, all_cols, (n_all, n_all), None), offsets


class SimilarityModel:
    """Trainable state: input projections, per-path per-hop projections, and
    the cached hop encodings, kept coherent via a version counter."""

    def __init__(
        self,
        g: HeteroGraph,
        paths: Sequence[MetaPath],
        cfg: LearnerConfig,
        dist_features: Sequence[DistributionFeatures] | None = None,
    ):
        if not paths:
            raise ValueError("need at least one meta-path")
        if cfg.concat_distribution_features:
            if dist_features is None or len(dist_features) != len(paths):
                raise ValueError("concat mode needs one DistributionFeatures per path")
            for df in dist_features:
                if df.num_hops < cfg.num_hops:
                    raise ValueError(
                        f"distribution features carry {df.num_hops} hops, "
                        f"model needs {cfg.num_hops}"
                    )
        self.graph = g
        self.cfg = cfg
        self.paths = tuple(paths)
        self.path_index = {p: i for i, p in enumerate(self.paths)}
        union, offsets = union_adjacency(g)
        self.union_walk = row_normalize(union)
        self._walk_sp = self.union_walk.to_scipy()
        self._walk_sp_t = self._walk_sp.T.tocsr()
        self.type_offsets = offsets
        self.target_slice = slice(
            int(offsets[g.target_type]), int(offsets[g.target_type] + g.target_count)
        )
        self.dist_features = tuple(dist_features) if dist_features is not None else None

        d = cfg.hidden_dim
        rng = np.random.default_rng(cfg.seed)
        self.w_in: dict[int, np.ndarray] = {}
        for t in g.schema.node_types:
            self.w_in[t.type_id] = _xavier(rng, t.feature_dim, d)
        self.w_path: list[list[np.ndarray]] = [
            [_xavier(rng, d, d) for _ in range(cfg.num_hops)] for _ in self.paths
        ]

        self._version = 0
        self._enc_version = -1
        self._encodings: tuple[np.ndarray, ...] | None = None

    # -- parameters ---------------------------------------------------------

    def param_items(self) -> list[tuple[tuple, np.ndarray]]:
        items: list[tuple[tuple, np.ndarray]] = []
        for tid in sorted(self.w_in):
            items.append((("in", tid), self.w_in[tid]))
        for pidx, mats in enumerate(self.w_path):
            for k, w in enumerate(mats):
                items.append((("path", pidx, k), w))
        return items

    def set_param(self, key: tuple, value: np.ndarray) -> None:
        if key[0] == "in":
            self.w_in[key[1]] = value
        else:
            self.w_path[key[1]][key[2]] = value
        self._version += 1

    # -- encodings ----------------------------------------------------------

    def encodings(self) -> tuple[np.ndarray, ...]:
        if self._enc_version != self._version:
            self._encodings = self._compute_encodings()
            self._enc_version = self._version
        return self._encodings

    def _compute_encodings(self) -> tuple[np.ndarray, ...]:
        g = self.graph
        n_all = int(self.type_offsets[-1])
        h0 = np.empty((n_all, self.cfg.hidden_dim))
        for t in g.schema.node_types:
            lo, hi = int(self.type_offsets[t.type_id]), int(self.type_offsets[t.type_id + 1])
            h0[lo:hi] = np.asarray(g.features[t.type_id], dtype=np.float64) @ self.w_in[t.type_id]
        out = []
        z = h0
        for _ in range(self.cfg.num_hops):
            z = np.asarray(self._walk_sp @ z)
            out.append(z)
        return tuple(out)


def _xavier(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


def init_model(
    g: HeteroGraph,
    paths: Sequence[MetaPath],
    cfg: LearnerConfig,
    dist_features: Sequence[DistributionFeatures] | None = None,
) -> SimilarityModel:
    return SimilarityModel(g, paths, cfg, dist_features)


def encode(g: HeteroGraph, m: SimilarityModel) -> tuple[np.ndarray, ...]:
    """Per-hop encodings of the whole graph under the current parameters."""
    if g.schema.content_hash() != m.graph.schema.content_hash():
        raise DataError("model was built for a different schema")
    return m.encodings()


@dataclass
class _HopRep:
    units: np.ndarray  # (n_target, width) centered unit rows; zero rows for degenerate nodes
    norms: np.ndarray  # centered norms before unit scaling
    z_target: np.ndarray  # (n_target, hidden) encoder rows feeding this hop


def _path_reps(m: SimilarityModel, path: MetaPath) -> list[_HopRep]:
    pidx = m.path_index[path]
    enc = m.encodings()
    reps = []
    for k in range(m.cfg.num_hops):
        z_t = enc[k][m.target_slice]
        h = z_t @ m.w_path[pidx][k]
        if m.cfg.concat_distribution_features:
            h = np.concatenate([h, m.dist_features[pidx].attr[k]], axis=1)
        centered = h - h.mean(axis=0)
        norms = np.linalg.norm(centered, axis=1)
        safe = np.where(norms < ZERO_NORM_CUTOFF, 1.0, norms)
        units = centered / safe[:, None]
        units[norms < ZERO_NORM_CUTOFF] = 0.0
        reps.append(_HopRep(units=units, norms=norms, z_target=z_t))
    return reps


def model_similarity(m: SimilarityModel, path: MetaPath, i: int, j: int) -> float:
    """Product over hops of centered cosine between nodes i and j."""
    out = 1.0
    for rep in _path_reps(m, path):
        out *= float(rep.units[i] @ rep.units[j])
    return out


def similarity_block(m: SimilarityModel, path: MetaPath, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    reps = _path_reps(m, path)
    out = np.ones((len(rows), len(cols)))
    for rep in reps:
        out *= rep.units[rows] @ rep.units[cols].T
    return out


def pair_loss(
    m: SimilarityModel, path: MetaPath, batch: PairBatch, targets: SimilarityTargets
) -> tuple[float, float]:
    """Squared-error sums of the batch window against the attribute targets
    (first value) and the masked label targets (second value)."""
    s = similarity_block(m, path, batch.rows, batch.cols)
    r1 = s - targets.attr_block(batch.rows, batch.cols)
    r2 = s - targets.label_block(batch.rows, batch.cols)
    mb = targets.mask_block(batch.rows, batch.cols)
    return float((r1 * r1).sum()), float((mb * r2 * r2).sum())


@dataclass
class GradientResult:
    l1: float
    l2: float
    w_in: dict[int, np.ndarray]
    w_path: list[np.ndarray] = field(default_factory=list)


def _scatter_add(out: np.ndarray, idx: np.ndarray, rows: np.ndarray) -> None:
    # strictly increasing index sets (the sampler's output) take the fast path
    if idx.size > 1 and np.all(np.diff(idx) > 0):
        out[idx] += rows
    else:
        np.add.at(out, idx, rows)


def gradients(
    m: SimilarityModel,
    path: MetaPath,
    batch: PairBatch,
    targets: SimilarityTargets,
    include_attr: bool = True,
    include_label: bool = True,
) -> GradientResult:
    """Exact gradients of the selected loss terms for one meta-path.

    The backward pass mirrors the forward chain: residual -> hop cosines
    (leave-one-out products) -> unit rows -> centering -> per-hop projection
    -> encoder propagation -> input projections.
    """
    pidx = m.path_index[path]
    reps = _path_reps(m, path)
    rows, cols = batch.rows, batch.cols
    k_hops = m.cfg.num_hops
    d = m.cfg.hidden_dim
    n_target = m.graph.target_count
    arange = np.arange(n_target)
    full_rows = rows.size == n_target and np.array_equal(rows, arange)
    full_cols = cols.size == n_target and np.array_equal(cols, arange)

    row_units = [rep.units if full_rows else rep.units[rows] for rep in reps]
    col_units = [rep.units if full_cols else rep.units[cols] for rep in reps]
    hop_sims = [a @ b.T for a, b in zip(row_units, col_units)]
    s = hop_sims[0]
    for hs in hop_sims[1:]:
        s = s * hs

    r1 = s - targets.attr_block(rows, cols)
    r2 = s - targets.label_block(rows, cols)
    mb = targets.mask_block(rows, cols)
    l1 = float((r1 * r1).sum())
    l2 = float((mb * r2 * r2).sum())

    if include_attr and include_label:
        g_s = 2.0 * r1 + 2.0 * mb * r2
    elif include_attr:
        g_s = 2.0 * r1
    elif include_label:
        g_s = 2.0 * mb * r2
    else:
        g_s = np.zeros_like(s)

    n_all = int(m.type_offsets[-1])
    w_path_grads: list[np.ndarray] = []
    dz_global = [np.zeros((n_all, d)) for _ in range(k_hops)]

    for k in range(k_hops):
        rep = reps[k]
        loo = g_s
        for l in range(k_hops):
            if l != k:
                loo = loo * hop_sims[l]
        a = row_units[k]
        b = col_units[k]
        sk = hop_sims[k]
        na = rep.norms if full_rows else rep.norms[rows]
        nb = rep.norms if full_cols else rep.norms[cols]
        na_safe = np.where(na < ZERO_NORM_CUTOFF, 1.0, na)
        nb_safe = np.where(nb < ZERO_NORM_CUTOFF, 1.0, nb)
        da = (loo @ b - (loo * sk).sum(axis=1)[:, None] * a) / na_safe[:, None]
        db = (loo.T @ a - (loo * sk).sum(axis=0)[:, None] * b) / nb_safe[:, None]
        da[na < ZERO_NORM_CUTOFF] = 0.0
        db[nb < ZERO_NORM_CUTOFF] = 0.0

        if full_rows and full_cols:
            d_centered = da + db
        else:
            d_centered = np.zeros((n_target, rep.units.shape[1]))
            _scatter_add(d_centered, rows, da)
            _scatter_add(d_centered, cols, db)
        # centering used the mean over all rows, so its backward spreads the
        # negative column mean to every row
        d_h = d_centered - d_centered.mean(axis=0)
        d_h = d_h[:, :d]  # concatenated distribution columns are constants

        w = m.w_path[pidx][k]
        w_path_grads.append(rep.z_target.T @ d_h)
        dz_global[k][m.target_slice] = d_h @ w.T

    acc = np.zeros((n_all, d))
    for k in range(k_hops - 1, -1, -1):
        acc += dz_global[k]
        acc = np.asarray(m._walk_sp_t @ acc)
    w_in_grads: dict[int, np.ndarray] = {}
    for t in m.graph.schema.node_types:
        lo, hi = int(m.type_offsets[t.type_id]), int(m.type_offsets[t.type_id + 1])
        x = np.asarray(m.graph.features[t.type_id], dtype=np.float64)
        w_in_grads[t.type_id] = x.T @ acc[lo:hi]

    return GradientResult(l1=l1, l2=l2, w_in=w_in_grads, w_path=w_path_grads)


def flatten_gradient(m: SimilarityModel, result: GradientResult, pidx: int) -> np.ndarray:
    """Gradient as one vector over the full parameter set, in canonical
    order; projections of other paths contribute zeros."""
    parts = [result.w_in[tid].ravel() for tid in sorted(result.w_in)]
    for p in range(len(m.paths)):
        for k in range(m.cfg.num_hops):
            if p == pidx:
                parts.append(result.w_path[k].ravel())
            else:
                parts.append(np.zeros(m.w_path[p][k].size))
    return np.concatenate(parts)


class _Adam:
    def __init__(self, shapes: dict[tuple, tuple], lr: float, weight_decay: float):
        self.lr = lr
        self.wd = weight_decay
        self.beta1, self.beta2, self.eps = 0.9, 0.999, 1e-8
        self.t = 0
        self.m = {k: np.zeros(s) for k, s in shapes.items()}
        self.v = {k: np.zeros(s) for k, s in shapes.items()}

    def step(self, model: SimilarityModel, grads: dict[tuple, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for key, param in model.param_items():
            g = grads[key] + self.wd * param
            self.m[key] = self.beta1 * self.m[key] + (1.0 - self.beta1) * g
            self.v[key] = self.beta2 * self.v[key] + (1.0 - self.beta2) * g * g
            update = (self.m[key] / bc1) / (np.sqrt(self.v[key] / bc2) + self.eps)
            model.set_param(key, param - self.lr * update)


@dataclass(frozen=True)
class HistoryRow:
    epoch: int
    phase: str
    losses: tuple[float, ...]
    lambdas: tuple[float, ...]


def _sample_axis(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    if k >= n:
        return np.arange(n)
    return np.sort(rng.choice(n, size=k, replace=False))


MooSolver = Callable[[Sequence[np.ndarray]], SimplexWeights]


def train(
    g: HeteroGraph,
    paths: Sequence[MetaPath],
    targets: Sequence[SimilarityTargets],
    cfg: LearnerConfig,
    moo_solver: MooSolver | None = None,
) -> tuple[SimilarityModel, list[HistoryRow]]:
    """Two-phase training: attribute targets first, label targets folded in
    for the fine-tune epochs. One window of batch_rows x batch_cols pairs is
    sampled per epoch and shared by every meta-path; the min-norm solver
    weights the per-path gradients before each Adam step. Deterministic for
    a fixed seed."""
    if len(paths) != len(targets):
        raise ValueError("one SimilarityTargets per path required")
    for t in targets:
        if t.num_hops != cfg.num_hops:
            raise ValueError(
                f"targets were built with {t.num_hops} hops, config says {cfg.num_hops}"
            )
    solver = moo_solver if moo_solver is not None else min_norm_point
    dist = [t.df for t in targets] if cfg.concat_distribution_features else None
    model = SimilarityModel(g, paths, cfg, dist_features=dist)

    rng = np.random.default_rng(cfg.seed)
    adam = _Adam({k: p.shape for k, p in model.param_items()}, cfg.learning_rate, cfg.weight_decay)
    n = g.target_count
    m_paths = len(paths)
    history: list[HistoryRow] = []
    epoch = 0

    phases = (
        ("attr", cfg.epochs_attr, True, False),
        ("label", cfg.epochs_label, cfg.keep_attr_in_finetune, True),
    )
    for phase_name, n_epochs, inc_attr, inc_label in phases:
        for _ in range(n_epochs):
            epoch += 1
            batch = PairBatch(
                _sample_axis(rng, n, cfg.batch_rows), _sample_axis(rng, n, cfg.batch_cols)
            )
            results = [
                gradients(model, p, batch, t, include_attr=inc_attr, include_label=inc_label)
                for p, t in zip(model.paths, targets)
            ]
            losses = [
                (r.l1 if inc_attr else 0.0) + (r.l2 if inc_label else 0.0) for r in results
            ]
            if not all(np.isfinite(losses)):
                raise NumericError(
                    f"non-finite loss at epoch {epoch} ({phase_name} phase): {losses}"
                )

            if m_paths == 1:
                lam = SimplexWeights(np.ones(1))
            else:
                lam = solver([flatten_gradient(model, r, i) for i, r in enumerate(results)])

            combined: dict[tuple, np.ndarray] = {}
            for key, param in model.param_items():
                combined[key] = np.zeros_like(param)
            for i, r in enumerate(results):
                w = lam.lambdas[i] / m_paths
                for tid, gr in r.w_in.items():
                    combined[("in", tid)] += w * gr
                for k, gr in enumerate(r.w_path):
                    combined[("path", i, k)] += w * gr
            adam.step(model, combined)

            history.append(
                HistoryRow(epoch, phase_name, tuple(losses), tuple(float(x) for x in lam.lambdas))
            )
    return model, history


def history_csv_lines(history: Sequence[HistoryRow], path_labels: Sequence[str]) -> list[str]:
    header = ["epoch", "phase"]
    header += [f"loss:{lbl}" for lbl in path_labels]
    header += [f"lambda:{lbl}" for lbl in path_labels]
    lines = [",".join(header)]
    for row in history:
        cells = [str(row.epoch), row.phase]
        cells += [repr(x) for x in row.losses]
        cells += [repr(x) for x in row.lambdas]
        lines.append(",".join(cells))
    return lines


def save_history_csv(history: Sequence[HistoryRow], path_labels: Sequence[str], filename: str) -> None:
    with open(filename, "w", encoding="utf-8") as fh:
        fh.write("\n".join(history_csv_lines(history, path_labels)) + "\n")


# -- checkpoint container ---------------------------------------------------


def save_model(m: SimilarityModel, filename: str, extra_meta: dict | None = None) -> None:
    """Versioned binary checkpoint: magic, JSON header (schema hash, config,
    paths, parameter index, extra metadata), then raw little-endian float64
    tensors in canonical parameter order."""
    items = m.param_items()
    header = {
        "format_version": 1,
        "schema_hash": m.graph.schema.content_hash(),
        "target_type": m.graph.target_type,
        "config": {
            "hidden_dim": m.cfg.hidden_dim,
            "num_hops": m.cfg.num_hops,
            "epochs_attr": m.cfg.epochs_attr,
            "epochs_label": m.cfg.epochs_label,
            "learning_rate": m.cfg.learning_rate,
            "weight_decay": m.cfg.weight_decay,
            "batch_rows": m.cfg.batch_rows,
            "batch_cols": m.cfg.batch_cols,
            "concat_distribution_features": m.cfg.concat_distribution_features,
            "keep_attr_in_finetune": m.cfg.keep_attr_in_finetune,
            "seed": m.cfg.seed,
        },
        "paths": [list(p.relation_ids) for p in m.paths],
        "params": [{"key": list(k), "shape": list(p.shape)} for k, p in items],
        "meta": extra_meta or {},
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(filename, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for _, p in items:
            fh.write(np.ascontiguousarray(p, dtype="<f8").tobytes())


def _open_checkpoint(filename: str):
    try:
        return open(filename, "rb")
    except OSError as exc:
        raise DataError(f"cannot open checkpoint {filename}: {exc}") from None


def read_checkpoint_header(filename: str) -> dict:
    """Parse just the JSON header of a checkpoint (no graph needed)."""
    with _open_checkpoint(filename) as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise DataError(f"{filename}: not a model checkpoint (bad magic {magic!r})")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
    if header.get("format_version") != 1:
        raise DataError(f"{filename}: unsupported checkpoint version")
    return header


def load_model(
    filename: str,
    g: HeteroGraph,
    targets: Sequence[SimilarityTargets] | None = None,
) -> tuple[SimilarityModel, dict]:
    """Rebuild a model from a checkpoint, bound to ``g``. The schema hash must
    match; concat-mode models need per-path targets to restore distribution
    features."""
    with _open_checkpoint(filename) as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise DataError(f"{filename}: not a model checkpoint (bad magic {magic!r})")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        if header.get("format_version") != 1:
            raise DataError(f"{filename}: unsupported checkpoint version")
        if header["schema_hash"] != g.schema.content_hash():
            raise DataError(f"{filename}: checkpoint was trained on a different schema")
        cfg = LearnerConfig(**header["config"])
        paths = [MetaPath(tuple(ids)) for ids in header["paths"]]
        dist = None
        if cfg.concat_distribution_features:
            if targets is None or len(targets) != len(paths):
                raise DataError("concat-mode checkpoint needs one SimilarityTargets per path")
            dist = [t.df for t in targets]
        model = SimilarityModel(g, paths, cfg, dist_features=dist)
        for entry in header["params"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape))
            raw = fh.read(count * 8)
            if len(raw) != count * 8:
                raise DataError(f"{filename}: truncated parameter data")
            arr = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
            model.set_param(tuple(entry["key"]), arr)
    return model, header
