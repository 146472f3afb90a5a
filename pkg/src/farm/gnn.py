"""GCN link prediction over functional-group graphs.

Node update per layer: h'_i = ReLU(W * mean of neighbor embeddings);
isolated nodes aggregate themselves (the mean over an empty neighborhood
is undefined otherwise).  Edges are scored by an MLP over the
concatenated pair embeddings through a sigmoid, trained with the
balanced log loss over sampled positive/negative pairs.  Pairs are
oriented (min, max) so the ordered concatenation is deterministic.

All math is plain numpy with hand-written backprop; training is
single-threaded and bit-reproducible for a given seed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .fragment import FGGraph
from .kge import ComplexEmbeddingTable, NumericError

log = logging.getLogger(__name__)


@dataclass
class LinkConfig:
    layers: int = 2
    epochs: int = 3
    learning_rate: float = 0.2
    seed: int = 0
    sample_fraction: float = 0.6
    small_graph_nodes: int = 3  # graphs with <= this many nodes use all pairs


@dataclass
class EdgeSampleSet:
    positives: list[tuple[int, int]]
    negatives: list[tuple[int, int]]


class LinkModel:
    """Stacked GCN layers plus the MLP edge scorer."""

    def __init__(self, feature_dim: int, layers: int = 2, seed: int = 0):
        rng = np.random.default_rng(seed)
        f = feature_dim
        scale = 1.0 / np.sqrt(f)
        # Near-identity GCN init keeps input features informative through
        # the stack, which matters at the short default epoch budget.
        self.gcn_weights = [
            np.eye(f) + rng.uniform(-scale, scale, (f, f)) for _ in range(layers)
        ]
        self.mlp_w1 = rng.uniform(-scale, scale, (f, 2 * f))
        self.mlp_b1 = np.zeros(f)
        self.mlp_w2 = rng.uniform(-scale, scale, (1, f))
        self.mlp_b2 = np.zeros(1)
        self.feature_dim = f

    def parameters(self) -> list[np.ndarray]:
        return [*self.gcn_weights, self.mlp_w1, self.mlp_b1, self.mlp_w2, self.mlp_b2]


def aggregation_matrix(graph: FGGraph) -> np.ndarray:
    """Row-normalized neighbor mean; isolated nodes fall back to self."""
    n = len(graph.nodes)
    agg = np.zeros((n, n))
    degree = [0] * n
    for a, b in graph.edges:
        degree[a] += 1
        degree[b] += 1
    for a, b in graph.edges:
        agg[a, b] = 1.0
        agg[b, a] = 1.0
    for i in range(n):
        if degree[i] == 0:
            agg[i, i] = 1.0
        else:
            agg[i] /= degree[i]
    return agg


def gcn_forward(
    graph: FGGraph, features: np.ndarray, model: LinkModel, keep_cache: bool = False
):
    """Node embeddings after the stacked layers; optionally the backprop cache."""
    if features.shape[1] != model.feature_dim:
        raise ValueError(
            f"feature dim {features.shape[1]} != model dim {model.feature_dim}"
        )
    agg = aggregation_matrix(graph)
    h = features
    cache = []
    for w in model.gcn_weights:
        m = agg @ h
        z = m @ w.T
        h_next = np.maximum(z, 0.0)
        if keep_cache:
            cache.append((m, z))
        h = h_next
    if keep_cache:
        return h, (agg, cache)
    return h


def score_edge(hi: np.ndarray, hj: np.ndarray, model: LinkModel) -> float:
    """Connection probability for one (ordered min,max) node pair."""
    u = np.concatenate([hi, hj])
    a = np.maximum(model.mlp_w1 @ u + model.mlp_b1, 0.0)
    s = float(model.mlp_w2 @ a + model.mlp_b2)
    return 1.0 / (1.0 + np.exp(-s))


def sample_edges(
    graph: FGGraph, rng: np.random.Generator, cfg: LinkConfig | None = None
) -> EdgeSampleSet:
    """All positives plus a 60% sample of all pairs as negative candidates.

    Graphs with more than ``small_graph_nodes`` nodes sample
    ``round(fraction * C(n,2))`` unordered pairs without replacement and
    keep the non-edges as negatives; smaller graphs use every pair.
    """
    cfg = cfg or LinkConfig()
    n = len(graph.nodes)
    if n < 2:
        return EdgeSampleSet([], [])
    positives = sorted((a, b) if a < b else (b, a) for a, b in graph.edges)
    pos_set = set(positives)
    all_pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if n <= cfg.small_graph_nodes:
        negatives = [p for p in all_pairs if p not in pos_set]
    else:
        k = int(round(cfg.sample_fraction * len(all_pairs)))
        chosen = rng.choice(len(all_pairs), size=k, replace=False)
        negatives = [all_pairs[i] for i in sorted(chosen) if all_pairs[i] not in pos_set]
    return EdgeSampleSet(positives, negatives)


def link_loss(
    probs_pos: np.ndarray, probs_neg: np.ndarray, eps: float = 1e-12
) -> float:
    """-mean log p over positives - mean log(1-p) over negatives."""
    loss = 0.0
    if probs_pos.size:
        loss -= float(np.mean(np.log(np.maximum(probs_pos, eps))))
    if probs_neg.size:
        loss -= float(np.mean(np.log(np.maximum(1.0 - probs_neg, eps))))
    return loss


def _graph_loss_and_grads(
    graph: FGGraph,
    features: np.ndarray,
    samples: EdgeSampleSet,
    model: LinkModel,
):
    """Loss plus gradients for every parameter, backpropagated by hand."""
    h, (agg, cache) = gcn_forward(graph, features, model, keep_cache=True)
    n_pos = len(samples.positives)
    n_neg = len(samples.negatives)
    if n_pos + n_neg == 0:
        return 0.0, None

    grads = {
        "gcn": [np.zeros_like(w) for w in model.gcn_weights],
        "w1": np.zeros_like(model.mlp_w1),
        "b1": np.zeros_like(model.mlp_b1),
        "w2": np.zeros_like(model.mlp_w2),
        "b2": np.zeros_like(model.mlp_b2),
    }
    dh = np.zeros_like(h)
    loss = 0.0
    eps = 1e-12
    f = model.feature_dim

    for pairs, positive, weight in (
        (samples.positives, True, 1.0 / max(1, n_pos)),
        (samples.negatives, False, 1.0 / max(1, n_neg)),
    ):
        for i, j in pairs:
            u = np.concatenate([h[i], h[j]])
            z1 = model.mlp_w1 @ u + model.mlp_b1
            a = np.maximum(z1, 0.0)
            s = float(model.mlp_w2 @ a + model.mlp_b2)
            p = 1.0 / (1.0 + np.exp(-s))
            if positive:
                loss -= weight * np.log(max(p, eps))
                ds = (p - 1.0) * weight
            else:
                loss -= weight * np.log(max(1.0 - p, eps))
                ds = p * weight
            grads["w2"] += ds * a[None, :]
            grads["b2"] += ds
            da = ds * model.mlp_w2[0]
            dz1 = da * (z1 > 0)
            grads["w1"] += np.outer(dz1, u)
            grads["b1"] += dz1
            du = model.mlp_w1.T @ dz1
            dh[i] += du[:f]
            dh[j] += du[f:]

    for layer in reversed(range(len(model.gcn_weights))):
        m, z = cache[layer]
        dz = dh * (z > 0)
        grads["gcn"][layer] += dz.T @ m
        dm = dz @ model.gcn_weights[layer]
        dh = agg.T @ dm

    return loss, grads


def train_link(
    graphs: list[FGGraph],
    feature_fn,
    cfg: LinkConfig,
    model: LinkModel | None = None,
) -> tuple[LinkModel, list[float]]:
    """One global model over all graphs' sampled pairs, SGD per graph.

    ``feature_fn(graph) -> (n, feature_dim) array``.  Edge samples are
    drawn once per graph up front; epochs revisit the same pairs.
    """
    rng = np.random.default_rng(cfg.seed)
    items = []
    for graph in graphs:
        if len(graph.nodes) < 2:
            continue
        features = feature_fn(graph)
        samples = sample_edges(graph, rng, cfg)
        if samples.positives or samples.negatives:
            items.append((graph, features, samples))
    if not items:
        raise ValueError("no trainable graphs (need >= 2 nodes each)")
    if model is None:
        model = LinkModel(items[0][1].shape[1], cfg.layers, cfg.seed)

    epoch_losses = []
    order = np.arange(len(items))
    for epoch in range(cfg.epochs):
        rng.shuffle(order)
        total = 0.0
        for idx in order:
            graph, features, samples = items[idx]
            loss, grads = _graph_loss_and_grads(graph, features, samples, model)
            total += loss
            if grads is None:
                continue
            for layer, g in enumerate(grads["gcn"]):
                model.gcn_weights[layer] -= cfg.learning_rate * g
            model.mlp_w1 -= cfg.learning_rate * grads["w1"]
            model.mlp_b1 -= cfg.learning_rate * grads["b1"]
            model.mlp_w2 -= cfg.learning_rate * grads["w2"]
            model.mlp_b2 -= cfg.learning_rate * grads["b2"]
        for p in model.parameters():
            if not np.isfinite(p).all():
                raise NumericError(f"non-finite link model at epoch {epoch}")
        epoch_losses.append(total / len(items))
    return model, epoch_losses


def predict_edges(
    graph: FGGraph, features: np.ndarray, model: LinkModel
) -> dict[tuple[int, int], float]:
    """Probability for every unordered node pair of the graph."""
    h = gcn_forward(graph, features, model)
    n = len(graph.nodes)
    return {
        (i, j): score_edge(h[i], h[j], model)
        for i in range(n)
        for j in range(i + 1, n)
    }


def graph_embedding(graph: FGGraph, features: np.ndarray, model: LinkModel) -> np.ndarray:
    """Mean-pooled final node embeddings."""
    return gcn_forward(graph, features, model).mean(axis=0)


def analogy_delta(emb_a_before, emb_a_after, emb_b_before, emb_b_after) -> float:
    """Cosine between the two substitution difference vectors."""
    da = emb_a_after - emb_a_before
    db = emb_b_after - emb_b_before
    na, nb = np.linalg.norm(da), np.linalg.norm(db)
    if na == 0 or nb == 0:
        return 0.0
    return float(da @ db / (na * nb))


def roc_auc(labels: np.ndarray, scores: np.ndarray) -> float:
    """Rank-based AUC with midrank ties."""
    labels = np.asarray(labels, dtype=bool)
    scores = np.asarray(scores, dtype=float)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("need both classes for AUC")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(scores.size)
    sorted_scores = scores[order]
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    pos_rank_sum = ranks[labels].sum()
    return float((pos_rank_sum - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


# --- entity feature lookup ----------------------------------------------------

def kge_feature_fn(table: ComplexEmbeddingTable):
    """Features from KGE entity vectors; unknown FGs get the zero vector."""
    dim = 2 * table.dim

    def lookup(graph: FGGraph) -> np.ndarray:
        out = np.zeros((len(graph.nodes), dim))
        for i, node in enumerate(graph.nodes):
            entity = node.kg_entity_id
            if entity is None:
                for candidate in (node.label, f"{node.label}@{node.core_smiles}"):
                    if candidate in table.entity_ids:
                        entity = candidate
                        break
            if entity is not None and entity in table.entity_ids:
                out[i] = table.entity_vector(entity)
            else:
                log.debug("no KGE entity for node %s; zero features", node.label)
        return out

    return lookup


# --- model file format --------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.17g}"


def save_model(path, model: LinkModel) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"FARM-GNN v1 dims={model.feature_dim} layers={len(model.gcn_weights)}\n"
        )
        for name, mat in [
            *[(f"gcn{k}", w) for k, w in enumerate(model.gcn_weights)],
            ("mlp_w1", model.mlp_w1),
            ("mlp_b1", model.mlp_b1[None, :]),
            ("mlp_w2", model.mlp_w2),
            ("mlp_b2", model.mlp_b2[None, :]),
        ]:
            fh.write(f"#{name} {mat.shape[0]} {mat.shape[1]}\n")
            for row in mat:
                fh.write(" ".join(_fmt(v) for v in row) + "\n")


def load_model(path) -> LinkModel:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        fields = dict(p.split("=", 1) for p in header if "=" in p)
        f = int(fields["dims"])
        layers = int(fields["layers"])
        mats: dict[str, np.ndarray] = {}
        name = None
        rows: list[list[float]] = []
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                if name is not None:
                    mats[name] = np.array(rows)
                name = line[1:].split()[0]
                rows = []
            elif line:
                rows.append([float(v) for v in line.split(" ")])
        if name is not None:
            mats[name] = np.array(rows)
    model = LinkModel(f, layers)
    model.gcn_weights = [mats[f"gcn{k}"] for k in range(layers)]
    model.mlp_w1 = mats["mlp_w1"]
    model.mlp_b1 = mats["mlp_b1"][0]
    model.mlp_w2 = mats["mlp_w2"]
    model.mlp_b2 = mats["mlp_b2"][0]
    return model
