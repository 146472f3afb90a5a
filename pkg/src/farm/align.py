"""Sequence/graph contrastive alignment with a toy masked-token encoder.

The reference encoder stands in for a full masked language model: each
token has a learned embedding, a masked position is predicted from the
mean embedding of unmasked tokens in a +/-w window, and the prediction
distribution is a softmax of dot products against the embedding table.
The sequence embedding is the mean token embedding pushed through a
linear projection into the graph-embedding space (a bag model: token
order does not matter, which is a documented limitation of the stand-in,
not of the objective).

The combined objective is lambda_mlm * L_MLM + lambda_cl * L_CL where
L_CL is the mean cosine hinge over (sequence, true graph, augmented
graph) triples.  Graph-side embeddings come from a frozen link-prediction
model by default and are centered on the corpus mean before the cosine:
ReLU-pooled embeddings all live in the positive orthant, which pushes
every pairwise cosine toward 1 and removes the hinge's training signal;
subtracting the mean restores contrast.  Three independent seeded
streams drive shuffling, masking and augmentation, so setting
lambda_cl = 0 reproduces a pure MLM run bit for bit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .fragment import FGGraph, FGNode
from .gnn import LinkModel, graph_embedding
from .kge import NumericError

log = logging.getLogger(__name__)


class NotAugmentable(ValueError):
    """Graph violates the chosen augmentation's precondition."""


@dataclass
class AlignConfig:
    margin: float = 0.5
    lambda_mlm: float = 1.0
    lambda_cl: float = 0.5
    batch_size: int = 126
    epochs: int = 5
    mask_rate: float = 0.35
    window: int = 5
    embed_dim: int = 64
    learning_rate: float = 0.05
    seed: int = 0
    mask_structural: bool = True  # structural tokens are maskable too
    in_batch_negatives: bool = False
    negatives_per_item: int = 4  # contrastive pairs drawn per molecule per epoch
    optimizer: str = "adam"  # "adam" or "sgd"; token bags are ill-conditioned

    def __post_init__(self):
        if self.margin <= 0:
            raise ValueError("margin must be positive")
        if not (0.0 <= self.mask_rate <= 1.0):
            raise ValueError("mask_rate must be in [0, 1]")
        if self.lambda_mlm < 0 or self.lambda_cl < 0:
            raise ValueError("loss weights must be non-negative")


@dataclass
class MaskingSpec:
    masked_indices: list[int]
    originals: list[int]  # token ids at the masked positions


def choose_mask(
    token_ids: list[int],
    mask_rate: float,
    rng: np.random.Generator,
    maskable: list[int] | None = None,
) -> MaskingSpec:
    """Pick round(rate * length) positions (at least one) to mask."""
    positions = maskable if maskable is not None else list(range(len(token_ids)))
    if not positions:
        positions = list(range(len(token_ids)))
    k = min(len(positions), max(1, int(round(mask_rate * len(token_ids)))))
    chosen = sorted(rng.choice(len(positions), size=k, replace=False).tolist())
    idx = [positions[c] for c in chosen]
    return MaskingSpec(idx, [token_ids[i] for i in idx])


class _AdamState:
    """Minimal Adam (beta1=0.9, beta2=0.999); deterministic given order."""

    def __init__(self, params: list[np.ndarray]):
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray], lr: float) -> None:
        self.t += 1
        for k, (p, g) in enumerate(zip(params, grads)):
            self.m[k] = 0.9 * self.m[k] + 0.1 * g
            self.v[k] = 0.999 * self.v[k] + 0.001 * g * g
            mhat = self.m[k] / (1.0 - 0.9**self.t)
            vhat = self.v[k] / (1.0 - 0.999**self.t)
            p -= lr * mhat / (np.sqrt(vhat) + 1e-8)


class Encoder:
    """Token embedding table plus projection into the graph space."""

    def __init__(self, vocab_size: int, embed_dim: int, graph_dim: int, seed: int = 0):
        rng = np.random.default_rng(seed)
        self.emb = rng.uniform(-0.1, 0.1, (vocab_size, embed_dim))
        self.proj = rng.uniform(-0.1, 0.1, (graph_dim, embed_dim))

    def copy(self) -> "Encoder":
        out = Encoder(1, 1, 1)
        out.emb = self.emb.copy()
        out.proj = self.proj.copy()
        return out


def reference_mlm_loss(
    token_ids: list[int],
    spec: MaskingSpec,
    emb: np.ndarray,
    window: int = 5,
    grad: np.ndarray | None = None,
) -> float:
    """Mean NLL of original tokens given windowed context means.

    If ``grad`` is given, d loss / d emb is accumulated into it (both the
    output-matrix path and the context-embedding path).
    """
    if not spec.masked_indices:
        raise ValueError("need at least one masked position")
    masked = set(spec.masked_indices)
    total = 0.0
    inv_m = 1.0 / len(spec.masked_indices)
    for pos, target in zip(spec.masked_indices, spec.originals):
        ctx_ids = [
            token_ids[j]
            for j in range(max(0, pos - window), min(len(token_ids), pos + window + 1))
            if j != pos and j not in masked
        ]
        if ctx_ids:
            ctx = emb[ctx_ids].mean(axis=0)
        else:
            ctx = np.zeros(emb.shape[1])
        logits = emb @ ctx
        logits -= logits.max()
        exp = np.exp(logits)
        probs = exp / exp.sum()
        total -= np.log(max(probs[target], 1e-300))
        if grad is not None:
            dlogits = probs * inv_m
            dlogits[target] -= inv_m
            grad += np.outer(dlogits, ctx)
            if ctx_ids:
                dctx = emb.T @ dlogits
                share = dctx / len(ctx_ids)
                for cid in ctx_ids:
                    grad[cid] += share
    return total * inv_m


def sequence_embedding(token_ids: list[int], encoder: Encoder) -> np.ndarray:
    """Projection of the mean token embedding (bag model)."""
    mean = encoder.emb[token_ids].mean(axis=0)
    return encoder.proj @ mean


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(u @ v / (nu * nv))


def _cosine_grad_u(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return np.zeros_like(u)
    c = float(u @ v / (nu * nv))
    return v / (nu * nv) - c * u / (nu * nu)


@dataclass
class PairedEmbedding:
    h_seq: np.ndarray
    h_pos: np.ndarray
    h_neg: np.ndarray


def contrastive_loss(batch: list[PairedEmbedding], margin: float) -> float:
    """Mean hinge: max(0, margin - cos(seq,pos) + cos(seq,neg))."""
    if not batch:
        raise ValueError("empty contrastive batch")
    total = 0.0
    for pair in batch:
        total += max(
            0.0,
            margin - cosine(pair.h_seq, pair.h_pos) + cosine(pair.h_seq, pair.h_neg),
        )
    return total / len(batch)


def augment_negative(
    graph: FGGraph,
    features: np.ndarray,
    mode: str,
    rng: np.random.Generator,
) -> tuple[FGGraph, np.ndarray]:
    """Node deletion or label/feature swap; output always differs from input."""
    n = len(graph.nodes)
    if mode == "delete":
        if n < 2:
            raise NotAugmentable("delete needs >= 2 nodes")
        victim = int(rng.integers(n))
        keep = [i for i in range(n) if i != victim]
        remap = {old: new for new, old in enumerate(keep)}
        nodes = [
            FGNode(graph.nodes[i].label, graph.nodes[i].core_smiles, graph.nodes[i].atom_indices)
            for i in keep
        ]
        edges = [
            (remap[a], remap[b])
            for a, b in graph.edges
            if a != victim and b != victim
        ]
        return FGGraph(nodes, edges, graph.source_smiles), features[keep]
    if mode == "swap":
        labels = [node.label for node in graph.nodes]
        if n < 2 or len(set(labels)) < 2:
            raise NotAugmentable("swap needs two nodes with distinct labels")
        while True:
            i, j = int(rng.integers(n)), int(rng.integers(n))
            if labels[i] != labels[j]:
                break
        nodes = list(graph.nodes)
        nodes[i], nodes[j] = (
            FGNode(nodes[j].label, nodes[j].core_smiles, nodes[i].atom_indices),
            FGNode(nodes[i].label, nodes[i].core_smiles, nodes[j].atom_indices),
        )
        swapped = features.copy()
        swapped[[i, j]] = swapped[[j, i]]
        return FGGraph(nodes, list(graph.edges), graph.source_smiles), swapped
    raise ValueError(f"unknown augmentation mode {mode!r}")


def graphs_equal(a: FGGraph, xa: np.ndarray, b: FGGraph, xb: np.ndarray) -> bool:
    """Positional equality: same indexed labels, edges and features."""
    return (
        [n.label for n in a.nodes] == [n.label for n in b.nodes]
        and sorted(a.edges) == sorted(b.edges)
        and xa.shape == xb.shape
        and bool(np.array_equal(xa, xb))
    )


@dataclass
class AlignItem:
    token_ids: list[int]
    graph: FGGraph
    features: np.ndarray


@dataclass
class EpochMetrics:
    epoch: int
    mlm_loss: float
    cl_loss: float
    pos_beats_neg: float

    def as_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "mlm_loss": self.mlm_loss,
            "cl_loss": self.cl_loss,
            "pos_beats_neg": self.pos_beats_neg,
        }


def _maskable_positions(tokens: list[str], include_structural: bool) -> list[int]:
    if include_structural:
        return list(range(len(tokens)))
    return [i for i, t in enumerate(tokens) if "_" in t]


def train_align(
    items: list[AlignItem],
    gnn: LinkModel,
    cfg: AlignConfig,
    vocab_size: int,
    token_texts: list[list[str]] | None = None,
    encoder: Encoder | None = None,
) -> tuple[Encoder, list[EpochMetrics]]:
    """Minimize lambda_mlm * L_MLM + lambda_cl * L_CL by mini-batch SGD.

    The GNN is frozen: graph-side embeddings are constants.  Returns the
    trained encoder and per-epoch metrics.
    """
    if not items:
        raise ValueError("no training items")
    graph_dim = gnn.feature_dim
    if encoder is None:
        encoder = Encoder(vocab_size, cfg.embed_dim, graph_dim, cfg.seed)

    seqs = np.random.SeedSequence(cfg.seed).spawn(3)
    rng_order = np.random.default_rng(seqs[0])
    rng_mask = np.random.default_rng(seqs[1])
    rng_aug = np.random.default_rng(seqs[2])

    h_pos_raw = [
        graph_embedding(item.graph, item.features, gnn) for item in items
    ]
    center = np.mean(h_pos_raw, axis=0)
    h_pos_all = [h - center for h in h_pos_raw]
    if token_texts is not None:
        maskable = [
            _maskable_positions(texts, cfg.mask_structural) for texts in token_texts
        ]
    else:
        maskable = [None] * len(items)

    adam = _AdamState([encoder.emb, encoder.proj]) if cfg.optimizer == "adam" else None
    metrics: list[EpochMetrics] = []
    order = np.arange(len(items))
    for epoch in range(cfg.epochs):
        rng_order.shuffle(order)
        # Per-item draws happen in shuffled order from dedicated streams.
        mlm_sum = 0.0
        cl_sum = 0.0
        beats = 0
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            grad_mlm = np.zeros_like(encoder.emb)
            grad_cl_emb = np.zeros_like(encoder.emb)
            grad_cl_proj = np.zeros_like(encoder.proj)
            for idx in batch:
                item = items[idx]
                spec = choose_mask(
                    item.token_ids, cfg.mask_rate, rng_mask, maskable[idx]
                )
                mlm = reference_mlm_loss(
                    item.token_ids, spec, encoder.emb, cfg.window,
                    grad=grad_mlm if cfg.lambda_mlm > 0 else None,
                )
                mlm_sum += mlm

                h_pos = h_pos_all[idx]
                h_seq = sequence_embedding(item.token_ids, encoder)
                cos_pos = cosine(h_seq, h_pos)
                inv_pairs = 1.0 / cfg.negatives_per_item
                for _ in range(cfg.negatives_per_item):
                    h_neg = (
                        _draw_negative(items, idx, gnn, rng_aug, cfg, h_pos_raw[idx])
                        - center
                    )
                    cos_neg = cosine(h_seq, h_neg)
                    hinge = cfg.margin - cos_pos + cos_neg
                    cl_sum += max(0.0, hinge) * inv_pairs
                    beats += (cos_pos > cos_neg) * inv_pairs
                    if cfg.lambda_cl > 0 and hinge > 0:
                        dh = inv_pairs * (
                            -_cosine_grad_u(h_seq, h_pos)
                            + _cosine_grad_u(h_seq, h_neg)
                        )
                        mean_emb = encoder.emb[item.token_ids].mean(axis=0)
                        grad_cl_proj += np.outer(dh, mean_emb)
                        dmean = encoder.proj.T @ dh
                        share = dmean / len(item.token_ids)
                        for tid in item.token_ids:
                            grad_cl_emb[tid] += share
            g_emb = (cfg.lambda_mlm * grad_mlm + cfg.lambda_cl * grad_cl_emb) / len(batch)
            g_proj = cfg.lambda_cl * grad_cl_proj / len(batch)
            if adam is not None:
                adam.step([encoder.emb, encoder.proj], [g_emb, g_proj], cfg.learning_rate)
            else:
                encoder.emb -= cfg.learning_rate * g_emb
                encoder.proj -= cfg.learning_rate * g_proj
        if not (np.isfinite(encoder.emb).all() and np.isfinite(encoder.proj).all()):
            raise NumericError(f"non-finite encoder at epoch {epoch}")
        metrics.append(
            EpochMetrics(
                epoch,
                mlm_sum / len(items),
                cl_sum / len(items),
                beats / len(items),
            )
        )
    return encoder, metrics


def alignment_separation(
    items: list[AlignItem], gnn: LinkModel, encoder: Encoder, cfg: AlignConfig, seed: int
) -> float:
    """Post-training fraction of pairs with cos(pos) > cos(neg)."""
    rng = np.random.default_rng(seed)
    h_pos_raw = [graph_embedding(item.graph, item.features, gnn) for item in items]
    center = np.mean(h_pos_raw, axis=0)
    beats = 0
    for idx, item in enumerate(items):
        h_seq = sequence_embedding(item.token_ids, encoder)
        h_neg = _draw_negative(items, idx, gnn, rng, cfg, h_pos_raw[idx]) - center
        beats += cosine(h_seq, h_pos_raw[idx] - center) > cosine(h_seq, h_neg)
    return beats / len(items)


def _draw_negative(
    items: list[AlignItem],
    idx: int,
    gnn: LinkModel,
    rng: np.random.Generator,
    cfg: AlignConfig,
    h_pos: np.ndarray | None = None,
) -> np.ndarray:
    """Augmented-graph embedding to contrast against.

    A swap on a symmetric topology can leave the mean-pooled embedding
    bit-identical to the positive; such a draw carries no training signal
    and is treated like a failed precondition (fall back to the other
    mode, then to an in-batch negative).
    """
    item = items[idx]
    mode = "delete" if rng.random() < 0.5 else "swap"
    for attempt_mode in (mode, "swap" if mode == "delete" else "delete"):
        try:
            g, x = augment_negative(item.graph, item.features, attempt_mode, rng)
        except NotAugmentable:
            continue
        h_neg = graph_embedding(g, x, gnn)
        if h_pos is not None and np.array_equal(h_neg, h_pos):
            continue
        return h_neg
    # In-batch fallback: another molecule's true graph.
    if len(items) > 1:
        other = int(rng.integers(len(items) - 1))
        if other >= idx:
            other += 1
        o = items[other]
        return graph_embedding(o.graph, o.features, gnn)
    return np.zeros(gnn.feature_dim)
