"""Trainable relational encoder over the union of both graphs.

Entities of the two graphs share one embedding table (target ids offset by
``|E_s|``); relation tables are disjoint (target ids offset by ``|R_s|``)
and timestamp embeddings are shared. Each layer averages messages
``h_u + W_e (h_r + h_t)`` over the quadruples incident to ``v`` (both
directions), applies a square map ``W_l`` and updates
``h_v <- tanh(.) + h_v``. The output row of an entity concatenates every
layer's state with the mean embedding of its incident relations plus the mean
embedding of its incident timestamps.

Training minimizes, per seed pair and per direction, the log-sum-exp of
z-scored margins ``gamma - sim(pos) + sim(neg)`` scaled by ``lambda``; the
z-score statistics are treated as constants when differentiating. Gradients
are derived by hand.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ArgumentError

log = logging.getLogger(__name__)

Z_EPS = 1e-8
OPTIMIZER_NAMES = ("sgd", "adam")


@dataclass(frozen=True)
class TrainingConfig:
    dim: int = 64
    rel_dim: int = 32
    layers: int = 2
    lse_scale: float = 30.0
    margin: float = 1.0
    epochs: int = 100
    learning_rate: float = 0.01
    negatives_per_pair: int = 64
    optimizer: str = "sgd"
    rng_seed: int = 0

    def __post_init__(self):
        if self.dim < 1 or self.rel_dim < 1:
            raise ArgumentError("embedding widths must be >= 1")
        if self.layers < 0:
            raise ArgumentError("layer count must be >= 0")
        if self.lse_scale <= 0:
            raise ArgumentError("lse_scale must be > 0")
        if self.margin < 0:
            raise ArgumentError("margin must be >= 0")
        if self.epochs < 0 or self.negatives_per_pair < 1:
            raise ArgumentError("epochs must be >= 0 and negatives_per_pair >= 1")
        if self.optimizer not in OPTIMIZER_NAMES:
            raise ArgumentError(f"unknown optimizer {self.optimizer!r}; choose from {OPTIMIZER_NAMES}")


@dataclass
class ModelParams:
    entity: np.ndarray
    relation: np.ndarray
    time: np.ndarray
    edge_proj: np.ndarray
    layer_weights: list

    def arrays(self):
        return [self.entity, self.relation, self.time, self.edge_proj, *self.layer_weights]

    def copy(self):
        return ModelParams(self.entity.copy(), self.relation.copy(), self.time.copy(),
                           self.edge_proj.copy(), [w.copy() for w in self.layer_weights])

    def zeros_like(self):
        return ModelParams(*(np.zeros_like(a) for a in (self.entity, self.relation, self.time,
                                                        self.edge_proj)),
                           [np.zeros_like(w) for w in self.layer_weights])

    @property
    def dim(self):
        return self.entity.shape[1]

    @property
    def rel_dim(self):
        return self.relation.shape[1]


def _row_normalize(m):
    m = sp.csr_matrix(m, dtype=np.float64)
    s = np.asarray(m.sum(axis=1)).ravel()
    inv = np.divide(1.0, s, out=np.zeros_like(s), where=s > 0)
    return sp.csr_matrix(sp.diags(inv) @ m)


@dataclass(frozen=True)
class UnionGraph:
    """Sparse operators for message passing over both graphs at once."""

    num_source: int
    num_target: int
    num_source_relations: int
    num_relations: int
    num_times: int
    msg_entity: sp.csr_matrix  # (N, N) mean over incident edges
    msg_relation: sp.csr_matrix  # (N, R)
    msg_time: sp.csr_matrix  # (N, T)
    nbr_relation: sp.csr_matrix  # (N, R) mean over distinct incident relations
    nbr_time: sp.csr_matrix  # (N, T) mean over distinct incident timestamps

    @property
    def num_entities(self):
        return self.num_source + self.num_target

    @classmethod
    def build(cls, kg_s, kg_t):
        ns, nt = kg_s.num_entities, kg_t.num_entities
        rs = kg_s.num_relations
        T = max(kg_s.num_times, kg_t.num_times)
        q = np.vstack([kg_s.quads, kg_t.quads + np.array([ns, rs, ns, 0, 0])]) \
            if len(kg_t.quads) else kg_s.quads.copy()
        if not len(q):
            q = np.zeros((0, 5), dtype=np.int64)
        N, R = ns + nt, rs + kg_t.num_relations
        h, r, t, tb, te = q.T
        # every quadruple sends a message both ways
        dst = np.concatenate([t, h])
        src = np.concatenate([h, t])
        rel = np.concatenate([r, r])
        tb2, te2 = np.concatenate([tb, tb]), np.concatenate([te, te])
        m = len(dst)
        ones = np.ones(m)
        deg = np.bincount(dst, minlength=N).astype(np.float64)
        inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
        w = inv[dst]
        msg_entity = sp.csr_matrix((w, (dst, src)), shape=(N, N))
        msg_relation = sp.csr_matrix((w, (dst, rel)), shape=(N, R))
        msg_time = sp.csr_matrix((np.concatenate([w / 2, w / 2]),
                                  (np.concatenate([dst, dst]), np.concatenate([tb2, te2]))),
                                 shape=(N, T))
        nbr_relation = sp.csr_matrix((ones, (dst, rel)), shape=(N, R))
        nbr_time = sp.csr_matrix((np.ones(2 * m), (np.concatenate([dst, dst]),
                                                   np.concatenate([tb2, te2]))), shape=(N, T))
        # distinct neighbours only: collapse multiplicities to 1
        for mat in (nbr_relation, nbr_time):
            mat.sum_duplicates()
            mat.data[:] = 1.0
        for mat in (msg_entity, msg_relation, msg_time):
            mat.sum_duplicates()
        return cls(ns, nt, rs, R, T, msg_entity, msg_relation, msg_time,
                   _row_normalize(nbr_relation), _row_normalize(nbr_time))


def glorot(rng, rows, cols):
    bound = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-bound, bound, size=(rows, cols))


def init_params(kg_s, kg_t, config=TrainingConfig()):
    """Glorot-uniform tables, deterministic for a fixed ``config.rng_seed``."""
    if config.dim <= 0 or config.rel_dim <= 0:
        raise ArgumentError("embedding widths must be positive")
    rng = np.random.default_rng(config.rng_seed)
    N = kg_s.num_entities + kg_t.num_entities
    R = kg_s.num_relations + kg_t.num_relations
    T = max(kg_s.num_times, kg_t.num_times)
    D, Dr = config.dim, config.rel_dim
    return ModelParams(
        entity=glorot(rng, N, D),
        relation=glorot(rng, max(R, 1), Dr)[:R],
        time=glorot(rng, max(T, 1), Dr)[:T],
        edge_proj=glorot(rng, D, Dr),
        layer_weights=[glorot(rng, D, D) for _ in range(config.layers)],
    )


@dataclass
class _Forward:
    states: list  # h^0 .. h^L
    pre: list  # X_l = M h^{l-1} + c, one per layer
    act: list  # tanh(X_l W_l^T)
    edge_msg: np.ndarray  # B = M_rel Rel + M_time Tm
    c: np.ndarray
    slab: np.ndarray
    output: np.ndarray


def _forward(params, graph, layers=None):
    L = len(params.layer_weights) if layers is None else layers
    B = graph.msg_relation @ params.relation + graph.msg_time @ params.time
    c = B @ params.edge_proj.T
    h = params.entity
    states, pre, act = [h], [], []
    for W in params.layer_weights[:L]:
        X = graph.msg_entity @ h + c
        a = np.tanh(X @ W.T)
        h = a + h
        pre.append(X)
        act.append(a)
        states.append(h)
    slab = graph.nbr_relation @ params.relation + graph.nbr_time @ params.time
    return _Forward(states, pre, act, B, c, slab, np.hstack(states + [slab]))


def message_pass(params, graph, layer):
    """Entity states ``h^(layer)`` after ``layer`` rounds of message passing."""
    if layer < 0 or layer > len(params.layer_weights):
        raise ArgumentError(f"layer must be in 0..{len(params.layer_weights)}")
    return _forward(params, graph, layer).states[layer]


@dataclass
class RelationalFeature:
    matrix: np.ndarray
    num_source: int
    loss_history: list = field(default_factory=list)
    params: ModelParams = None

    @property
    def source(self):
        return self.matrix[: self.num_source]

    @property
    def target(self):
        return self.matrix[self.num_source:]


def triple_aspect_embed(params, graph):
    return RelationalFeature(_forward(params, graph).output, graph.num_source)


def zscore(values, eps=Z_EPS):
    """``(x - mean) / max(std, eps)`` with the population standard deviation."""
    x = np.asarray(values, dtype=np.float64)
    sd = x.std(axis=-1, keepdims=True)
    return (x - x.mean(axis=-1, keepdims=True)) / np.maximum(sd, eps)


def z_loss(sim_row, positive_index, margin):
    """Z-scored margins ``margin - sim[pos] + sim[j]`` over every ``j != pos``."""
    sim_row = np.asarray(sim_row, dtype=np.float64)
    if sim_row.ndim != 1 or len(sim_row) < 2:
        raise ArgumentError("similarity row needs at least two candidates")
    neg = np.delete(sim_row, positive_index)
    return zscore(margin - sim_row[positive_index] + neg)


def lse(x):
    x = np.asarray(x, dtype=np.float64)
    m = x.max(axis=-1, keepdims=True)
    return (m + np.log(np.exp(x - m).sum(axis=-1, keepdims=True))).squeeze(-1)


def lse_loss(z_values, scale):
    """``LSE(scale * z)`` summed over the leading axis (one entry per direction)."""
    z = np.asarray(z_values, dtype=np.float64)
    if z.ndim == 1:
        return float(lse(scale * z))
    return float(np.sum(lse(scale * z)))


def sample_negatives(rng, positives, pool_size, k):
    """``k`` negatives per positive, uniform over ``range(pool_size)`` minus the positive.

    When the pool has at most ``k`` other members, all of them are used in
    index order and ``rng`` is not consumed.
    """
    positives = np.asarray(positives, dtype=np.int64)
    if pool_size - 1 <= k:
        grid = np.broadcast_to(np.arange(pool_size - 1), (len(positives), pool_size - 1))
        return grid + (grid >= positives[:, None])
    draw = rng.integers(0, pool_size - 1, size=(len(positives), k))
    return draw + (draw >= positives[:, None])


@dataclass
class LossStats:
    """Z-score statistics of one batch, held fixed for differentiation."""

    mean: np.ndarray
    std: np.ndarray


def _directional(H, anchors, positives, negatives, margin, scale, stats=None):
    """Loss terms for anchors ranked against ``positives`` and sampled ``negatives``.

    Returns the per-anchor loss, the gradient w.r.t. positive similarities
    (shape ``(n,)``), w.r.t. negative similarities (``(n, k)``) and the stats.
    """
    Ha = H[anchors]
    s_pos = np.einsum("ij,ij->i", Ha, H[positives])
    s_neg = np.einsum("ij,ikj->ik", Ha, H[negatives])
    m = margin - s_pos[:, None] + s_neg
    if stats is None:
        stats = LossStats(m.mean(axis=1, keepdims=True),
                          np.maximum(m.std(axis=1, keepdims=True), Z_EPS))
    z = (m - stats.mean) / stats.std
    x = scale * z
    xmax = x.max(axis=1, keepdims=True)
    e = np.exp(x - xmax)
    tot = e.sum(axis=1, keepdims=True)
    loss = (xmax + np.log(tot)).ravel()
    p = e / tot
    g_neg = scale * p / stats.std
    g_pos = -g_neg.sum(axis=1)
    return loss, g_pos, g_neg, stats


@dataclass
class Batch:
    """Seed pairs (union ids) with their sampled negatives for both directions."""

    src: np.ndarray
    tgt: np.ndarray
    neg_t: np.ndarray  # target-side negatives for each source anchor
    neg_s: np.ndarray  # source-side negatives for each target anchor


def make_batch(graph, seeds, rng, k):
    pairs = np.asarray(getattr(seeds, "pairs", seeds), dtype=np.int64).reshape(-1, 2)
    ns = graph.num_source
    neg_t = sample_negatives(rng, pairs[:, 1], graph.num_target, k) + ns
    neg_s = sample_negatives(rng, pairs[:, 0], ns, k)
    return Batch(pairs[:, 0], pairs[:, 1] + ns, neg_t, neg_s)


def batch_loss(params, graph, batch, config, stats=None):
    """Mean loss over the batch; ``stats`` freezes the z-score statistics."""
    H = _forward(params, graph).output
    l1, *_, st1 = _directional(H, batch.src, batch.tgt, batch.neg_t, config.margin,
                               config.lse_scale, None if stats is None else stats[0])
    l2, *_, st2 = _directional(H, batch.tgt, batch.src, batch.neg_s, config.margin,
                               config.lse_scale, None if stats is None else stats[1])
    return float(np.mean(l1 + l2)), (st1, st2)


def _scatter_rows(index, values, n_rows):
    """Row-wise ``np.add.at`` via a sparse selection matrix (much faster)."""
    S = sp.csr_matrix((np.ones(len(index)), (index, np.arange(len(index)))),
                      shape=(n_rows, len(index)))
    return S @ values


def loss_and_grad(params, graph, batch, config):
    """Batch loss and its gradient with respect to every parameter table."""
    fw = _forward(params, graph)
    H = fw.output
    n = len(batch.src)
    dH = np.zeros_like(H)
    total = 0.0
    for anchors, positives, negatives in ((batch.src, batch.tgt, batch.neg_t),
                                          (batch.tgt, batch.src, batch.neg_s)):
        loss, g_pos, g_neg, _ = _directional(H, anchors, positives, negatives,
                                             config.margin, config.lse_scale)
        total += loss.sum()
        g_pos, g_neg = g_pos / n, g_neg / n
        Ha = H[anchors]
        dH += _scatter_rows(anchors, g_pos[:, None] * H[positives]
                            + np.einsum("ik,ikj->ij", g_neg, H[negatives]), H.shape[0])
        dH += _scatter_rows(positives, g_pos[:, None] * Ha, H.shape[0])
        # each negative row receives g_neg * anchor; route through a sparse weight matrix
        k = negatives.shape[1]
        W = sp.csr_matrix((g_neg.ravel(), (negatives.ravel(), np.repeat(np.arange(len(anchors)), k))),
                          shape=(H.shape[0], len(anchors)))
        dH += W @ Ha
    return total / n, _backward(params, graph, fw, dH)


def _backward(params, graph, fw, dH):
    D = params.dim
    L = len(params.layer_weights)
    grads = params.zeros_like()
    dslab = dH[:, D * (L + 1):]
    grads.relation += graph.nbr_relation.T @ dslab
    grads.time += graph.nbr_time.T @ dslab
    dc = np.zeros_like(fw.c)
    carry = np.zeros((dH.shape[0], D))
    for l in range(L, 0, -1):
        G = dH[:, D * l:D * (l + 1)] + carry
        W = params.layer_weights[l - 1]
        dA = G * (1.0 - fw.act[l - 1] ** 2)
        grads.layer_weights[l - 1] += dA.T @ fw.pre[l - 1]
        dX = dA @ W
        dc += dX
        carry = G + graph.msg_entity.T @ dX
    grads.entity += dH[:, :D] + carry
    grads.edge_proj += dc.T @ fw.edge_msg
    dB = dc @ params.edge_proj
    grads.relation += graph.msg_relation.T @ dB
    grads.time += graph.msg_time.T @ dB
    return grads


class SGD:
    def __init__(self, lr):
        self.lr = lr

    def step(self, params, grads):
        for p, g in zip(params.arrays(), grads.arrays()):
            p -= self.lr * g


class Adam:
    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = self.v = None

    def step(self, params, grads):
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params.arrays()]
            self.v = [np.zeros_like(p) for p in params.arrays()]
        self.t += 1
        for p, g, m, v in zip(params.arrays(), grads.arrays(), self.m, self.v):
            m *= self.b1
            m += (1 - self.b1) * g
            v *= self.b2
            v += (1 - self.b2) * g * g
            mhat = m / (1 - self.b1 ** self.t)
            vhat = v / (1 - self.b2 ** self.t)
            p -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


OPTIMIZERS = {"sgd": SGD, "adam": Adam}


def train(kg_s, kg_t, seeds, config=TrainingConfig(), params=None, graph=None):
    """Fit the encoder on ``seeds`` and return the final relational features.

    ``params`` overrides the Glorot initialization (used for equivariance
    checks); ``graph`` can be passed to reuse a prebuilt :class:`UnionGraph`.
    """
    if not len(seeds):
        raise ArgumentError("relational training needs at least one seed pair; "
                            "generate pseudo-seeds first in unsupervised mode")
    graph = graph or UnionGraph.build(kg_s, kg_t)
    pairs = np.asarray(getattr(seeds, "pairs", seeds), dtype=np.int64).reshape(-1, 2)
    if (pairs[:, 0] >= graph.num_source).any() or (pairs[:, 1] >= graph.num_target).any():
        raise ArgumentError("seed pair outside the graphs")
    params = init_params(kg_s, kg_t, config) if params is None else params.copy()
    opt = OPTIMIZERS[config.optimizer](config.learning_rate)
    rng = np.random.default_rng([config.rng_seed, 1])
    history = []
    for epoch in range(config.epochs):
        batch = make_batch(graph, pairs, rng, config.negatives_per_pair)
        loss, grads = loss_and_grad(params, graph, batch, config)
        opt.step(params, grads)
        history.append(loss)
        if not np.isfinite(loss):
            raise FloatingPointError(f"non-finite loss at epoch {epoch}")
        if epoch % 10 == 0 or epoch == config.epochs - 1:
            log.debug("epoch %d loss %.5f", epoch, loss)
    feat = triple_aspect_embed(params, graph)
    feat.loss_history = history
    feat.params = params
    return feat


CHECKPOINT_MAGIC = b"TKGA"
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<4sIIIIIIIII")


def save_checkpoint(path, params, graph):
    """Binary header then little-endian float32 tables in declaration order."""
    header = _HEADER.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, params.dim, params.rel_dim,
                          len(params.layer_weights), graph.num_source, graph.num_target,
                          graph.num_source_relations, graph.num_relations - graph.num_source_relations,
                          graph.num_times)
    with open(path, "wb") as fh:
        fh.write(header)
        for a in params.arrays():
            fh.write(np.ascontiguousarray(a, dtype="<f4").tobytes())


def load_checkpoint(path):
    """Return ``(params, header_dict)`` from a file written by :func:`save_checkpoint`."""
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, version, D, Dr, L, ns, nt, rs, rt, T = _HEADER.unpack_from(raw)
    if magic != CHECKPOINT_MAGIC or version != CHECKPOINT_VERSION:
        raise ArgumentError(f"{path}: not a version-{CHECKPOINT_VERSION} checkpoint")
    shapes = [(ns + nt, D), (rs + rt, Dr), (T, Dr), (D, Dr)] + [(D, D)] * L
    off = _HEADER.size
    tables = []
    for shape in shapes:
        count = shape[0] * shape[1]
        tables.append(np.frombuffer(raw, dtype="<f4", count=count, offset=off)
                      .reshape(shape).astype(np.float64))
        off += 4 * count
    header = dict(dim=D, rel_dim=Dr, layers=L, num_source=ns, num_target=nt,
                  num_source_relations=rs, num_target_relations=rt, num_times=T)
    return ModelParams(*tables[:4], tables[4:]), header
