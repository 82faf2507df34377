"""Learning-free temporal features.

Each entity gets a row of timestamp co-occurrence counts, split into a head
block (quadruples where it is the subject) and a tail block (where it is the
object). Each block is softmax-normalized over the whole timestamp
vocabulary, then propagated along a frequency-weighted relational adjacency
for ``L`` hops and the hop results are concatenated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ArgumentError

DEFAULT_LAYERS = 2


def _csr(rows, cols, vals, shape):
    m = sp.csr_matrix((vals, (rows, cols)), shape=shape, dtype=np.float64)
    m.sum_duplicates()
    m.eliminate_zeros()
    m.sort_indices()
    return m


def build_time_counts(kg):
    """Count distinct quadruples per (entity, timestamp), head block then tail block.

    Returns a CSR matrix of shape ``(|E|, 2|T|)``. A quadruple with
    ``t_begin != t_end`` adds one to both columns; an event quadruple adds one.
    """
    q = kg.quads
    T = kg.num_times
    same = q[:, 3] == q[:, 4]
    rows, cols = [], []
    for ent_col, offset in ((0, 0), (2, T)):
        rows += [q[:, ent_col], q[~same, ent_col]]
        cols += [q[:, 3] + offset, q[~same, 4] + offset]
    rows = np.concatenate(rows) if rows else np.zeros(0, np.int64)
    cols = np.concatenate(cols) if cols else np.zeros(0, np.int64)
    return _csr(rows, cols, np.ones(len(rows)), (kg.num_entities, 2 * T))


def _block_softmax(block):
    shifted = block - block.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_blocks(counts, *, sparse_softmax=False):
    """Per-row softmax within the head block and within the tail block.

    The default normalizes over every timestamp, zero counts included, so an
    entity with no quadruples in a block gets the uniform row ``1/|T|``. With
    ``sparse_softmax`` only stored counts take part and a CSR matrix is
    returned; empty block rows then stay all-zero.
    """
    n, width = counts.shape
    if width == 0 or width % 2:
        raise ArgumentError("timestamp vocabulary must be non-empty (got %d columns)" % width)
    T = width // 2
    if sparse_softmax:
        return _sparse_block_softmax(counts.tocsr(), T)
    dense = counts.toarray() if sp.issparse(counts) else np.asarray(counts, dtype=np.float64)
    out = np.empty_like(dense)
    out[:, :T] = _block_softmax(dense[:, :T])
    out[:, T:] = _block_softmax(dense[:, T:])
    return out


def _sparse_block_softmax(counts, T):
    coo = counts.tocoo()
    block = (coo.col >= T).astype(np.int64)
    key = coo.row * 2 + block
    gmax = np.full(counts.shape[0] * 2, -np.inf)
    np.maximum.at(gmax, key, coo.data)
    vals = np.exp(coo.data - gmax[key])
    gsum = np.bincount(key, weights=vals, minlength=counts.shape[0] * 2)
    return _csr(coo.row, coo.col, vals / gsum[key], counts.shape)


def build_relational_adjacency(kg):
    """Head-to-tail adjacency weighted by relation rarity, row-normalized.

    Each relation ``r`` contributes ``ln(|Q| / |Q_r|)`` to the edge between
    its head and tail; parallel relations add up. Rows of entities with no
    outgoing quadruple stay zero.
    """
    n = kg.num_entities
    q = kg.quads
    if not len(q):
        return sp.csr_matrix((n, n), dtype=np.float64)
    # R_ij is a set: repeated (h, r, t) at different times count once
    hrt = np.unique(q[:, :3], axis=0)
    freq = np.bincount(q[:, 1], minlength=kg.num_relations).astype(np.float64)
    w = np.log(len(q) / freq[hrt[:, 1]])
    m = _csr(hrt[:, 0], hrt[:, 2], w, (n, n))
    sums = np.asarray(m.sum(axis=1)).ravel()
    # ln(|Q|/|Q_r|) vanishes when one relation covers every quadruple; such
    # rows fall back to uniform weights over their neighbours
    flat = np.flatnonzero(sums == 0)
    if len(flat):
        mask = np.isin(hrt[:, 0], flat)
        w = np.where(mask, 1.0, w)
        m = _csr(hrt[:, 0], hrt[:, 2], w, (n, n))
        sums = np.asarray(m.sum(axis=1)).ravel()
    inv = np.divide(1.0, sums, out=np.zeros_like(sums), where=sums > 0)
    out = sp.diags(inv) @ m
    out = out.tocsr()
    out.eliminate_zeros()
    out.sort_indices()
    return out


@dataclass(frozen=True)
class TemporalFeature:
    """Aggregated temporal feature ``[At | A At | ... | A^L At]``."""

    matrix: np.ndarray
    layer_count: int
    num_times: int

    @property
    def slab_width(self):
        return 2 * self.num_times

    def slab(self, layer):
        w = self.slab_width
        return self.matrix[:, layer * w:(layer + 1) * w]


def aggregate_temporal(A, At, L=DEFAULT_LAYERS):
    if L < 0:
        raise ArgumentError(f"layer count must be >= 0, got {L}")
    if A.shape[0] != A.shape[1] or A.shape[1] != At.shape[0]:
        raise ArgumentError(f"shape mismatch: A {A.shape}, At {At.shape}")
    cur = At.toarray() if sp.issparse(At) else np.asarray(At, dtype=np.float64)
    slabs = [cur]
    A = sp.csr_matrix(A)
    for _ in range(L):
        cur = np.asarray(A @ cur)
        slabs.append(cur)
    return TemporalFeature(np.hstack(slabs), L, At.shape[1] // 2)


@dataclass(frozen=True)
class TemporalEncoding:
    counts: sp.csr_matrix
    At: np.ndarray
    A: sp.csr_matrix
    feature: TemporalFeature


def encode_temporal(kg, L=DEFAULT_LAYERS, *, sparse_softmax=False):
    """Run the whole temporal encoder on one graph."""
    counts = build_time_counts(kg)
    At = softmax_blocks(counts, sparse_softmax=sparse_softmax)
    A = build_relational_adjacency(kg)
    return TemporalEncoding(counts, At, A, aggregate_temporal(A, At, L))


def dump_features(path, matrix, precision=6):
    """Write rows as ``entity_id`` followed by tab-separated ``col:val`` pairs (nonzeros only)."""
    m = sp.csr_matrix(matrix)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i in range(m.shape[0]):
            lo, hi = m.indptr[i], m.indptr[i + 1]
            cells = [f"{j}:{v:.{precision}f}" for j, v in zip(m.indices[lo:hi], m.data[lo:hi])]
            fh.write("\t".join([str(i)] + cells) + "\n")
