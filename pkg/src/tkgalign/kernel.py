"""Weisfeiler-Lehman subtree kernel between the two graphs' structures.

Weighted matrices are binarized (an edge wherever the weight is positive)
and nodes refine their label with the sorted multiset of out-neighbour
labels. Both graphs of a comparison share one compression table so that
equal signatures receive equal label ids.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateGraphError

DEFAULT_WL_ROUNDS = 8


@dataclass
class LabeledGraph:
    """Directed graph with per-round node labels.

    ``labels[0]`` holds the initial labels (any hashables); each refinement
    round appends one list of integer label ids.
    """

    node_count: int
    edges: np.ndarray
    labels: list

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if len(self.labels) == 0 or len(self.labels[0]) != self.node_count:
            raise ValueError("initial labels must cover every node")

    def out_neighbours(self):
        nbrs = [[] for _ in range(self.node_count)]
        for i, j in self.edges:
            nbrs[i].append(j)
        return nbrs

    @property
    def rounds(self):
        return len(self.labels) - 1


def _binary_edges(m):
    m = sp.coo_matrix(m)
    keep = m.data > 0
    pairs = np.unique(np.column_stack([m.row[keep], m.col[keep]]), axis=0)
    return pairs.reshape(-1, 2)


def relational_graph(A):
    """Directed graph of a square adjacency; initial label = out-degree."""
    edges = _binary_edges(A)
    deg = np.bincount(edges[:, 0], minlength=A.shape[0])
    return LabeledGraph(A.shape[0], edges, [[int(d) for d in deg]])


def temporal_graph(M):
    """Bipartite entity -> timestamp-column graph of an ``(|E|, 2|T|)`` matrix.

    Head- and tail-block columns are distinct nodes. Entities start as
    ``("E", out_degree)`` and columns as ``("T", in_degree)``.
    """
    n, w = M.shape
    pairs = _binary_edges(M)
    edges = np.column_stack([pairs[:, 0], pairs[:, 1] + n]) if len(pairs) else pairs
    out_deg = np.bincount(pairs[:, 0], minlength=n) if len(pairs) else np.zeros(n, int)
    in_deg = np.bincount(pairs[:, 1], minlength=w) if len(pairs) else np.zeros(w, int)
    labels = [("E", int(d)) for d in out_deg] + [("T", int(d)) for d in in_deg]
    return LabeledGraph(n + w, edges, [labels])


def wl_relabel(g, h, table=None):
    """Run ``h`` WL refinement rounds in place and return ``g``.

    ``table`` maps signatures to compressed ids; pass the same dict for both
    graphs of a comparison. Round-0 labels are compressed through it too.
    """
    if table is None:
        table = {}

    def compress(key):
        if key not in table:
            table[key] = len(table)
        return table[key]

    g.labels = [[compress(("init", lab)) for lab in g.labels[0]]]
    nbrs = g.out_neighbours()
    for _ in range(h):
        prev = g.labels[-1]
        g.labels.append([
            compress((prev[v], tuple(sorted(prev[u] for u in nbrs[v]))))
            for v in range(g.node_count)
        ])
    return g


def _histograms(g):
    return [Counter(round_labels) for round_labels in g.labels]


def _dot(c1, c2):
    if len(c2) < len(c1):
        c1, c2 = c2, c1
    return sum(v * c2.get(k, 0) for k, v in c1.items())


def round_inner_products(g1, g2):
    """``<phi(G1^(k)), phi(G2^(k))>`` for each round of two jointly relabeled graphs."""
    return [_dot(a, b) for a, b in zip(_histograms(g1), _histograms(g2))]


def wl_kernel(g1, g2, h=DEFAULT_WL_ROUNDS):
    """Unnormalized WL subtree kernel: the inner products summed over rounds ``0..h``."""
    table = {}
    g1 = wl_relabel(LabeledGraph(g1.node_count, g1.edges, [g1.labels[0]]), h, table)
    g2 = wl_relabel(LabeledGraph(g2.node_count, g2.edges, [g2.labels[0]]), h, table)
    return float(sum(round_inner_products(g1, g2)))


def normalized_kernel(g1, g2, h=DEFAULT_WL_ROUNDS):
    k11 = wl_kernel(g1, g1, h)
    k22 = wl_kernel(g2, g2, h)
    if k11 <= 0 or k22 <= 0:
        raise DegenerateGraphError("graph with zero self-kernel (no nodes)")
    return wl_kernel(g1, g2, h) / math.sqrt(k11 * k22)


def structure_weights(A_s, A_t, C_s, C_t, h=DEFAULT_WL_ROUNDS):
    """Return ``(k_r, k_t)``, the normalized WL kernels of the relational
    adjacencies and of the entity-timestamp incidence structures.

    ``C_s`` / ``C_t`` are the timestamp count matrices; their nonzero pattern
    defines the bipartite temporal graphs.
    """
    g_s, g_t = relational_graph(A_s), relational_graph(A_t)
    if len(g_s.edges) == 0 or len(g_t.edges) == 0:
        raise DegenerateGraphError("relational graph without edges")
    k_r = normalized_kernel(g_s, g_t, h)
    k_t = normalized_kernel(temporal_graph(C_s), temporal_graph(C_t), h)
    return k_r, k_t
