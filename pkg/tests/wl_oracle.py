"""Explicit feature-vector WL kernel used as an independent oracle.

Labels are never compressed: a round-k label is the nested tuple
(own previous label, sorted previous labels of out-neighbours), so equal
labels mean equal unfolded subtrees by construction.
"""

import math
from collections import Counter


def nested_labels(n, edges, initial, h):
    nbrs = [[] for _ in range(n)]
    for i, j in edges:
        nbrs[int(i)].append(int(j))
    rounds = [list(initial)]
    for _ in range(h):
        prev = rounds[-1]
        rounds.append([(prev[v], tuple(sorted(prev[u] for u in nbrs[v]))) for v in range(n)])
    return rounds


def phi(n, edges, initial, h):
    """One Counter per round; the concatenation is the explicit feature vector."""
    return [Counter(r) for r in nested_labels(n, edges, initial, h)]


def kernel(phi1, phi2):
    return sum(sum(c * b.get(lab, 0) for lab, c in a.items()) for a, b in zip(phi1, phi2))


def normalized(phi1, phi2):
    return kernel(phi1, phi2) / math.sqrt(kernel(phi1, phi1) * kernel(phi2, phi2))
