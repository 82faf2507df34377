"""Seed-free training pairs from temporal features alone.

Both alignment directions are Sinkhorn-normalized separately; a pair is kept
only when each side is the other's strict best match.
"""

from __future__ import annotations

import numpy as np

from .decoder import AlignmentMatrix, DecoderConfig, pad_unbalanced, sinkhorn
from .kg import SeedOrigin, SeedSet


def bidirectional_scores(Ht_s, Ht_t, config=DecoderConfig()):
    Hs = np.asarray(getattr(Ht_s, "matrix", Ht_s), dtype=np.float64)
    Ht = np.asarray(getattr(Ht_t, "matrix", Ht_t), dtype=np.float64)
    k, tau = config.sinkhorn_steps, config.sinkhorn_temperature
    forward = sinkhorn(pad_unbalanced(Hs @ Ht.T), k, tau)
    backward = sinkhorn(pad_unbalanced(Ht @ Hs.T), k, tau)
    return forward, backward


def _strict_argmax(core):
    """Row argmax, or -1 where the maximum is attained more than once."""
    if core.shape[1] == 0:
        return np.full(core.shape[0], -1)
    best = np.argmax(core, axis=1)
    top = core[np.arange(core.shape[0]), best][:, None]
    unique = np.count_nonzero(core == top, axis=1) == 1
    return np.where(unique, best, -1)


def mutual_argmax_seeds(P_st, P_ts):
    fwd = _strict_argmax(AlignmentMatrix.wrap(P_st).core)
    bwd = _strict_argmax(AlignmentMatrix.wrap(P_ts).core)
    src = np.flatnonzero(fwd >= 0)
    tgt = fwd[src]
    keep = bwd[tgt] == src
    return SeedSet(np.column_stack([src[keep], tgt[keep]]), SeedOrigin.PSEUDO)


def generate_pseudo_seeds(Ht_s, Ht_t, config=DecoderConfig()):
    return mutual_argmax_seeds(*bidirectional_scores(Ht_s, Ht_t, config))
