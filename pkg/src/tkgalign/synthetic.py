"""Synthetic TKG pairs with a known ground-truth entity mapping."""

from __future__ import annotations

import numpy as np

from .errors import ArgumentError
from .kg import DatasetBundle, SeedSet, TemporalKG


def _random_quads(rng, entities, relations, timestamps, per_entity, interval_rate):
    heads = np.repeat(np.arange(entities), per_entity)
    n = len(heads)
    tails = rng.integers(0, max(entities - 1, 1), size=n)
    if entities > 1:
        tails = tails + (tails >= heads)  # no self loops
    rels = rng.integers(0, relations, size=n)
    tb = rng.integers(0, timestamps, size=n)
    span = rng.integers(1, 4, size=n) * (rng.random(n) < interval_rate)
    te = np.minimum(tb + span, timestamps - 1)
    return np.unique(np.column_stack([heads, rels, tails, tb, te]), axis=0)


def _corrupt(rng, quads, fraction, entities, relations, timestamps):
    q = quads.copy()
    k = int(round(fraction * len(q)))
    if k == 0:
        return q
    idx = rng.choice(len(q), size=k, replace=False)
    which = rng.integers(0, 3, size=k)
    for i, w in zip(idx, which):
        if w == 0:
            q[i, 2] = rng.integers(0, entities)
        elif w == 1:
            q[i, 1] = rng.integers(0, relations)
        else:
            t = rng.integers(0, timestamps)
            q[i, 4] = t + (q[i, 4] - q[i, 3]) if t + (q[i, 4] - q[i, 3]) < timestamps else t
            q[i, 3] = t
    return q


def generate_synthetic(entities, relations, timestamps, overlap=1.0, noise=0.0, rng_seed=0,
                       quads_per_entity=4, interval_rate=0.2):
    """Build a source graph and a shuffled, optionally corrupted, copy.

    A pool of quadruples (``quads_per_entity`` outgoing ones per entity) is
    split into a shared part and two equally sized exclusive parts so that
    ``2 |Q_s & Q_t| / (|Q_s| + |Q_t|) ~= overlap``. A ``noise`` fraction of the
    target's quadruples then has one field (tail, relation or time)
    resampled, and target entity ids are randomly permuted. ``test_pairs``
    carries the full ground truth; ``train_seeds`` is empty.
    """
    if min(entities, relations, timestamps) < 1:
        raise ArgumentError("entities, relations and timestamps must be >= 1")
    if not (0.0 <= overlap <= 1.0) or not (0.0 <= noise <= 1.0):
        raise ArgumentError("overlap and noise must lie in [0, 1]")
    if overlap == 0.0:
        raise ArgumentError("overlap must be > 0 for the graphs to share anything")
    rng = np.random.default_rng(rng_seed)
    pool = _random_quads(rng, entities, relations, timestamps, quads_per_entity, interval_rate)
    pool = pool[rng.permutation(len(pool))]
    n_shared = int(round(overlap * len(pool) / (2.0 - overlap)))
    n_excl = (len(pool) - n_shared) // 2
    shared = pool[:n_shared]
    src_q = np.vstack([shared, pool[n_shared:n_shared + n_excl]])
    tgt_q = np.vstack([shared, pool[n_shared + n_excl:n_shared + 2 * n_excl]])
    tgt_q = _corrupt(rng, tgt_q, noise, entities, relations, timestamps)

    perm = rng.permutation(entities)
    source = TemporalKG(entities, relations, timestamps, src_q)
    target = TemporalKG(entities, relations, timestamps, tgt_q).relabel_entities(perm)
    truth = SeedSet(np.column_stack([np.arange(entities), perm]))
    return DatasetBundle(source, target, SeedSet.empty(), truth)


def shared_quadruple_ratio(bundle):
    """``2 |Q_s & Q_t| / (|Q_s| + |Q_t|)`` after mapping target ids back through the truth."""
    inv = np.empty(bundle.target.num_entities, dtype=np.int64)
    inv[bundle.test_pairs.target] = bundle.test_pairs.source
    back = bundle.target.relabel_entities(inv)
    s = {tuple(r) for r in bundle.source.quads.tolist()}
    t = {tuple(r) for r in back.quads.tolist()}
    return 2.0 * len(s & t) / (len(s) + len(t))
