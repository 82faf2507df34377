"""Hits@N and MRR over an alignment score matrix."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .decoder import AlignmentMatrix
from .errors import ArgumentError


def true_ranks(scores, truth):
    """1-based rank of each true target within its source row.

    Only original (unpadded) columns are ranked; ties go to the smaller
    column index, matching the top-1 decoder.
    """
    core = AlignmentMatrix.wrap(scores).core
    pairs = np.asarray(getattr(truth, "pairs", truth), dtype=np.int64).reshape(-1, 2)
    if len(pairs) and (pairs.min() < 0 or pairs[:, 0].max() >= core.shape[0]
                       or pairs[:, 1].max() >= core.shape[1]):
        raise ArgumentError("truth pair outside the score matrix")
    rows = core[pairs[:, 0]]
    true = rows[np.arange(len(pairs)), pairs[:, 1]][:, None]
    cols = np.arange(core.shape[1])[None, :]
    ahead = (rows > true) | ((rows == true) & (cols < pairs[:, 1:2]))
    return ahead.sum(axis=1) + 1


def hits_at_n(scores, truth, n):
    ranks = true_ranks(scores, truth)
    if not len(ranks):
        return 0.0
    return 100.0 * np.count_nonzero(ranks <= n) / len(ranks)


def mrr(scores, truth):
    ranks = true_ranks(scores, truth)
    return float(np.mean(1.0 / ranks)) if len(ranks) else 0.0


@dataclass
class EvalReport:
    hits_at: dict = field(default_factory=dict)
    mrr: float = 0.0
    evaluated_pairs: int = 0

    def items(self):
        out = [(f"hits@{n}", f"{v:.1f}") for n, v in sorted(self.hits_at.items())]
        out.append(("mrr", f"{self.mrr:.3f}"))
        out.append(("pairs", str(self.evaluated_pairs)))
        return out

    def line(self):
        return " ".join(f"{k}={v}" for k, v in self.items())

    def write(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for k, v in self.items():
                fh.write(f"{k}\t{v}\n")


def evaluate(scores, truth, ns=(1, 10)):
    ranks = true_ranks(scores, truth)
    n = len(ranks)
    hits = {k: (100.0 * np.count_nonzero(ranks <= k) / n if n else 0.0) for k in ns}
    return EvalReport(hits, float(np.mean(1.0 / ranks)) if n else 0.0, n)
