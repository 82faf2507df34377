"""Fusion of temporal and relational similarities and graph-matching decoding.

The fused score matrix ``alpha * Ht_s Ht_t^T + Hr_s Hr_t^T`` is padded to a
square, pushed towards a doubly stochastic matrix by Sinkhorn scaling and
scored by the weighted graph-matching residual. ``alpha`` is picked from a
grid by minimum residual and the winner is reduced to a top-1 assignment.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.special import logsumexp

from .errors import ArgumentError

log = logging.getLogger(__name__)

DEFAULT_ALPHA_GRID = (0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0)


@dataclass(frozen=True)
class DecoderConfig:
    alpha_grid: tuple = DEFAULT_ALPHA_GRID
    sinkhorn_steps: int = 10
    sinkhorn_temperature: float = 0.05
    wl_rounds: int = 8
    # score each candidate by its top-1 sparsification rather than the soft matrix
    score_sparsified: bool = True
    # cosine similarities instead of raw inner products (ignored in raw mode)
    unit_rows: bool = True
    # score the raw fused matrix, skipping padding, row scaling and Sinkhorn
    raw_distance_mode: bool = False

    def __post_init__(self):
        if not len(self.alpha_grid):
            raise ArgumentError("alpha grid must be non-empty")
        if self.sinkhorn_steps < 1:
            raise ArgumentError("sinkhorn_steps must be >= 1")
        if self.sinkhorn_temperature <= 0:
            raise ArgumentError("sinkhorn_temperature must be > 0")


@dataclass(frozen=True)
class AlignmentMatrix:
    """Score matrix plus the size of the original (unpadded) block.

    Rows index source entities and columns target entities; anything
    beyond ``source_rows`` / ``target_cols`` is padding.
    """

    scores: np.ndarray
    source_rows: int
    target_cols: int
    padded: bool = False

    @classmethod
    def wrap(cls, m):
        if isinstance(m, AlignmentMatrix):
            return m
        m = np.asarray(m, dtype=np.float64)
        return cls(m, m.shape[0], m.shape[1], False)

    @property
    def core(self):
        return self.scores[: self.source_rows, : self.target_cols]

    @property
    def shape(self):
        return self.scores.shape


def _matrix(x):
    return np.asarray(getattr(x, "matrix", x), dtype=np.float64)


def unit_rows(H):
    """Rows scaled to unit L2 norm; all-zero rows stay zero."""
    H = _matrix(H)
    norm = np.linalg.norm(H, axis=1, keepdims=True)
    return np.divide(H, norm, out=np.zeros_like(H), where=norm > 0)


def fuse(Ht_s, Ht_t, Hr_s, Hr_t, alpha, normalize=False):
    """``alpha * <Ht_s[i], Ht_t[j]> + <Hr_s[i], Hr_t[j]>`` for every pair.

    With ``normalize`` every row is first scaled to unit length, so both
    terms are cosine similarities and ``alpha`` weighs comparable scales.
    """
    Ht_s, Ht_t, Hr_s, Hr_t = map(unit_rows if normalize else _matrix, (Ht_s, Ht_t, Hr_s, Hr_t))
    if Ht_s.shape[1] != Ht_t.shape[1] or Hr_s.shape[1] != Hr_t.shape[1]:
        raise ArgumentError(
            f"feature widths differ: temporal {Ht_s.shape[1]} vs {Ht_t.shape[1]}, "
            f"relational {Hr_s.shape[1]} vs {Hr_t.shape[1]}")
    if Ht_s.shape[0] != Hr_s.shape[0] or Ht_t.shape[0] != Hr_t.shape[0]:
        raise ArgumentError("temporal and relational features cover different entity counts")
    return alpha * (Ht_s @ Ht_t.T) + Hr_s @ Hr_t.T


def pad_unbalanced(P):
    """Pad a rectangular score matrix to a square with its minimum value."""
    P = np.asarray(P, dtype=np.float64)
    ns, nt = P.shape
    if ns == nt:
        return AlignmentMatrix(P.copy(), ns, nt, False)
    n = max(ns, nt)
    fill = P.min() if P.size else 0.0
    out = np.full((n, n), fill)
    out[:ns, :nt] = P
    return AlignmentMatrix(out, ns, nt, True)


def sinkhorn(M, k=10, temperature=0.05):
    """``k`` alternating row / column normalizations of ``exp(M / temperature)``.

    Runs in the log domain, which is the max-shifted exponentiation carried
    through every step, so no row or column underflows to zero.
    """
    if temperature <= 0:
        raise ArgumentError(f"temperature must be > 0, got {temperature}")
    M = AlignmentMatrix.wrap(M)
    if M.scores.shape[0] != M.scores.shape[1]:
        raise ArgumentError(f"sinkhorn needs a square matrix, got {M.scores.shape}")
    if M.scores.size == 0:
        return M
    logS = M.scores / temperature
    logS = logS - logS.max()
    for _ in range(k):
        logS = logS - logsumexp(logS, axis=1, keepdims=True)
        logS = logS - logsumexp(logS, axis=0, keepdims=True)
    return replace(M, scores=np.exp(logS))


def _right_mul(P, A):
    """``P @ A`` for dense ``P`` and sparse or dense ``A``."""
    if sp.issparse(A):
        return np.asarray((A.T @ P.T).T)
    return P @ np.asarray(A)


def _left_mul(A, P):
    return np.asarray(A @ P)


def gm_distance(P_hat, A_s, A_t, At_s, At_t, k_r=1.0, k_t=1.0):
    """Weighted graph-matching residual of an alignment matrix.

    ``k_r * ||A_s P - P A_t||^2 + k_t * ||At_s - P At_t||^2`` (squared
    Frobenius norms), with padding rows and columns of ``P`` masked out.
    """
    P = AlignmentMatrix.wrap(P_hat).core
    ns, nt = P.shape
    if A_s.shape != (ns, ns) or A_t.shape != (nt, nt):
        raise ArgumentError(f"adjacency shapes {A_s.shape}, {A_t.shape} do not conform to P {P.shape}")
    if At_s.shape[0] != ns or At_t.shape[0] != nt or At_s.shape[1] != At_t.shape[1]:
        raise ArgumentError(f"temporal shapes {At_s.shape}, {At_t.shape} do not conform to P {P.shape}")
    rel = _left_mul(A_s, P) - _right_mul(P, A_t)
    At_s = At_s.toarray() if sp.issparse(At_s) else np.asarray(At_s)
    tmp = At_s - _right_mul(P, At_t)
    return float(k_r * np.sum(rel * rel) + k_t * np.sum(tmp * tmp))


@dataclass
class AlphaSearchResult:
    alpha: float
    matrix: AlignmentMatrix
    distance: float
    # (alpha, distance) for every grid point, in grid order
    trace: list = field(default_factory=list)
    # alpha -> decoded matrix, only filled when requested
    matrices: dict = field(default_factory=dict)


def decode(Ht_s, Ht_t, Hr_s, Hr_t, alpha, config):
    """Fuse at one ``alpha`` and normalize (or not, in raw-distance mode)."""
    if config.raw_distance_mode:
        return AlignmentMatrix.wrap(fuse(Ht_s, Ht_t, Hr_s, Hr_t, alpha))
    P = fuse(Ht_s, Ht_t, Hr_s, Hr_t, alpha, normalize=config.unit_rows)
    return sinkhorn(pad_unbalanced(P), config.sinkhorn_steps, config.sinkhorn_temperature)


def alpha_search(Ht_s, Ht_t, Hr_s, Hr_t, A_s, A_t, At_s, At_t, k_r=1.0, k_t=1.0,
                 config=DecoderConfig(), keep_matrices=False):
    """Pick the fusion weight with the smallest graph-matching residual.

    The returned matrix is the soft (Sinkhorn) one even when candidates are
    scored on their top-1 sparsification. Ties go to the earlier grid entry.
    """
    best = None
    result = AlphaSearchResult(alpha=float("nan"), matrix=None, distance=float("inf"))
    for alpha in config.alpha_grid:
        M = decode(Ht_s, Ht_t, Hr_s, Hr_t, alpha, config)
        scored = M if config.raw_distance_mode or not config.score_sparsified else sparsify_top1(M)
        d = gm_distance(scored, A_s, A_t, At_s, At_t, k_r, k_t)
        log.debug("alpha=%g D=%.6g", alpha, d)
        result.trace.append((float(alpha), d))
        if keep_matrices:
            result.matrices[float(alpha)] = M
        if best is None or d < best[1]:
            best = (float(alpha), d, M)
    result.alpha, result.distance, result.matrix = best
    return result


def top1_columns(P):
    """Column index of each original row's maximum over original columns (first on ties)."""
    core = AlignmentMatrix.wrap(P).core
    return np.argmax(core, axis=1) if core.shape[1] else np.zeros(core.shape[0], dtype=np.int64)


def sparsify_top1(P):
    P = AlignmentMatrix.wrap(P)
    out = np.zeros_like(P.scores)
    if P.target_cols:
        cols = top1_columns(P)
        out[np.arange(P.source_rows), cols] = 1.0
    return replace(P, scores=out)


def write_alignment(path, P):
    """One ``e_s<TAB>e_t<TAB>score`` line per source entity, sorted by source id."""
    P = AlignmentMatrix.wrap(P)
    cols = top1_columns(P)
    core = P.core
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, j in enumerate(cols):
            fh.write(f"{i}\t{int(j)}\t{core[i, j]:.6f}\n")
