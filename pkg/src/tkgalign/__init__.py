"""Entity alignment between two temporal knowledge graphs.

A learning-free temporal encoder and a trainable relational encoder produce
entity features; a decoder fuses their similarities, Sinkhorn-normalizes
them and picks the fusion weight by a graph-matching residual.
"""

from .decoder import AlignmentMatrix, DecoderConfig, alpha_search, gm_distance, sinkhorn
from .errors import (AlignError, ArgumentError, DegenerateGraphError, IngestError, ParseError,
                     ValidationError)
from .evaluate import EvalReport, evaluate, hits_at_n, mrr
from .kg import DatasetBundle, SeedOrigin, SeedSet, TemporalKG, load_dataset, validate
from .pipeline import Mode, RunConfig, StageError, align_bundle, run_align
from .relational import TrainingConfig
from .synthetic import generate_synthetic

__version__ = "0.1.0"

__all__ = [
    "AlignError", "AlignmentMatrix", "ArgumentError", "DatasetBundle", "DecoderConfig",
    "DegenerateGraphError", "EvalReport", "IngestError", "Mode", "ParseError", "RunConfig",
    "SeedOrigin", "SeedSet", "StageError", "TemporalKG", "TrainingConfig", "ValidationError",
    "align_bundle", "alpha_search", "evaluate", "generate_synthetic", "gm_distance", "hits_at_n",
    "load_dataset", "mrr", "run_align", "sinkhorn", "validate",
]
