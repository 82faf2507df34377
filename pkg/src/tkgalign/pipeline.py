"""End-to-end alignment: temporal encoding, optional pseudo-seeding,
relational training, fused decoding with alpha search, evaluation."""

from __future__ import annotations

import contextlib
import enum
import logging
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import decoder, kernel, pseudo, relational, temporal
from .errors import AlignError, DegenerateGraphError
from .evaluate import EvalReport, evaluate
from .kg import DatasetBundle, SeedSet, load_dataset, write_pairs

log = logging.getLogger(__name__)

THREADS_ENV = "TKGALIGN_THREADS"


class Mode(enum.Enum):
    SUPERVISED = "supervised"
    UNSUPERVISED = "unsupervised"


class StageError(AlignError):
    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")


@contextlib.contextmanager
def _stage(name):
    log.info("stage: %s", name)
    try:
        yield
    except StageError:
        raise
    except Exception as exc:  # noqa: BLE001 - every failure is reported with its stage
        raise StageError(name, exc) from exc


@dataclass(frozen=True)
class RunConfig:
    dataset_dir: str = ""
    mode: Mode = Mode.UNSUPERVISED
    out_dir: str = "out"
    temporal_layers: int = temporal.DEFAULT_LAYERS
    sparse_softmax: bool = False
    training: relational.TrainingConfig = field(default_factory=relational.TrainingConfig)
    decoding: decoder.DecoderConfig = field(default_factory=decoder.DecoderConfig)
    threads: int | None = None
    save_checkpoint: bool = False

    def __post_init__(self):
        if isinstance(self.mode, str):
            object.__setattr__(self, "mode", Mode(self.mode.lower()))
        if self.temporal_layers < 0:
            raise ValueError("temporal_layers must be >= 0")


@dataclass
class AlignmentResult:
    alpha: float
    distance: float
    scores: decoder.AlignmentMatrix
    alignment: decoder.AlignmentMatrix
    trace: list
    structure_weights: tuple
    seeds: SeedSet
    report: EvalReport | None = None
    relational: relational.RelationalFeature | None = None
    matrices: dict = field(default_factory=dict)
    temporal_source: temporal.TemporalEncoding | None = None
    temporal_target: temporal.TemporalEncoding | None = None


def encode_pair(bundle, layers=temporal.DEFAULT_LAYERS, sparse_softmax=False):
    enc_s = temporal.encode_temporal(bundle.source, layers, sparse_softmax=sparse_softmax)
    enc_t = temporal.encode_temporal(bundle.target, layers, sparse_softmax=sparse_softmax)
    return enc_s, enc_t


def safe_structure_weights(enc_s, enc_t, h):
    try:
        return kernel.structure_weights(enc_s.A, enc_t.A, enc_s.counts, enc_t.counts, h)
    except DegenerateGraphError as exc:
        log.warning("WL weights undefined (%s); using k_r = k_t = 1", exc)
        return 1.0, 1.0


def align_bundle(bundle: DatasetBundle, config: RunConfig = RunConfig(), keep_matrices=False):
    """Run the whole alignment pipeline on an in-memory dataset."""
    with _stage("temporal-encoder"):
        enc_s, enc_t = encode_pair(bundle, config.temporal_layers, config.sparse_softmax)

    if config.mode is Mode.UNSUPERVISED:
        with _stage("pseudo-seed"):
            seeds = pseudo.generate_pseudo_seeds(enc_s.feature, enc_t.feature, config.decoding)
            log.info("pseudo-seeds: %d pairs", len(seeds))
    else:
        seeds = bundle.train_seeds

    with _stage("relational-encoder"):
        feat = relational.train(bundle.source, bundle.target, seeds, config.training)

    with _stage("graph-kernel"):
        k_r, k_t = safe_structure_weights(enc_s, enc_t, config.decoding.wl_rounds)
        log.info("structure weights k_r=%.4f k_t=%.4f", k_r, k_t)

    with _stage("gm-decoder"):
        search = decoder.alpha_search(
            enc_s.feature, enc_t.feature, feat.source, feat.target,
            enc_s.A, enc_t.A, enc_s.At, enc_t.At, k_r, k_t, config.decoding,
            keep_matrices=keep_matrices)
        hard = decoder.sparsify_top1(search.matrix)
        log.info("alpha*=%g D=%.6g", search.alpha, search.distance)

    result = AlignmentResult(search.alpha, search.distance, search.matrix, hard, search.trace,
                             (k_r, k_t), seeds, relational=feat, matrices=search.matrices,
                             temporal_source=enc_s, temporal_target=enc_t)
    if len(bundle.test_pairs):
        with _stage("eval"):
            result.report = evaluate(search.matrix, bundle.test_pairs)
    return result


@contextlib.contextmanager
def thread_limit(threads):
    threads = threads or (int(os.environ[THREADS_ENV]) if os.environ.get(THREADS_ENV) else None)
    if not threads:
        yield
        return
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=threads):
        yield


def run_align(config: RunConfig):
    """Load, align and write artifacts into ``config.out_dir``.

    Writes ``alignment.tsv``, ``alpha_trace.tsv``, ``eval.tsv`` (when test
    pairs exist) and ``pseudo_seeds.tsv`` (unsupervised mode).
    """
    with thread_limit(config.threads):
        with _stage("load"):
            bundle = load_dataset(config.dataset_dir,
                                  read_sup_pairs=config.mode is Mode.SUPERVISED)
        result = align_bundle(bundle, config)
        with _stage("write"):
            out = Path(config.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            decoder.write_alignment(out / "alignment.tsv", result.scores)
            with open(out / "alpha_trace.tsv", "w", encoding="utf-8", newline="\n") as fh:
                for alpha, d in result.trace:
                    fh.write(f"{alpha:g}\t{d:.6f}\n")
            if config.mode is Mode.UNSUPERVISED:
                write_pairs(out / "pseudo_seeds.tsv", result.seeds)
            if result.report is not None:
                result.report.write(out / "eval.tsv")
            if config.save_checkpoint:
                graph = relational.UnionGraph.build(bundle.source, bundle.target)
                relational.save_checkpoint(out / "relational.ckpt", result.relational.params, graph)
    return result


# flat key -> (section, field) for config files and CLI flags
def config_keys():
    keys = {}
    for f in fields(RunConfig):
        if f.name not in ("training", "decoding"):
            keys[f.name] = (None, f.name)
    for f in fields(relational.TrainingConfig):
        keys[f.name] = ("training", f.name)
    for f in fields(decoder.DecoderConfig):
        keys[f.name] = ("decoding", f.name)
    return keys


def _coerce(template, value):
    if isinstance(value, str):
        if isinstance(template, bool):
            return value.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(template, tuple):
            return tuple(float(v) for v in value.replace(",", " ").split())
        if isinstance(template, int):
            return int(value)
        if isinstance(template, float):
            return float(value)
    return value


def build_config(values, base=None):
    """Apply flat ``{key: value}`` overrides (snake or kebab case) onto a RunConfig."""
    base = base or RunConfig()
    keys = config_keys()
    top, train_kw, dec_kw = {}, {}, {}
    for raw_key, value in values.items():
        key = raw_key.replace("-", "_")
        if key not in keys:
            raise ValueError(f"unknown config key {raw_key!r}")
        section, name = keys[key]
        if section is None:
            tmpl = getattr(base, name)
            top[name] = value if tmpl is None else _coerce(tmpl, value)
        elif section == "training":
            train_kw[name] = _coerce(getattr(base.training, name), value)
        else:
            dec_kw[name] = _coerce(getattr(base.decoding, name), value)
    if top.get("threads") is not None:
        top["threads"] = int(top["threads"])
    return replace(base, training=replace(base.training, **train_kw),
                   decoding=replace(base.decoding, **dec_kw), **top)


def read_config_file(path):
    """``key = value`` lines; ``#`` starts a comment."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" in line:
                k, v = line.split("=", 1)
            elif "\t" in line:
                k, v = line.split("\t", 1)
            else:
                raise ValueError(f"{path}:{line_no}: expected key = value")
            values[k.strip()] = v.strip()
    return values
