"""``tkgalign`` command line.

Verbs: ``align``, ``eval``, ``gen``, ``encode-temporal``, ``pseudo-seeds``.
Exit status is 0 on success, 1 on a pipeline or data error (the message names
the failing stage) and 2 on bad arguments.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import pseudo, synthetic, temporal
from .errors import AlignError
from .evaluate import evaluate
from .kg import SeedSet, load_dataset, read_pairs, save_dataset, split_seeds, write_pairs
from .pipeline import (RunConfig, StageError, _stage, build_config, config_keys, encode_pair,
                       read_config_file, run_align, thread_limit)

log = logging.getLogger("tkgalign")


def _defaults():
    base = RunConfig()
    out = {}
    for key, (section, name) in config_keys().items():
        holder = base if section is None else getattr(base, section)
        out[key] = getattr(holder, name)
    return out


def _add_config_flags(p, only=None):
    """One kebab-case flag per RunConfig field (nested configs flattened)."""
    for key, default in _defaults().items():
        if only is not None and key not in only:
            continue
        flag = "--" + key.replace("_", "-")
        if isinstance(default, bool):
            # bare flag means true; "--flag false" switches a default-on option off
            p.add_argument(flag, nargs="?", const="true", default=argparse.SUPPRESS,
                           metavar="BOOL", help=f"(default: {str(default).lower()})")
        else:
            shown = " ".join(f"{a:g}" for a in default) if isinstance(default, tuple) else default
            shown = getattr(shown, "value", shown)
            p.add_argument(flag, default=argparse.SUPPRESS, help=f"(default: {shown})")


def _config_from_args(args, skip=()):
    values = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    keys = config_keys()
    for key in keys:
        if key in skip:
            continue
        if hasattr(args, key):
            values[key] = getattr(args, key)
    return build_config(values)


def cmd_align(args):
    config = _config_from_args(args)
    result = run_align(config)
    print(f"alpha={result.alpha:g} D={result.distance:.6f} seeds={len(result.seeds)}")
    if result.report is not None:
        print(result.report.line())
    return 0


def _read_alignment(path, rows, cols):
    """Scores matrix with each listed cell set to its score and everything else below it."""
    scores = np.full((rows, cols), -np.inf)
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 3:
                raise AlignError(f"{path}:{line_no}: expected 'e_s e_t score'")
            scores[int(parts[0]), int(parts[1])] = float(parts[2])
    return scores


def cmd_eval(args):
    with _stage("eval"):
        truth = read_pairs(args.truth)
        align_path = Path(args.alignment)
        ids = np.loadtxt(align_path, ndmin=2, usecols=(0, 1)).astype(np.int64) \
            if align_path.stat().st_size else np.zeros((0, 2), dtype=np.int64)
        rows = max(int(ids[:, 0].max(initial=-1)), int(truth.source.max(initial=-1))) + 1
        cols = max(int(ids[:, 1].max(initial=-1)), int(truth.target.max(initial=-1))) + 1
        ns = tuple(int(v) for v in args.hits.split(","))
        report = evaluate(_read_alignment(align_path, rows, cols), truth, ns)
    print(report.line())
    if args.out:
        report.write(args.out)
    return 0


def cmd_gen(args):
    with _stage("gen"):
        bundle = synthetic.generate_synthetic(
            args.entities, args.relations, args.timestamps, args.overlap, args.noise,
            rng_seed=args.rng_seed, quads_per_entity=args.quads_per_entity)
        if args.train_seeds:
            train, test = split_seeds(bundle.test_pairs, args.train_seeds, args.rng_seed)
            bundle = replace(bundle, train_seeds=train, test_pairs=test)
        save_dataset(bundle, args.out_dir)
    print(f"wrote {args.out_dir}: {len(bundle.source)} + {len(bundle.target)} quadruples, "
          f"shared ratio {synthetic.shared_quadruple_ratio(replace(bundle, test_pairs=_all_truth(bundle))):.3f}")
    return 0


def _all_truth(bundle):
    pairs = np.vstack([bundle.train_seeds.pairs, bundle.test_pairs.pairs])
    return SeedSet(pairs[np.argsort(pairs[:, 0], kind="stable")])


def cmd_encode_temporal(args):
    config = _config_from_args(args)
    with thread_limit(config.threads):
        with _stage("load"):
            bundle = load_dataset(config.dataset_dir, read_sup_pairs=False)
        with _stage("temporal-encoder"):
            enc_s, enc_t = encode_pair(bundle, config.temporal_layers, config.sparse_softmax)
        with _stage("write"):
            out = Path(config.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            temporal.dump_features(out / "temporal_1.tsv", enc_s.feature.matrix)
            temporal.dump_features(out / "temporal_2.tsv", enc_t.feature.matrix)
    print(f"wrote {out}/temporal_1.tsv, {out}/temporal_2.tsv "
          f"(width {enc_s.feature.matrix.shape[1]})")
    return 0


def cmd_pseudo_seeds(args):
    config = _config_from_args(args)
    with thread_limit(config.threads):
        with _stage("load"):
            bundle = load_dataset(config.dataset_dir, read_sup_pairs=False)
        with _stage("temporal-encoder"):
            enc_s, enc_t = encode_pair(bundle, config.temporal_layers, config.sparse_softmax)
        with _stage("pseudo-seed"):
            seeds = pseudo.generate_pseudo_seeds(enc_s.feature, enc_t.feature, config.decoding)
        with _stage("write"):
            out = Path(config.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            write_pairs(out / "pseudo_seeds.tsv", seeds)
    line = f"pseudo_seeds={len(seeds)}"
    if len(bundle.test_pairs):
        truth = bundle.test_pairs.as_set()
        line += f" correct={sum(p in truth for p in seeds.as_set())}"
    print(line)
    return 0


_PIPELINE_SUBSET = {"dataset_dir", "out_dir", "temporal_layers", "sparse_softmax", "threads",
                    "sinkhorn_steps", "sinkhorn_temperature"}


def build_parser():
    parser = argparse.ArgumentParser(prog="tkgalign",
                                     description="Entity alignment between temporal knowledge graphs.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("align", help="run the full pipeline on a dataset directory")
    p.add_argument("--config", help="key = value file; flags override it")
    _add_config_flags(p)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("eval", help="score an alignment file against reference pairs")
    p.add_argument("--alignment", required=True)
    p.add_argument("--truth", required=True, help="e_s<TAB>e_t reference pairs")
    p.add_argument("--hits", default="1,10", help="comma-separated N values")
    p.add_argument("--out", help="also write metric<TAB>value lines here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gen", help="write a synthetic dataset with known ground truth")
    p.add_argument("--entities", type=int, default=500)
    p.add_argument("--relations", type=int, default=20)
    p.add_argument("--timestamps", type=int, default=60)
    p.add_argument("--overlap", type=float, default=1.0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--quads-per-entity", type=int, default=4)
    p.add_argument("--train-seeds", type=int, default=0,
                   help="move this many truth pairs to sup_pairs")
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_gen)

    for verb, func, text in (("encode-temporal", cmd_encode_temporal, "dump temporal features"),
                             ("pseudo-seeds", cmd_pseudo_seeds, "derive seed pairs without labels")):
        p = sub.add_parser(verb, help=text)
        p.add_argument("--config")
        _add_config_flags(p, only=_PIPELINE_SUBSET)
        p.set_defaults(func=func)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except StageError as exc:
        print(f"tkgalign: error in stage {exc.stage}: {exc.cause}", file=sys.stderr)
        return 1
    except (AlignError, ValueError, OSError) as exc:
        print(f"tkgalign: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
