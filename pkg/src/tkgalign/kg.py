"""Temporal knowledge graph data model, dataset ingestion and seed handling.

A dataset directory holds ``triples_1`` / ``triples_2`` (source and target
quadruples, one ``h r t tb te`` line each, tab separated) and optionally
``sup_pairs`` / ``ref_pairs`` (training seeds and test pairs, ``e_s e_t``).
All ids are dense non-negative integers assigned by the files themselves.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ArgumentError, IngestError, ParseError, ValidationError

QUAD_FIELDS = ("head", "relation", "tail", "t_begin", "t_end")


class SeedOrigin(enum.Enum):
    GROUND_TRUTH = "ground_truth"
    PSEUDO = "pseudo"


@dataclass(frozen=True)
class TemporalKG:
    """Entity/relation/timestamp vocabulary sizes plus a deduplicated quadruple array.

    ``quads`` has shape ``(n, 5)`` with columns ``head, relation, tail,
    t_begin, t_end``. Rows are unique and sorted lexicographically.
    """

    num_entities: int
    num_relations: int
    num_times: int
    quads: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.quads, dtype=np.int64).reshape(-1, 5)
        if len(q):
            q = np.unique(q, axis=0)
        q.setflags(write=False)
        object.__setattr__(self, "quads", q)
        bounds = (self.num_entities, self.num_relations, self.num_entities,
                  self.num_times, self.num_times)
        for col, (name, bound) in enumerate(zip(QUAD_FIELDS, bounds)):
            if len(q) and (q[:, col].min() < 0 or q[:, col].max() >= bound):
                raise ValidationError(f"{name} id out of range [0, {bound})")

    @classmethod
    def from_quads(cls, quads, num_entities=None, num_relations=None, num_times=None):
        """Build a graph, inferring each vocabulary size as ``max id + 1`` when not given."""
        q = np.asarray(quads, dtype=np.int64).reshape(-1, 5)

        def infer(cols):
            return int(q[:, cols].max()) + 1 if len(q) else 0

        return cls(
            num_entities=infer([0, 2]) if num_entities is None else num_entities,
            num_relations=infer([1]) if num_relations is None else num_relations,
            num_times=infer([3, 4]) if num_times is None else num_times,
            quads=q,
        )

    @property
    def heads(self):
        return self.quads[:, 0]

    @property
    def relations(self):
        return self.quads[:, 1]

    @property
    def tails(self):
        return self.quads[:, 2]

    def __len__(self):
        return len(self.quads)

    def with_num_times(self, num_times):
        return TemporalKG(self.num_entities, self.num_relations, num_times, self.quads)

    def relabel_entities(self, perm):
        """Return a copy where entity ``e`` becomes ``perm[e]``."""
        perm = np.asarray(perm, dtype=np.int64)
        q = self.quads.copy()
        q[:, 0] = perm[q[:, 0]]
        q[:, 2] = perm[q[:, 2]]
        return TemporalKG(self.num_entities, self.num_relations, self.num_times, q)


@dataclass(frozen=True)
class SeedSet:
    pairs: np.ndarray
    origin: SeedOrigin = SeedOrigin.GROUND_TRUTH

    def __post_init__(self):
        p = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)
        p.setflags(write=False)
        object.__setattr__(self, "pairs", p)

    @classmethod
    def empty(cls, origin=SeedOrigin.GROUND_TRUTH):
        return cls(np.zeros((0, 2), dtype=np.int64), origin)

    @property
    def source(self):
        return self.pairs[:, 0]

    @property
    def target(self):
        return self.pairs[:, 1]

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return (tuple(int(x) for x in row) for row in self.pairs)

    def as_set(self):
        return set(self)

    def injectivity_violations(self):
        """Pairs whose source or target id is shared with another pair."""
        bad = []
        for col in (0, 1):
            ids, counts = np.unique(self.pairs[:, col], return_counts=True)
            dup = set(ids[counts > 1].tolist())
            bad.extend(p for p in self if p[col] in dup)
        return sorted(set(bad))

    def is_injective(self):
        return not self.injectivity_violations()


@dataclass(frozen=True)
class DatasetBundle:
    source: TemporalKG
    target: TemporalKG
    train_seeds: SeedSet = field(default_factory=SeedSet.empty)
    test_pairs: SeedSet = field(default_factory=SeedSet.empty)

    def __post_init__(self):
        # one shared timestamp space for both graphs
        nt = max(self.source.num_times, self.target.num_times)
        if self.source.num_times != nt:
            object.__setattr__(self, "source", self.source.with_num_times(nt))
        if self.target.num_times != nt:
            object.__setattr__(self, "target", self.target.with_num_times(nt))
        for name in ("train_seeds", "test_pairs"):
            _check_seed_range(getattr(self, name), self.source, self.target, name)

    @property
    def num_times(self):
        return self.source.num_times


def _check_seed_range(seeds, source, target, name):
    if not len(seeds):
        return
    p = seeds.pairs
    if p.min() < 0 or p[:, 0].max() >= source.num_entities or p[:, 1].max() >= target.num_entities:
        raise ValidationError(f"{name}: seed pair references an entity outside its graph")


def _read_int_rows(path, arity):
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != arity:
                raise ParseError(path, line_no, f"expected {arity} tab-separated fields, got {len(parts)}")
            try:
                vals = [int(p) for p in parts]
            except ValueError:
                raise ParseError(path, line_no, f"non-integer field in {line!r}") from None
            if any(v < 0 for v in vals):
                raise ParseError(path, line_no, "negative id")
            rows.append(vals)
    return np.asarray(rows, dtype=np.int64).reshape(-1, arity)


def read_quads(path):
    path = Path(path)
    if not path.is_file():
        raise IngestError(f"missing quadruple file: {path}")
    return _read_int_rows(path, 5)


def read_pairs(path, origin=SeedOrigin.GROUND_TRUTH):
    return SeedSet(_read_int_rows(path, 2), origin)


def load_dataset(directory, *, read_sup_pairs=True):
    """Load and validate a dataset directory into a :class:`DatasetBundle`.

    ``read_sup_pairs=False`` leaves ``sup_pairs`` untouched even when present
    (the unsupervised pipeline never looks at it).
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise IngestError(f"dataset directory not found: {directory}")
    q1 = read_quads(directory / "triples_1")
    q2 = read_quads(directory / "triples_2")
    num_times = max(
        int(q1[:, 3:].max()) + 1 if len(q1) else 0,
        int(q2[:, 3:].max()) + 1 if len(q2) else 0,
    )
    source = TemporalKG.from_quads(q1, num_times=num_times)
    target = TemporalKG.from_quads(q2, num_times=num_times)

    def optional(name):
        p = directory / name
        return read_pairs(p) if p.is_file() else SeedSet.empty()

    train = optional("sup_pairs") if read_sup_pairs else SeedSet.empty()
    return DatasetBundle(source, target, train, optional("ref_pairs"))


def write_quads(path, kg):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in kg.quads:
            fh.write("\t".join(str(int(v)) for v in row) + "\n")


def write_pairs(path, seeds):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s, t in seeds:
            fh.write(f"{s}\t{t}\n")


def save_dataset(bundle, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_quads(directory / "triples_1", bundle.source)
    write_quads(directory / "triples_2", bundle.target)
    if len(bundle.train_seeds):
        write_pairs(directory / "sup_pairs", bundle.train_seeds)
    if len(bundle.test_pairs):
        write_pairs(directory / "ref_pairs", bundle.test_pairs)
    return directory


@dataclass
class ValidationReport:
    """Findings from :func:`validate`.

    ``no_outgoing_*`` are informational (such entities still get a uniform
    temporal row) and do not make the report non-empty.
    """

    isolated_source: list = field(default_factory=list)
    isolated_target: list = field(default_factory=list)
    no_outgoing_source: list = field(default_factory=list)
    no_outgoing_target: list = field(default_factory=list)
    injectivity_violations: dict = field(default_factory=dict)
    one_sided_times: list = field(default_factory=list)
    seed_overlap: list = field(default_factory=list)

    @property
    def empty(self):
        return not (self.isolated_source or self.isolated_target or self.one_sided_times
                    or self.seed_overlap or any(self.injectivity_violations.values()))

    def lines(self):
        out = []
        for name in ("isolated_source", "isolated_target", "one_sided_times", "seed_overlap"):
            if getattr(self, name):
                out.append(f"{name}: {getattr(self, name)}")
        for name, bad in self.injectivity_violations.items():
            if bad:
                out.append(f"injectivity violation in {name}: {bad}")
        for name in ("no_outgoing_source", "no_outgoing_target"):
            if getattr(self, name):
                out.append(f"{name} (no outgoing quadruples): {getattr(self, name)}")
        return out


def _entity_presence(kg):
    any_q = np.zeros(kg.num_entities, dtype=bool)
    out_q = np.zeros(kg.num_entities, dtype=bool)
    any_q[kg.heads] = True
    any_q[kg.tails] = True
    out_q[kg.heads] = True
    return np.flatnonzero(~any_q).tolist(), np.flatnonzero(~out_q).tolist()


def _times_used(kg):
    used = np.zeros(kg.num_times, dtype=bool)
    used[kg.quads[:, 3]] = True
    used[kg.quads[:, 4]] = True
    return used


def validate(bundle):
    report = ValidationReport()
    report.isolated_source, report.no_outgoing_source = _entity_presence(bundle.source)
    report.isolated_target, report.no_outgoing_target = _entity_presence(bundle.target)
    report.injectivity_violations = {
        "train_seeds": bundle.train_seeds.injectivity_violations(),
        "test_pairs": bundle.test_pairs.injectivity_violations(),
    }
    ts, tt = _times_used(bundle.source), _times_used(bundle.target)
    report.one_sided_times = np.flatnonzero(ts ^ tt).tolist()
    report.seed_overlap = sorted(bundle.train_seeds.as_set() & bundle.test_pairs.as_set())
    return report


def split_seeds(pairs, train_count, rng_seed):
    """Randomly partition ``pairs`` into ``(train, test)`` with ``len(train) == train_count``."""
    if train_count < 0 or train_count > len(pairs):
        raise ArgumentError(f"train_count={train_count} not in [0, {len(pairs)}]")
    order = np.random.default_rng(rng_seed).permutation(len(pairs))
    train = np.sort(order[:train_count])
    test = np.sort(order[train_count:])
    return SeedSet(pairs.pairs[train], pairs.origin), SeedSet(pairs.pairs[test], pairs.origin)
