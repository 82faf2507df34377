import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tkgalign.errors import ArgumentError, IngestError, ParseError, ValidationError
from tkgalign.kg import (DatasetBundle, SeedOrigin, SeedSet, TemporalKG, load_dataset,
                         save_dataset, split_seeds, validate, write_quads)

from conftest import EXAMPLE_QUADS


def _write(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def _quad_lines(quads):
    return ["\t".join(str(v) for v in row) for row in quads]


def test_load_example_graph(tmp_path):
    # the duplicated first line collapses, leaving the five distinct facts
    lines = _quad_lines(EXAMPLE_QUADS)
    _write(tmp_path / "triples_1", lines + lines[:1])
    _write(tmp_path / "triples_2", lines)
    b = load_dataset(tmp_path)
    assert (b.source.num_entities, b.source.num_relations, b.source.num_times) == (6, 5, 5)
    assert len(b.source) == 5
    assert len(b.train_seeds) == 0 and len(b.test_pairs) == 0


def test_empty_source_file(tmp_path):
    _write(tmp_path / "triples_1", [])
    _write(tmp_path / "triples_2", ["0\t0\t1\t0\t0"])
    b = load_dataset(tmp_path)
    assert b.source.num_entities == 0 and len(b.source) == 0
    assert b.source.num_times == b.target.num_times == 1


def test_duplicate_lines_collapse(tmp_path):
    _write(tmp_path / "triples_1", ["3\t2\t1\t0\t0", "3\t2\t1\t0\t0"])
    _write(tmp_path / "triples_2", ["3\t2\t1\t0\t0"])
    b = load_dataset(tmp_path)
    assert b.source.quads.tolist() == [[3, 2, 1, 0, 0]]


def test_missing_file(tmp_path):
    _write(tmp_path / "triples_1", ["0\t0\t1\t0\t0"])
    with pytest.raises(IngestError):
        load_dataset(tmp_path)
    with pytest.raises(IngestError):
        load_dataset(tmp_path / "nope")


@pytest.mark.parametrize("bad", ["0\t0\t1\t0", "0\t0\tx\t0\t0", "0\t0\t1\t0\t0\t5", "0\t-1\t1\t0\t0"])
def test_malformed_line_reports_line_number(tmp_path, bad):
    _write(tmp_path / "triples_1", ["0\t0\t1\t0\t0", bad])
    _write(tmp_path / "triples_2", ["0\t0\t1\t0\t0"])
    with pytest.raises(ParseError) as info:
        load_dataset(tmp_path)
    assert info.value.line_no == 2
    assert ":2" in str(info.value)


def test_seed_out_of_range(tmp_path):
    _write(tmp_path / "triples_1", ["0\t0\t1\t0\t0"])
    _write(tmp_path / "triples_2", ["0\t0\t1\t0\t0"])
    _write(tmp_path / "sup_pairs", ["0\t7"])
    with pytest.raises(ValidationError):
        load_dataset(tmp_path)


def test_unsupervised_load_ignores_sup_pairs(tmp_path):
    _write(tmp_path / "triples_1", ["0\t0\t1\t0\t0"])
    _write(tmp_path / "triples_2", ["0\t0\t1\t0\t0"])
    _write(tmp_path / "sup_pairs", ["not a pair"])
    b = load_dataset(tmp_path, read_sup_pairs=False)
    assert len(b.train_seeds) == 0


def test_quad_bounds_checked():
    with pytest.raises(ValidationError):
        TemporalKG(2, 1, 1, [[0, 0, 2, 0, 0]])
    with pytest.raises(ValidationError):
        TemporalKG(3, 1, 1, [[0, 0, 2, 0, 1]])


def test_quads_immutable(example):
    with pytest.raises(ValueError):
        example.quads[0, 0] = 5


quads_strategy = st.lists(st.tuples(*[st.integers(0, 6)] * 3, st.integers(0, 4), st.integers(0, 4)),
                          min_size=0, max_size=30)


@settings(max_examples=40, deadline=None)
@given(quads_strategy)
def test_roundtrip_preserves_quadruple_set(tmp_path_factory, rows):
    d = tmp_path_factory.mktemp("rt")
    kg = TemporalKG.from_quads(np.array(rows, dtype=np.int64).reshape(-1, 5))
    save_dataset(DatasetBundle(kg, kg), d)
    back = load_dataset(d)
    assert {tuple(r) for r in back.source.quads.tolist()} == set(rows)
    for col, bound in zip(range(5), (back.source.num_entities, back.source.num_relations,
                                     back.source.num_entities, back.num_times, back.num_times)):
        assert (back.source.quads[:, col] < bound).all()


def test_write_quads_format(tmp_path, example):
    write_quads(tmp_path / "q", example)
    assert (tmp_path / "q").read_bytes().splitlines()[0] == b"0\t0\t2\t0\t0"


def test_validate_example_with_itself(example_bundle):
    report = validate(example_bundle)
    assert report.empty
    # entity 3 only appears as a tail
    assert report.no_outgoing_source == [3]
    assert any("no outgoing" in line for line in report.lines())


def test_validate_flags_injectivity(example):
    b = DatasetBundle(example, example, SeedSet([[0, 1], [2, 1]]))
    report = validate(b)
    assert not report.empty
    assert report.injectivity_violations["train_seeds"] == [(0, 1), (2, 1)]


def test_validate_one_sided_times_and_overlap(example):
    other = TemporalKG(6, 5, 6, [[0, 0, 1, 5, 5]])
    b = DatasetBundle(example, other, SeedSet([[0, 0]]), SeedSet([[0, 0]]))
    report = validate(b)
    assert 5 in report.one_sided_times and 0 in report.one_sided_times
    assert report.seed_overlap == [(0, 0)]
    assert report.isolated_target == [2, 3, 4, 5]


def test_split_seeds_dicews_sizes():
    pairs = SeedSet(np.column_stack([np.arange(8566), np.arange(8566)]))
    train, test = split_seeds(pairs, 1000, 7)
    assert (len(train), len(test)) == (1000, 7566)
    assert train.as_set() | test.as_set() == pairs.as_set()
    assert not train.as_set() & test.as_set()
    assert train.is_injective() and test.is_injective()
    again = split_seeds(pairs, 1000, 7)
    assert np.array_equal(again[0].pairs, train.pairs)


def test_split_seeds_zero_and_too_many():
    pairs = SeedSet([[0, 1], [1, 0]])
    train, test = split_seeds(pairs, 0, 0)
    assert len(train) == 0 and test.as_set() == pairs.as_set()
    with pytest.raises(ArgumentError):
        split_seeds(pairs, 3, 0)


def test_seed_origin_default():
    assert SeedSet.empty().origin is SeedOrigin.GROUND_TRUTH
