import numpy as np
import pytest

from tkgalign.errors import ArgumentError
from tkgalign.synthetic import generate_synthetic, shared_quadruple_ratio


def test_same_seed_identical():
    a, b = generate_synthetic(50, 4, 10, 0.7, 0.1, rng_seed=3), generate_synthetic(50, 4, 10, 0.7, 0.1, rng_seed=3)
    assert np.array_equal(a.source.quads, b.source.quads)
    assert np.array_equal(a.target.quads, b.target.quads)
    assert np.array_equal(a.test_pairs.pairs, b.test_pairs.pairs)


def test_noise_free_copy_is_isomorph():
    b = generate_synthetic(80, 5, 12, rng_seed=1)
    inv = np.empty(80, dtype=np.int64)
    inv[b.test_pairs.target] = b.test_pairs.source
    back = b.target.relabel_entities(inv)
    assert np.array_equal(back.quads, b.source.quads)
    assert shared_quadruple_ratio(b) == 1.0
    assert len(b.train_seeds) == 0 and b.test_pairs.is_injective()


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_half_overlap_ratio(seed):
    b = generate_synthetic(200, 10, 30, overlap=0.5, rng_seed=seed)
    assert abs(shared_quadruple_ratio(b) - 0.5) <= 0.05


def test_noise_lowers_overlap():
    clean = shared_quadruple_ratio(generate_synthetic(200, 10, 30, noise=0.0, rng_seed=0))
    noisy = shared_quadruple_ratio(generate_synthetic(200, 10, 30, noise=0.2, rng_seed=0))
    assert noisy < clean and noisy > 0.7


@pytest.mark.parametrize("kwargs", [dict(entities=0), dict(overlap=1.5), dict(noise=-0.1), dict(overlap=0.0)])
def test_bad_arguments(kwargs):
    args = dict(entities=10, relations=2, timestamps=3)
    args.update(kwargs)
    with pytest.raises(ArgumentError):
        generate_synthetic(**args)
