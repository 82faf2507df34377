"""Shared fixtures: the six-entity worked example and small helpers."""

import numpy as np
import pytest

from tkgalign.kg import DatasetBundle, SeedSet, TemporalKG

# (head, relation, tail, t_begin, t_end); every relation and head timestamp used once
EXAMPLE_QUADS = np.array([
    [0, 0, 2, 0, 0],
    [1, 1, 2, 2, 2],
    [2, 2, 3, 1, 1],
    [4, 3, 5, 4, 4],
    [5, 4, 4, 3, 3],
])

# printed two-decimal values
PRINTED_AT = np.array([
    [.40, .15, .15, .15, .15],
    [.15, .15, .40, .15, .15],
    [.15, .40, .15, .15, .15],
    [.20, .20, .20, .20, .20],
    [.15, .15, .15, .15, .40],
    [.15, .15, .15, .40, .15],
])

PRINTED_A = np.array([
    [0, 0, 1, 0, 0, 0],
    [0, 0, 1, 0, 0, 0],
    [0, 0, 0, 1, 0, 0],
    [0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 1],
    [0, 0, 0, 0, 1, 0],
], dtype=float)

PRINTED_HT = np.array([
    [.40, .15, .15, .15, .15, .15, .40, .15, .15, .15],
    [.15, .15, .40, .15, .15, .15, .40, .15, .15, .15],
    [.15, .40, .15, .15, .15, .20, .20, .20, .20, .20],
    [.20, .20, .20, .20, .20, .00, .00, .00, .00, .00],
    [.15, .15, .15, .15, .40, .15, .15, .15, .40, .15],
    [.15, .15, .15, .40, .15, .15, .15, .15, .15, .40],
])

PRINTED_HR = np.array([
    [.30, .44, .33, .40, .61, .35, .70, .85, .32, .56],
    [.81, .61, .97, .84, .53, .00, .76, .44, .19, .45],
    [.44, .51, .70, .72, .59, .21, .38, .88, .90, .67],
    [.13, .21, .77, .25, .44, .71, .66, .37, .35, .61],
    [.33, .33, .70, .29, .79, .51, .78, .60, .24, .59],
    [.65, .94, .77, 1.00, .50, .56, .50, .38, .54, .34],
])

PRINTED_PT = np.array([
    [.50, .44, .39, .20, .37, .37],
    [.44, .50, .39, .20, .37, .37],
    [.39, .39, .45, .20, .39, .39],
    [.20, .20, .20, .20, .20, .20],
    [.37, .37, .39, .20, .50, .37],
    [.37, .37, .39, .20, .37, .50],
])

PRINTED_P = np.array([
    [2.70, 2.72, 3.00, 2.24, 2.72, 2.81],
    [2.72, 3.97, 3.41, 2.42, 2.98, 3.75],
    [3.00, 3.41, 4.03, 2.59, 3.02, 3.67],
    [2.24, 2.42, 2.59, 2.49, 2.61, 2.60],
    [2.72, 2.98, 3.02, 2.61, 3.04, 2.97],
    [2.81, 3.75, 3.67, 2.60, 2.97, 4.26],
])


def example_kg():
    return TemporalKG(6, 5, 5, EXAMPLE_QUADS)


def shuffled_copy(kg, rng_seed=0):
    """``kg`` with entity ids permuted; returns the copy and truth pairs (i, perm[i])."""
    perm = np.random.default_rng(rng_seed).permutation(kg.num_entities)
    truth = SeedSet(np.column_stack([np.arange(kg.num_entities), perm]))
    return kg.relabel_entities(perm), truth


@pytest.fixture
def example():
    return example_kg()


@pytest.fixture
def example_bundle():
    kg = example_kg()
    ident = SeedSet(np.column_stack([np.arange(6), np.arange(6)]))
    return DatasetBundle(kg, kg, ident, SeedSet.empty())


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def record(criterion, passed, detail):
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
