import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_trees
from rvine.errors import StructureError
from rvine.structure import (ConstraintEntry, TreeSequence, VineEdge, check_trees,
                             constraint_set, count_rvines, drop_first, lower_rows,
                             matrix_to_trees, max_matrix, normalize_structure, relabel_entry,
                             trees_to_matrix, validate)

M_STAR = lower_rows([
    [7],
    [4, 4],
    [5, 6, 6],
    [1, 5, 5, 5],
    [2, 1, 1, 1, 1],
    [3, 2, 2, 3, 3, 3],
    [6, 3, 3, 2, 2, 2, 2],
])

# Edge labels of the seven-dimensional example vine, tree by tree.
EXAMPLE_EDGES = [
    ["1,2", "2,3", "3,4", "2,5", "3,6", "6,7"],
    ["1,3|2", "2,6|3", "3,7|6", "2,4|3", "3,5|2"],
    ["1,6|2,3", "2,7|3,6", "1,5|2,3", "1,4|2,3"],
    ["5,6|1,2,3", "4,5|1,2,3", "1,7|2,3,6"],
    ["4,6|1,2,3,5", "5,7|1,2,3,6"],
    ["4,7|1,2,3,5,6"],
]


def parse_edge(text):
    pair, _, cond = text.partition("|")
    a, b = (int(x) for x in pair.split(","))
    d = [int(x) for x in cond.split(",")] if cond else []
    return a, b, frozenset(d)


def example_trees():
    return TreeSequence(7, tuple(tuple(VineEdge(*parse_edge(t)) for t in tree)
                                 for tree in EXAMPLE_EDGES))


def corner_swapped():
    m = M_STAR.copy()
    m[5, 5], m[6, 5] = m[6, 5], m[5, 5]
    m[6, 6] = 3 if m[6, 6] == 2 else 2
    return m


def test_example_matrix_is_valid():
    s = validate(M_STAR)
    assert s.n == 7 and not s.is_normalized()


def test_corner_swap_defines_the_same_vine():
    swapped = corner_swapped()
    assert swapped[5, 5] == 2 and swapped[6, 5] == 3 and swapped[6, 6] == 3
    assert constraint_set(validate(swapped)) == constraint_set(validate(M_STAR))


def test_constraint_entries_of_first_column():
    s = validate(M_STAR)
    assert s.entry(3, 0) == ConstraintEntry.of(7, 1, [2, 3, 6])
    assert s.entry(6, 0) == ConstraintEntry.of(7, 6)
    assert str(s.entry(3, 0)) == "1,7|2,3,6"


def test_constraint_set_matches_example_labels():
    cs = constraint_set(validate(M_STAR))
    expected = {ConstraintEntry.of(*parse_edge(t)) for tree in EXAMPLE_EDGES for t in tree}
    assert len(cs) == 21 and cs == expected


def test_two_dimensional_structure():
    s = validate([[2], [1, 1]])
    assert constraint_set(s) == {ConstraintEntry.of(2, 1)}


def test_repeated_label_reports_distinctness():
    m = M_STAR.copy()
    m[6, 0] = 4
    with pytest.raises(StructureError) as err:
        validate(m)
    assert err.value.condition == "distinct"
    assert err.value.location == (7, 1)


def test_property_i_violation():
    m = M_STAR.copy()
    m[3, 2] = 4
    with pytest.raises(StructureError) as err:
        validate(m)
    assert err.value.condition == "property-i"
    assert err.value.location == (3, 3)


def test_property_ii_violation():
    m = M_STAR.copy()
    m[1, 1] = 7
    with pytest.raises(StructureError) as err:
        validate(m)
    assert err.value.condition == "property-ii"


def test_membership_violation_location():
    bad = [[1], [2, 3], [3, 4, 2], [4, 2, 4, 4]]
    with pytest.raises(StructureError) as err:
        validate(bad)
    assert err.value.condition == "membership"
    assert err.value.location == (2, 1)


@pytest.mark.parametrize("bad", [
    [[1], [1, 2]],
    [[3], [1, 2], [2, 1, 3]],
    np.array([[1.5, 0], [2, 2]]),
    [[1, 2], [2, 1]],
    [[0], [1, 1]],
])
def test_malformed_matrices_rejected(bad):
    with pytest.raises(StructureError):
        validate(bad)


def test_max_matrix_brute_force():
    norm, _ = normalize_structure(validate(M_STAR))
    mm = max_matrix(norm)
    n = norm.n
    for k in range(n):
        for i in range(k, n):
            best = 0
            for r in range(i, n):
                best = max(best, int(norm.matrix[r, k]))
            assert mm[i, k] == best
    assert np.array_equal(np.diag(mm), np.diag(norm.matrix))
    assert np.array_equal(mm[-1], norm.matrix[-1])
    assert np.array_equal(max_matrix(mm), mm)


def test_normalization_of_example():
    s = validate(M_STAR)
    norm, mapping = normalize_structure(s)
    assert norm.is_normalized()
    assert sorted(mapping) == list(range(1, 8)) and sorted(mapping.values()) == list(range(1, 8))
    assert constraint_set(norm) == {relabel_entry(e, mapping) for e in constraint_set(s)}
    inverse = {v: k for k, v in mapping.items()}
    back, _ = normalize_structure(norm)
    assert back == norm
    from rvine.structure import relabel
    assert relabel(norm, inverse) == s


def test_example_trees_give_the_example_vine():
    trees = check_trees(example_trees())
    s, placement = trees_to_matrix(trees)
    assert constraint_set(s) == constraint_set(validate(M_STAR))
    assert len(placement) == 21


def test_two_dimensional_trees():
    s, _ = trees_to_matrix(TreeSequence(2, ((VineEdge(1, 2),),)))
    assert s.rows() == [[2], [1, 1]]


def test_proximity_violation_detected():
    t = example_trees()
    trees = list(t.trees)
    # 1,2 and 3,4 share no node in the first tree
    trees[1] = (VineEdge(1, 4, frozenset([2, 3])),) + trees[1][1:]
    with pytest.raises(StructureError):
        check_trees(TreeSequence(7, tuple(trees)))


def test_count_rvines():
    assert count_rvines(3) == 3
    assert count_rvines(4) == 24
    assert count_rvines(7) == 2_580_480
    with pytest.raises(ValueError):
        count_rvines(2)


def enumerate_structures(n):
    """All label matrices with distinct column entries that satisfy properties (i) and (ii).

    Columns are generated right to left: each holds the labels of the column
    to its right plus one label that is new there.  The new label goes on
    the diagonal and the others follow in every order.
    """
    def build(k, right):
        if k < 0:
            yield []
            return
        for new in sorted(set(range(1, n + 1)) - set(right)):
            labels = set(right) | {new}
            for order in itertools.permutations(sorted(right)):
                for rest in build(k - 1, labels):
                    yield rest + [(new,) + order]

    for cols in build(n - 1, ()):
        m = np.zeros((n, n), dtype=np.int64)
        for k, col in enumerate(cols):
            m[k:, k] = col
        yield m


def distinct_constraint_sets(n):
    found = set()
    valid = 0
    for m in enumerate_structures(n):
        try:
            s = validate(m)
        except StructureError:
            continue
        valid += 1
        found.add(constraint_set(s))
    return valid, found


def test_exhaustive_four_dimensional_enumeration():
    valid, sets = distinct_constraint_sets(4)
    assert len(sets) == count_rvines(4)
    assert valid == 192


@pytest.mark.slow
def test_exhaustive_five_dimensional_enumeration():
    _, sets = distinct_constraint_sets(5)
    assert len(sets) == count_rvines(5)


def test_three_dimensional_enumeration():
    _, sets = distinct_constraint_sets(3)
    assert len(sets) == 3


@settings(max_examples=120, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_random_trees_round_trip(n, seed):
    trees = random_trees(n, np.random.default_rng(seed))
    s, _ = trees_to_matrix(trees)
    assert constraint_set(s) == trees.constraint_set()
    again, _ = trees_to_matrix(matrix_to_trees(s))
    assert constraint_set(again) == constraint_set(s)


@settings(max_examples=120, deadline=None)
@given(st.integers(3, 8), st.integers(0, 2**32 - 1))
def test_valid_structure_invariants(n, seed):
    s, _ = trees_to_matrix(random_trees(n, np.random.default_rng(seed)))
    for (i, k), e in s.entries():
        assert len(e.conditioning) == n - 1 - i
    sub, mapping = drop_first(s)
    assert validate(sub).n == n - 1
    assert set(mapping) == set(range(1, n + 1)) - {int(s.matrix[0, 0])}
    norm, mapping = normalize_structure(s)
    validate(norm.matrix)
    assert constraint_set(norm) == {relabel_entry(e, mapping) for e in constraint_set(s)}
