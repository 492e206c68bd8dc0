import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sealci.grid import (
    DIRECTIONS,
    Boundary,
    Direction,
    EmptyPatternError,
    GridSpec,
    HeaderError,
    Occupancy,
    OccupiedError,
    RowLengthError,
    UnknownAgentError,
    dump_pattern,
    labeled_count,
    load_pattern,
    move_agent,
    neighbor,
    similarity,
    torus_distance,
)

OPPOSITE = {Direction.UP: Direction.DOWN, Direction.DOWN: Direction.UP,
            Direction.LEFT: Direction.RIGHT, Direction.RIGHT: Direction.LEFT}


def test_reference_four_has_119_labeled_cells(four):
    spec, mask = four
    assert (spec.width, spec.height, spec.boundary) == (28, 28, Boundary.BOUNDED)
    assert labeled_count(mask) == 119 == int(mask.sum())


def test_all_zero_pattern_rejected():
    with pytest.raises(EmptyPatternError):
        load_pattern("P-PAT 2 2\n00\n00\n")


def test_single_center_cell():
    spec, mask = load_pattern("P-PAT 3 3\n000\n010\n000")
    assert labeled_count(mask) == 1
    assert mask[1, 1] and mask.sum() == 1


@pytest.mark.parametrize("text, err", [
    ("PAT 2 2\n11\n11\n", HeaderError),
    ("P-PAT 2\n11\n11\n", HeaderError),
    ("P-PAT x 2\n11\n11\n", HeaderError),
    ("P-PAT 2 2\n111\n11\n", RowLengthError),
    ("P-PAT 2 2\n11\n", RowLengthError),
    ("", HeaderError),
])
def test_malformed_patterns_raise_distinct_errors(text, err):
    with pytest.raises(err):
        load_pattern(text)


@given(st.integers(1, 7), st.integers(1, 7), st.data())
def test_pattern_roundtrip_is_bit_exact(w, h, data):
    bits = data.draw(st.lists(st.booleans(), min_size=w * h, max_size=w * h).filter(any))
    mask = np.array(bits).reshape(h, w)
    text = dump_pattern(mask)
    spec, back = load_pattern(text)
    assert (spec.width, spec.height) == (w, h)
    assert np.array_equal(back, mask)
    assert dump_pattern(back) == text


def test_neighbor_examples():
    bounded, torus = GridSpec(5, 5), GridSpec(5, 5, Boundary.TOROIDAL)
    assert neighbor((0, 3), Direction.LEFT, bounded) is None
    assert neighbor((0, 3), Direction.LEFT, torus) == (4, 3)
    assert neighbor((2, 2), Direction.UP, bounded) == (2, 1)


@given(st.integers(1, 9), st.integers(1, 9), st.data())
def test_toroidal_neighbor_is_invertible(w, h, data):
    spec = GridSpec(w, h, Boundary.TOROIDAL)
    pos = (data.draw(st.integers(0, w - 1)), data.draw(st.integers(0, h - 1)))
    for d in DIRECTIONS:
        nb = neighbor(pos, d, spec)
        assert spec.contains(nb)
        assert neighbor(nb, OPPOSITE[d], spec) == pos


def test_move_agent_examples():
    occ = Occupancy({0: (1, 1), 1: (2, 1)})
    move_agent(occ, 0, (1, 2))
    assert occ.position(0) == (1, 2) and occ.is_free((1, 1))
    move_agent(occ, 0, (1, 2))
    assert occ.position(0) == (1, 2) and len(occ) == 2
    before = occ.copy()
    with pytest.raises(OccupiedError):
        move_agent(occ, 0, (2, 1))
    assert occ == before
    with pytest.raises(UnknownAgentError):
        move_agent(occ, 7, (0, 0))


@given(st.lists(st.tuples(st.integers(0, 5), st.sampled_from(DIRECTIONS)), max_size=60))
def test_exclusivity_and_conservation_under_random_moves(moves):
    spec = GridSpec(6, 6)
    occ = Occupancy({i: (i, i) for i in range(6)})
    for agent, d in moves:
        nb = neighbor(occ.position(agent), d, spec)
        if nb is None:
            continue
        try:
            occ.move(agent, nb)
        except OccupiedError:
            pass
        occ.check(spec, live=range(6))
        assert len(set(occ.positions())) == len(occ) == 6


def test_similarity_examples(four):
    _, mask = four
    cells = [(int(x), int(y)) for y, x in zip(*np.nonzero(mask))]
    assert similarity(Occupancy(dict(enumerate(cells))), mask) == 1.0
    off = [(int(x), int(y)) for y, x in zip(*np.nonzero(~mask))][:119]
    assert similarity(Occupancy(dict(enumerate(off))), mask) == 0.0
    partial = Occupancy(dict(enumerate(cells[:100] + off[:19])))
    # 100 / 119, from an independent cell count
    assert similarity(partial, mask) == pytest.approx(0.8403361344537815, abs=1e-12)


@given(st.data())
def test_similarity_monotone_in_labeled_cells(data):
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    mask = rng.random((6, 6)) < 0.5
    mask[0, 0] = True
    cells = [(x, y) for y in range(6) for x in range(6)]
    chosen = data.draw(st.lists(st.sampled_from(cells), unique=True, max_size=20))
    occ = Occupancy(dict(enumerate(chosen)))
    base = similarity(occ, mask)
    for x, y in cells:
        if mask[y, x] and occ.is_free((x, y)):
            grown = occ.copy()
            grown.place(999, (x, y))
            assert similarity(grown, mask) > base
            break


def test_torus_distance_examples():
    assert torus_distance((2, 3), (2, 3), GridSpec(5, 5)) == 0
    assert torus_distance((0, 0), (4, 0), GridSpec(5, 5, Boundary.TOROIDAL)) == 1
    assert torus_distance((0, 0), (3, 4), GridSpec(5, 5)) == 5


@given(st.sampled_from(list(Boundary)), st.integers(1, 12), st.integers(1, 12), st.data())
def test_torus_distance_symmetric_and_zero_iff_equal(boundary, w, h, data):
    spec = GridSpec(w, h, boundary)
    pt = st.tuples(st.integers(0, w - 1), st.integers(0, h - 1))
    a, b = data.draw(pt), data.draw(pt)
    assert torus_distance(a, b, spec) == torus_distance(b, a, spec)
    assert (torus_distance(a, b, spec) == 0) == (a == b)
    if boundary is Boundary.BOUNDED:
        assert torus_distance(a, b, spec) == math.hypot(a[0] - b[0], a[1] - b[1])


def test_gridspec_rejects_empty_dimensions():
    with pytest.raises(ValueError):
        GridSpec(0, 3)
