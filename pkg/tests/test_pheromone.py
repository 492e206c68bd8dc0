import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sealci.grid import Boundary, GridSpec
from sealci.pheromone import DECAY_FLOOR, PheromoneField, PheromoneParams, response_amplitude


def field(w=5, h=5, boundary=Boundary.BOUNDED, **kw):
    return PheromoneField(GridSpec(w, h, boundary), PheromoneParams(**kw))


def test_deposit_examples():
    f = field(deposit_inc=0.5, deposit_dec=0.5, amount_cap=10.0)
    f.amount[2, 2] = 1.0
    assert f.deposit((2, 2), True)[(2, 2)] == 1.5
    f.amount[0, 1] = 0.2
    assert f.deposit((1, 0), False)[(1, 0)] == 0.0
    f.amount[4, 4] = 10.0
    assert f.deposit((4, 4), True)[(4, 4)] == 10.0


def test_deposit_touches_only_target_cell():
    f = field()
    f.amount[:] = 3.0
    f.deposit((1, 2), True)
    changed = np.argwhere(f.amount != 3.0)
    assert changed.tolist() == [[2, 1]]


def test_decay_examples():
    f = field(decay=0.9)
    f.amount[0, 0] = 2.0
    f.amount[1, 1] = DECAY_FLOOR / 2
    f.decay_tick()
    assert f[(0, 0)] == pytest.approx(1.8, abs=1e-15)
    assert f[(1, 1)] == 0.0
    assert f[(2, 2)] == 0.0


ops = st.lists(st.one_of(
    st.tuples(st.just("dep"), st.integers(0, 3), st.integers(0, 3), st.booleans()),
    st.tuples(st.just("decay")),
), max_size=80)


@given(ops, st.floats(0.0, 0.99), st.floats(0.1, 5), st.floats(0.1, 5), st.floats(0.5, 20))
def test_amounts_stay_within_bounds(seq, rho, inc, dec, cap):
    f = field(4, 4, decay=rho, deposit_inc=inc, deposit_dec=dec, amount_cap=cap)
    for op in seq:
        if op[0] == "dep":
            f.deposit((op[1], op[2]), op[3])
        else:
            f.decay_tick()
        assert f.amount.min() >= 0.0 and f.amount.max() <= cap


@given(st.lists(st.floats(0, 10), min_size=16, max_size=16), st.floats(0.0, 0.99))
def test_decay_strictly_shrinks_nonzero_mass(values, rho):
    f = field(4, 4, decay=rho)
    f.amount[:] = np.reshape(values, (4, 4))
    before = f.total()
    f.decay_tick()
    if before > 0:
        assert f.total() < before
    else:
        assert f.total() == 0


@given(st.lists(st.floats(0, 10), min_size=16, max_size=16))
def test_decay_is_cellwise(values):
    a = np.reshape(values, (4, 4))
    f = field(4, 4)
    f.amount[:] = a
    f.decay_tick()
    for (y, x), v in np.ndenumerate(a):
        g = field(1, 1)
        g.amount[0, 0] = v
        g.decay_tick()
        assert f.amount[y, x] == g.amount[0, 0]


def test_response_amplitude_examples():
    assert response_amplitude(0.0, 2.0) == 1.0
    sigma = 1.7
    assert response_amplitude(sigma * math.sqrt(2 * math.log(2)), sigma) == pytest.approx(0.5, abs=1e-12)
    assert 0.0 < response_amplitude(30.0, 2.0) < 1e-40


@given(st.floats(0, 50), st.floats(0.01, 50), st.floats(0.1, 10), st.floats(0.01, 5))
def test_response_amplitude_decreasing_and_scale_invariant(d, sigma, c, step):
    assert response_amplitude(d + step, sigma) <= response_amplitude(d, sigma)
    assert response_amplitude(c * d, c * sigma) == pytest.approx(response_amplitude(d, sigma), rel=1e-9, abs=1e-300)
    arr = response_amplitude(np.array([d]), sigma)
    assert arr[0] == pytest.approx(response_amplitude(d, sigma), rel=1e-12, abs=1e-300)


def test_sense_noiseless_reads_exact_amounts(rng):
    f = field(7, 7)
    f.amount[:] = np.arange(49).reshape(7, 7) / 7
    sensed = f.sense((3, 3), 2, 0.0, rng)
    assert len(sensed) == 24
    assert all(v == f[p] for p, v in sensed)
    assert (3, 3) not in [p for p, _ in sensed]


def test_sense_radius_one_interior_gives_eight_cells(rng):
    sensed = field(5, 5).sense((2, 2), 1, 0.0, rng)
    assert sorted(p for p, _ in sensed) == sorted(
        (2 + dx, 2 + dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1) if dx or dy)


def test_sense_clips_at_edges_and_wraps_on_torus(rng):
    assert len(field(5, 5).sense((0, 0), 1, 0.0, rng)) == 3
    wrapped = field(5, 5, Boundary.TOROIDAL).sense((0, 0), 1, 0.0, rng)
    assert len(wrapped) == 8 and ((4, 4), 0.0) in wrapped
    tiny = field(3, 3, Boundary.TOROIDAL).sense((1, 1), 3, 0.0, rng)
    assert len(tiny) == 8


def test_sense_noise_matches_half_normal_mean():
    # E[max(0, Z)] for Z ~ N(0, 1) is 1/sqrt(2 pi)
    f = field(3, 3)
    rng = np.random.default_rng(7)
    draws = np.concatenate([f.sense_arrays((1, 1), 1, 1.0, rng)[2] for _ in range(12500)])
    assert draws.size == 100_000
    assert abs(draws.mean() - 0.3989422804014327) <= 0.01
    assert draws.min() >= 0.0


def test_sense_reproducible_per_seed():
    f = field(6, 6)
    f.amount[:] = 1.0
    a = f.sense((2, 3), 2, 0.7, np.random.default_rng(3))
    b = f.sense((2, 3), 2, 0.7, np.random.default_rng(3))
    assert a == b


def test_snapshot_is_fixed_point_text():
    f = field(2, 1)
    f.amount[0] = [1.0, 1 / 3]
    assert f.snapshot() == "1.000000 0.333333\n"


@pytest.mark.parametrize("kw", [{"decay": 1.0}, {"decay": -0.1}, {"deposit_inc": 0}, {"amount_cap": -1}])
def test_params_validated(kw):
    with pytest.raises(ValueError):
        PheromoneParams(**kw)
