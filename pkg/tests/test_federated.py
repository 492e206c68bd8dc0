import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sealci.federated import (
    FEATURE_DIM,
    N_ACTIONS,
    Transition,
    aggregate,
    apply_update,
    featurize,
    federated_round,
    gradient_check_csv,
    local_gradient,
    param_dim,
    params_from_csv,
    params_to_csv,
    q_value,
    q_values,
    td_loss,
)
from sealci.views import LocalView

finite = st.floats(-5, 5, allow_nan=False)


def vec(n):
    return st.lists(finite, min_size=n, max_size=n).map(np.array)


def random_batch(rng, size, dim=FEATURE_DIM):
    return [Transition(rng.normal(size=dim), int(rng.integers(N_ACTIONS)), float(rng.normal()),
                       rng.normal(size=dim), bool(rng.random() < 0.2)) for _ in range(size)]


def test_featurize_examples():
    zero = featurize(LocalView(False, (0, 0, 0, 0), 0))
    assert zero.shape == (14,) and zero.sum() == 1 and zero[5] == 1
    lab = featurize(LocalView(True, (0, 0, 0, 0), 0))
    assert lab.sum() == 2 and lab[0] == 1


def test_q_value_basis_and_zero():
    x = np.arange(FEATURE_DIM, dtype=float)
    assert all(q_value(np.zeros(param_dim()), x, a) == 0 for a in range(N_ACTIONS))
    p = np.zeros(param_dim())
    p[2 * FEATURE_DIM + 7] = 1.0
    assert q_value(p, x, 2) == x[7]
    assert [q_value(p, x, a) for a in range(N_ACTIONS) if a != 2] == [0.0] * 4


@given(st.integers(0, 2**32))
def test_q_value_matches_dot_product(seed):
    rng = np.random.default_rng(seed)
    p, x = rng.normal(size=param_dim()), rng.normal(size=FEATURE_DIM)
    a = int(rng.integers(N_ACTIONS))
    expected = sum(p[a * FEATURE_DIM + j] * x[j] for j in range(FEATURE_DIM))
    assert q_value(p, x, a) == pytest.approx(expected, rel=1e-12, abs=1e-12)
    assert np.allclose(q_values(p, x), [q_value(p, x, b) for b in range(N_ACTIONS)])


def test_q_value_dimension_mismatch():
    with pytest.raises(ValueError):
        q_value(np.zeros(param_dim()), np.zeros(13), 0)


def test_gradient_zero_at_td_fixed_point():
    x = np.eye(FEATURE_DIM)[3]
    p = np.zeros(param_dim())
    p[1 * FEATURE_DIM + 3] = 2.0
    batch = [Transition(x, 1, 2.0, x, terminal=True)]
    assert not local_gradient(p, batch, 0.9).any()


def test_single_transition_gradient_closed_form():
    rng = np.random.default_rng(0)
    t = random_batch(rng, 1)[0]
    p = rng.normal(size=param_dim())
    target = t.reward + (0 if t.terminal else 0.9 * q_values(p, t.next_features).max())
    delta = target - q_value(p, t.features, t.action)
    expected = np.zeros(param_dim())
    expected[t.action * FEATURE_DIM:(t.action + 1) * FEATURE_DIM] = -2 * delta * t.features
    assert np.allclose(local_gradient(p, [t], 0.9), expected, rtol=1e-13, atol=1e-13)


def fd_max_rel_error(p, batch, gamma, h=1e-6):
    grad = local_gradient(p, batch, gamma)
    fd = np.empty_like(p)
    for i in range(p.size):
        e = np.zeros_like(p)
        e[i] = h
        fd[i] = (td_loss(p + e, batch, gamma, p) - td_loss(p - e, batch, gamma, p)) / (2 * h)
    # norm-wise: per-entry ratios are dominated by rounding noise on near-zero entries
    scale = max(np.linalg.norm(fd), np.linalg.norm(grad))
    return float(np.linalg.norm(grad - fd) / scale) if scale > 0 else 0.0


def test_gradient_matches_finite_differences_on_100_instances():
    rng = np.random.default_rng(2024)
    rows = []
    for i in range(100):
        batch = random_batch(rng, int(rng.integers(1, 6)))
        p = rng.normal(size=param_dim())
        err = fd_max_rel_error(p, batch, float(rng.uniform(0, 1)))
        rows.append((i, err))
    assert max(e for _, e in rows) <= 1e-5
    assert gradient_check_csv(rows).startswith("instance,max_rel_error\n0,")


def test_aggregate_examples():
    g = np.array([0.1, -2.5, 3.3])
    assert np.array_equal(aggregate([g] * 7), g)
    assert np.array_equal(aggregate([g, -g]), np.zeros(3))
    with pytest.raises(ValueError):
        aggregate([])
    with pytest.raises(ValueError):
        aggregate([g, np.zeros(2)])


@given(st.lists(vec(6), min_size=1, max_size=8), st.randoms())
def test_aggregate_permutation_invariant_and_exact(grads, rnd):
    shuffled = list(grads)
    rnd.shuffle(shuffled)
    assert np.array_equal(aggregate(grads), aggregate(shuffled))
    assert np.array_equal(aggregate(grads[:1]), grads[0])
    assert np.allclose(aggregate(grads), np.mean(grads, axis=0), rtol=1e-12, atol=1e-12)


@given(st.lists(vec(4), min_size=2, max_size=5), st.lists(vec(4), min_size=2, max_size=5), st.floats(-3, 3))
def test_aggregate_is_linear(a, b, c):
    k = min(len(a), len(b))
    a, b = a[:k], b[:k]
    lhs = aggregate([x + c * y for x, y in zip(a, b)])
    assert np.allclose(lhs, aggregate(a) + c * aggregate(b), atol=1e-9)


def test_federated_round_equals_union_batch_gradient():
    # dyadic values keep every sum exact, so the two routes agree bit for bit
    rng = np.random.default_rng(1)

    def dyadic(n):
        return rng.integers(-8, 9, size=n) / 4.0

    batches = [[Transition(dyadic(FEATURE_DIM), int(rng.integers(5)), float(dyadic(1)[0]),
                           dyadic(FEATURE_DIM), True) for _ in range(2)] for _ in range(4)]
    p = dyadic(param_dim())
    union = [t for b in batches for t in b]
    assert np.array_equal(federated_round(p, batches, 0.5, 0.25),
                          apply_update(p, local_gradient(p, union, 0.5), 0.25))


def test_apply_update_examples():
    p = np.array([1.0, -2.0])
    g = np.array([0.5, 4.0])
    assert np.array_equal(apply_update(p, np.zeros(2), 0.3), p)
    assert np.array_equal(apply_update(np.zeros(2), g, 1.0), -g)


def test_gradient_descent_on_fixed_quadratic_is_monotone():
    rng = np.random.default_rng(3)
    batch = [Transition(rng.normal(size=FEATURE_DIM), int(rng.integers(5)), float(rng.normal()),
                        np.zeros(FEATURE_DIM), True) for _ in range(20)]
    p = rng.normal(size=param_dim())
    losses = []
    for _ in range(100):
        losses.append(td_loss(p, batch, 0.9))
        p = apply_update(p, local_gradient(p, batch, 0.9), 0.01)
    assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))
    assert np.isfinite(p).all()


@given(vec(param_dim()))
def test_params_csv_roundtrip(p):
    p = np.round(p, 6)
    text = params_to_csv(p)
    assert text.split("\n")[0].split(",")[-1] == f"p{param_dim() - 1}"
    assert np.allclose(params_from_csv(text), p, atol=5e-7)
