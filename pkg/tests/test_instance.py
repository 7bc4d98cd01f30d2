import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from lcbc.errors import BadDims, DimMismatch, FormatError
from lcbc.galois import make_field
from lcbc.instance import (
    TOY_BROADCAST,
    DataBatch,
    LcbcInstance,
    demands_batch,
    embed_instance,
    evaluate_demands,
    rng_for,
    sample_instance,
    toy_instance_f7,
)
from lcbc.sublinalg import FqMatrix, rank


def test_empty_instance():
    inst = sample_instance(make_field(2, 3), 0, 2, 1, 1, seed=0)
    assert inst.K == 0 and inst.v == () and inst.vprime == ()


def test_sampling_deterministic():
    F = make_field(2, 12)
    a = sample_instance(F, 4, 4, 1, 1, seed=7)
    b = sample_instance(F, 4, 4, 1, 1, seed=7)
    assert a.dumps() == b.dumps()
    assert a.dumps() != sample_instance(F, 4, 4, 1, 1, seed=8).dumps()


def test_sampling_order_is_side_information_first():
    F = make_field(5, 2)
    inst = sample_instance(F, 2, 3, 2, 1, seed=3)
    rng = rng_for(3)
    vp0 = rng.integers(0, 5, (3, 1, 2))
    v0 = rng.integers(0, 5, (3, 2, 2))
    assert np.array_equal(inst.vprime[0].data, vp0)
    assert np.array_equal(inst.v[0].data, v0)


def test_user_ranks_full_with_high_frequency():
    F = make_field(2, 12)
    full = total = 0
    for seed in range(250):
        inst = sample_instance(F, 4, 4, 1, 1, seed)
        for k in range(4):
            full += rank(inst.u(k)) == 2
            total += 1
    assert full / total >= 0.99


def test_bad_dims():
    F = make_field(2, 1)
    with pytest.raises(BadDims):
        sample_instance(F, 2, 0, 1, 1, 0)
    with pytest.raises(BadDims):
        sample_instance(F, 2, 3, -1, 1, 0)
    with pytest.raises(BadDims):
        sample_instance(F, 2, 3, [1, 2, 3], 1, 0)


def test_toy_instance_and_decode_rules():
    inst, scheme = toy_instance_f7()
    assert inst.K == 3 and inst.d == 4 and scheme.cost_q == 2
    F = inst.field
    x = FqMatrix.from_ints(F, np.ones((4, 1), dtype=int))
    view = evaluate_demands(inst, DataBatch(x))
    assert view.wprime[0].data[0, 0, 0] == 4
    # all 7^4 data vectors: the printed recombinations recover every demand
    X = np.array(np.meshgrid(*[range(7)] * 4, indexing="ij")).reshape(4, -1).T
    S1 = X @ np.array(TOY_BROADCAST[0]) % 7
    S2 = X @ np.array(TOY_BROADCAST[1]) % 7
    w = [X @ inst.v[k].data[:, 0, 0] % 7 for k in range(3)]
    wp = [X @ inst.vprime[k].data[:, 0, 0] % 7 for k in range(3)]
    assert np.array_equal(w[0], (2 * S1 - 3 * wp[0]) % 7)
    assert np.array_equal(w[1], (5 * S2 - 4 * wp[1]) % 7)
    assert np.array_equal(w[2], (S1 + S2) % 7)


def test_evaluate_demands_examples():
    F = make_field(3, 2)
    inst = sample_instance(F, 2, 3, 2, 1, seed=1)
    zero = evaluate_demands(inst, DataBatch(FqMatrix.zeros(F, 3, 2)))
    assert all(w.is_zero() for w in zero.w) and all(w.is_zero() for w in zero.wprime)
    one = LcbcInstance(F, 1, 1, (1,), (0,), (FqMatrix.identity(F, 1),), (FqMatrix.zeros(F, 1, 0),))
    x = FqMatrix.random(F, 1, 3, np.random.default_rng(0))
    assert evaluate_demands(one, DataBatch(x)).w[0] == x.T
    with pytest.raises(DimMismatch):
        evaluate_demands(inst, DataBatch(FqMatrix.zeros(F, 2, 1)))
    with pytest.raises(BadDims):
        DataBatch(FqMatrix.zeros(F, 3, 0))


def test_demands_batch_matches_matrix_products():
    F = make_field(2, 4)
    inst = sample_instance(F, 3, 4, 2, 1, seed=2)
    xs = F.random(np.random.default_rng(1), (10, 4))
    w, wp = demands_batch(inst, xs)
    for t in range(10):
        x = FqMatrix(F, xs[t][:, None, :])
        for k in range(3):
            assert np.array_equal(w[k][t], (x.T @ inst.v[k]).data[0])
            assert np.array_equal(wp[k][t], (x.T @ inst.vprime[k]).data[0])


@given(
    st.sampled_from([(2, 1), (7, 1), (2, 4), (3, 3)]),
    st.integers(0, 4),
    st.integers(1, 5),
    st.integers(0, 2**32),
    st.data(),
)
def test_instance_round_trip(pn, K, d, seed, data):
    F = make_field(*pn)
    m = data.draw(st.lists(st.integers(0, 3), min_size=K, max_size=K))
    mp = data.draw(st.lists(st.integers(0, 3), min_size=K, max_size=K))
    inst = sample_instance(F, K, d, m, mp, seed)
    back = LcbcInstance.loads(inst.dumps())
    assert back == inst
    assert back.dumps() == inst.dumps()


def test_malformed_instance():
    with pytest.raises(FormatError):
        LcbcInstance.from_json({"K": 1})


def test_sampling_uniformity():
    F = make_field(5, 1)
    inst = sample_instance(F, 1, 100, 100, 0, seed=0)
    counts = np.bincount(inst.v[0].data.ravel(), minlength=5)
    draws, prob = counts.sum(), 1 / 5
    sigma = np.sqrt(draws * prob * (1 - prob))
    assert draws == 10_000
    assert np.all(np.abs(counts - draws * prob) <= 5 * sigma)


def test_embed_instance_preserves_demands():
    small, big = make_field(2, 4), make_field(2, 8)
    inst = sample_instance(small, 2, 3, 1, 1, seed=0)
    E = embed_instance(inst, big)
    assert E.field == big and E.m == inst.m
    assert [rank(E.u(k)) for k in range(2)] == [rank(inst.u(k)) for k in range(2)]
    assert embed_instance(inst, small) is inst
