import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vendi.kernels import Kernel, build_kernel_matrix
from vendi.scores import (as_order, hill_number, kernel_spectrum, renyi_exponential,
                          score_profile, vendi_score, vendi_score_from_embeddings,
                          vendi_score_from_spectrum)
from vendi.spectrum import Spectrum, eigenvalues

from conftest import block_kernel, brute_hill

QS = (0.0, 0.1, 0.5, 1.0, 1.5, 2.0, math.inf)
P3 = (0.5, 0.25, 0.25)


def test_renyi_examples():
    assert renyi_exponential(P3, 1) == pytest.approx(2 * math.sqrt(2), abs=1e-14)
    assert renyi_exponential(P3, 2) == pytest.approx(8 / 3, abs=1e-14)
    assert renyi_exponential(P3, math.inf) == 2.0
    for n in (1, 3, 17):
        for q in QS:
            assert renyi_exponential(np.full(n, 1 / n), q) == pytest.approx(n, abs=1e-12)


def test_hill_examples():
    for q in QS:
        assert hill_number((1.0, 0.0), q) == 1.0
    assert hill_number(P3, 0) == 3.0
    assert hill_number((0.9, 0.1), 0.5) == pytest.approx((math.sqrt(0.9) + math.sqrt(0.1)) ** 2, abs=1e-14)
    assert hill_number((0.9, 0.1), 0.5) == pytest.approx(1.6, abs=1e-14)


def test_hill_rejects_bad_abundances():
    with pytest.raises(ValueError):
        hill_number((0.5, 0.4), 1)
    with pytest.raises(ValueError):
        hill_number((1.2, -0.2), 1)


def test_order_parsing():
    assert as_order("inf") == math.inf
    assert as_order("∞") == math.inf
    assert as_order("0.5") == 0.5
    with pytest.raises(ValueError):
        as_order(-1)


def test_shannon_limit_is_continuous():
    p = np.array([0.6, 0.3, 0.1])
    s1 = hill_number(p, 1.0)
    for eps in (1e-3, 1e-6, 1e-9, 1e-12):
        assert hill_number(p, 1 + eps) == pytest.approx(s1, rel=5 * eps + 1e-14)
        assert hill_number(p, 1 - eps) == pytest.approx(s1, rel=5 * eps + 1e-14)


def test_vendi_score_orthogonal_and_identical():
    k = Kernel("shape-color")
    distinct = [("square", "black"), ("circle", "red"), ("triangle", "blue"), ("star", "green")]
    for q in QS:
        assert vendi_score(distinct, k, q).score == pytest.approx(4, abs=1e-12)
        assert vendi_score([("star", "green")] * 6, k, q).score == pytest.approx(1, abs=1e-12)


def test_block_collection_values():
    k = Kernel("shape-color")
    items = [("square", "black")] * 3 + [("circle", "red")]
    assert vendi_score(items, k, 0.5).score == pytest.approx((math.sqrt(0.75) + math.sqrt(0.25)) ** 2, abs=1e-12)
    assert vendi_score(items, k, 1).score == pytest.approx(math.exp(0.5623351446188083), abs=1e-12)
    assert vendi_score(items, k, math.inf).score == pytest.approx(4 / 3, abs=1e-12)
    r = score_profile(items, k, [2, math.inf])
    assert r[0].score == pytest.approx(1.6, abs=1e-12)
    assert math.sqrt(r[0].score) <= r[1].score <= r[0].score


def test_score_from_spectrum_examples():
    one = Spectrum(np.array([1.0, 0, 0]), 1e-12, 1)
    uni = Spectrum(np.full(5, 0.2), 1e-12, 5)
    for q in QS:
        assert vendi_score_from_spectrum(one, q).score == 1.0
        assert vendi_score_from_spectrum(uni, q).score == pytest.approx(5, abs=1e-12)
    s = eigenvalues(block_kernel((3, 1)) / 4)
    assert vendi_score_from_spectrum(s, 2).score == pytest.approx(1.6, abs=1e-14)


def test_q0_flagged_uninformative():
    s = eigenvalues(block_kernel((3, 1)) / 4)
    assert vendi_score_from_spectrum(s, 0).flags == ("uninformative",)
    assert vendi_score_from_spectrum(s, 1).flags == ()


def test_embedding_examples(rng):
    for q in QS:
        assert vendi_score_from_embeddings(np.eye(7), q).score == pytest.approx(7, abs=1e-12)
        E = np.tile([0.6, 0.8, 0.0], (9, 1))
        assert vendi_score_from_embeddings(E, q).score == pytest.approx(1, abs=1e-12)


def test_embedding_path_matches_full_kernel(rng):
    E = rng.normal(size=(50, 8))
    E /= np.linalg.norm(E, axis=1, keepdims=True)
    full = kernel_spectrum(build_kernel_matrix(Kernel("linear"), E))
    for q in QS[1:]:
        ref = vendi_score_from_spectrum(full, q).score
        r = vendi_score_from_embeddings(E, q, m=8)
        assert r.method == "exact"
        assert r.score == pytest.approx(ref, abs=1e-8)


def test_embedding_projected_label(rng):
    E = rng.normal(size=(20, 6))
    E /= np.linalg.norm(E, axis=1, keepdims=True)
    r = vendi_score_from_embeddings(E, 1, m=3)
    assert r.method == "projected(3)"
    assert 1 <= r.score <= 3


def test_subsampled_matches_subset(rng):
    X = rng.normal(size=(30, 2))
    k = Kernel("rbf", gamma=0.5)
    r = vendi_score(X, k, 1, subsample=10, seed=4)
    assert r.method == "subsampled(10)"
    idx = np.sort(np.random.default_rng(4).choice(30, 10, replace=False))
    lam = np.clip(np.linalg.eigvalsh(build_kernel_matrix(k, X[idx]) / 10), 0, None)
    assert r.score == pytest.approx(brute_hill(lam / lam.sum(), 1), rel=1e-12)


def test_profile_keeps_requested_order():
    items = [("square", "black")] * 3 + [("circle", "red")]
    qs = [math.inf, 0.5, 2]
    assert [r.q for r in score_profile(items, Kernel("shape-color"), qs)] == qs


probabilities = st.lists(st.floats(1e-6, 1.0), min_size=1, max_size=12).map(
    lambda w: np.asarray(w) / math.fsum(w))
orders = st.sampled_from([0.0, 0.1, 0.3, 0.5, 0.9, 1.0, 1.1, 1.5, 2.0, 3.0, 7.0, math.inf])


@settings(max_examples=200, deadline=None)
@given(probabilities, orders)
def test_hill_matches_textbook_formula(p, q):
    p = p / math.fsum(p)
    assert hill_number(p, q) == pytest.approx(brute_hill(p, q), rel=1e-9)


@settings(max_examples=200, deadline=None)
@given(probabilities)
def test_profile_non_increasing_and_bounded(p):
    p = p / math.fsum(p)
    qs = [0.0, 0.1, 0.5, 1.0, 1.5, 2.0, 4.0, math.inf]
    vals = [hill_number(p, q) for q in qs]
    assert all(b <= a * (1 + 1e-10) for a, b in zip(vals, vals[1:]))
    assert 1 - 1e-12 <= vals[-1] and vals[0] <= len(p)
    vs2, vinf = vals[5], vals[-1]
    assert math.sqrt(vs2) <= vinf * (1 + 1e-10) and vinf <= vs2 * (1 + 1e-10)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 6), min_size=1, max_size=8), orders)
def test_block_kernel_scores_equal_hill(mults, q):
    K = block_kernel(mults)
    s = kernel_spectrum(K)
    p = np.asarray(mults) / sum(mults)
    np.testing.assert_allclose(s.eigenvalues[:len(mults)], np.sort(p)[::-1], atol=1e-10)
    assert vendi_score_from_spectrum(s, q).score == pytest.approx(brute_hill(p, q), abs=1e-8)
