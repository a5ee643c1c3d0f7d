import math

import numpy as np
import pytest

from vendi.kernels import Kernel
from vendi.scenarios import (ScenarioSpec, correlated_classes, distinct_classes, evaluate_panel,
                             generate_scenario, missing_mode_sensitivity)
from vendi.scores import vendi_score

from conftest import brute_hill

QS = (0.1, 0.5, 1.0, 2.0, math.inf)


def test_generate_counts():
    items = generate_scenario(ScenarioSpec(distinct_classes([5, 5, 5])))
    assert len(items) == 15 and len(set(items)) == 3


def test_single_class_scores_one():
    spec = ScenarioSpec(distinct_classes([10]))
    for q in QS:
        assert vendi_score(generate_scenario(spec), spec.kernel, q).score == pytest.approx(1, abs=1e-12)


def test_noise_is_nested_across_levels():
    classes = distinct_classes([10] * 4)
    lo = generate_scenario(ScenarioSpec(classes, intra_class_noise=0.2), seed=3)
    hi = generate_scenario(ScenarioSpec(classes, intra_class_noise=0.6), seed=3)
    clean = generate_scenario(ScenarioSpec(classes), seed=3)
    changed_lo = {i for i, (a, b) in enumerate(zip(lo, clean)) if a != b}
    changed_hi = {i for i, (a, b) in enumerate(zip(hi, clean)) if a != b}
    assert changed_lo <= changed_hi


def test_panel_a_exact_class_count():
    for row in evaluate_panel("A", QS):
        for q in QS:
            assert row[repr(q) if not math.isinf(q) else "inf"] == pytest.approx(row["param"], abs=1e-8)


def test_panel_b_against_hill_oracle():
    rows = evaluate_panel("B", QS)
    last = rows[-1]
    p = np.array([20, 20, 1, 1]) / 42
    for q in QS:
        key = "inf" if math.isinf(q) else repr(q)
        assert last[key] == pytest.approx(brute_hill(p, q), abs=1e-8)
    assert last["1.0"] == pytest.approx(2.42, abs=0.01)
    assert last["0.1"] - last["1.0"] > 0.5


def test_panel_c_and_d_shapes():
    for panel in ("C", "D"):
        rows = evaluate_panel(panel, QS)
        for q in ("0.1", "1.0", "2.0"):
            vals = [r[q] for r in rows]
            assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
            assert vals[-1] > vals[0]


def test_correlated_classes_counts():
    assert sum(n for *_, n in correlated_classes(0.5)) == 48
    assert len(correlated_classes(1.0)) == 4
    # fully decorrelated: every shape meets every color equally often
    assert sorted(n for *_, n in correlated_classes(0.0)) == [3] * 16


def test_panel_e_inf_is_flattest():
    ranges = {}
    for q in QS:
        key = "inf" if math.isinf(q) else repr(q)
        vals = [r[key] for r in evaluate_panel("E", QS, seed=0)]
        ranges[q] = max(vals) - min(vals)
    assert ranges[math.inf] == min(ranges.values())


def test_partial_weight_above_half_is_indefinite():
    from vendi.spectrum import IndefiniteKernelError
    s, c = ("square", "circle", "triangle"), ("black", "red", "blue")
    items = [(s[0], c[0]), (s[0], c[1]), (s[1], c[0]), (s[1], c[1])]
    with pytest.raises(IndefiniteKernelError):
        vendi_score(items, Kernel("shape-color", partial_match_weight=1.0), 1)
    vendi_score(items, Kernel("shape-color", partial_match_weight=0.5), 1)


def test_missing_mode_identity_and_ordering():
    k = Kernel("shape-color")
    full = generate_scenario(ScenarioSpec(distinct_classes([33, 33, 33, 1])))
    same = missing_mode_sensitivity(full, full, k, QS)
    assert all(v == 0.0 for v in same.values())
    drop = missing_mode_sensitivity(full, full[:-1], k, QS)
    assert drop[0.5] > drop[math.inf] and drop[1.0] > drop[math.inf]
    for q in QS:
        a = brute_hill(np.array([33, 33, 33, 1]) / 100, q)
        b = brute_hill(np.array([33, 33, 33]) / 99, q)
        assert drop[q] == pytest.approx(100 * (a - b) / a, abs=1e-8)


def test_unknown_panel():
    with pytest.raises(ValueError):
        evaluate_panel("Q", QS)
