import json
import math
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

import pytest
from hypothesis import given, strategies as st

from ghzamp import engine
from ghzamp.adversary import (
    DISHONEST,
    HONEST,
    MEASURE,
    THRESHOLDS,
    AttackTree,
    XorSetStrategy,
    alternating_source,
    augmented_alternating_source,
    build_alternating_tree,
    build_resend_tree,
    build_risking_tree,
    cheat_bias_bound,
    cheatable_mass,
    constant_balanced_check,
    guess_success,
    resend_bias_binomial,
    resend_bias_bruteforce,
    resend_bias_closed_form,
    resend_source,
    superset_alternating_source,
    target_leaf_count,
    zero_error_attack,
)
from ghzamp.ghz_core import ONE_BIT_FUNCTIONS, LocalStrategy, is_constant
from ghzamp.randsource import SourceTree


def test_threshold_values():
    assert round(THRESHOLDS.r_trivial, 6) == 0.792481
    assert round(THRESHOLDS.r_max, 6) == 0.830482
    assert round(THRESHOLDS.r_H, 6) == 0.896241


@pytest.mark.parametrize("n,alt,res", [(2, 12, 10), (4, 144, 100), (6, 1728, 1000)])
def test_leaf_counts(n, alt, res):
    assert alternating_source(n).n_leaves == alt
    assert resend_source(n).n_leaves == res


@pytest.mark.parametrize("n", [2, 4, 6, 8])
def test_resend_rate_is_r_max(n):
    assert resend_source(n).min_entropy_rate() == pytest.approx(THRESHOLDS.r_max, abs=1e-9)
    assert alternating_source(n).min_entropy_rate() == pytest.approx(THRESHOLDS.r_H, abs=1e-9)


def test_odd_rounds_rejected():
    with pytest.raises(ValueError):
        alternating_source(3)


def test_cheatable_mass_examples():
    assert cheatable_mass(alternating_source(4)) == 1
    assert cheatable_mass(build_resend_tree(4)) == 1
    assert cheatable_mass(SourceTree.uniform(2)) == 0


def test_bound_examples():
    assert cheat_bias_bound(THRESHOLDS.r_H + 0.05, 20) == pytest.approx(0.125)
    assert cheat_bias_bound(THRESHOLDS.r_H + 0.1, 50) == pytest.approx(2**-11)
    assert cheat_bias_bound(THRESHOLDS.r_H + 1e-9, 4) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        cheat_bias_bound(THRESHOLDS.r_H, 4)
    assert guess_success(THRESHOLDS.r_H, 10) == 1.0
    assert guess_success(THRESHOLDS.r_H + 0.05, 20) == pytest.approx(0.25)
    assert guess_success(THRESHOLDS.r_H + 0.1, 10) == pytest.approx(0.25)


def test_attack_kinds_on_alternating_tree():
    a = build_alternating_tree(4)
    assert a.kinds[()] == HONEST and a.kinds[(0,)] == DISHONEST
    assert a.directive(()) is MEASURE
    assert a.directive((3,)).sources == (0,)


def test_resend_tree_replays_round():
    a = build_resend_tree(2)
    for lab in range(4):
        d = a.directive((lab,))
        assert d.sources == (0,) and d.residual.tables[2] == (0, 0)


def test_attack_tree_validation():
    t = SourceTree.uniform(1)
    with pytest.raises(ValueError):
        AttackTree(t, {(): DISHONEST}, {(): XorSetStrategy(0)})
    with pytest.raises(ValueError):
        AttackTree(t, {}, {})
    with pytest.raises(ValueError):
        XorSetStrategy(1, (1,))


def test_attack_tree_json():
    doc = build_risking_tree(build_alternating_tree(2)).to_json()
    json.dumps(doc)
    assert doc["root"]["type"] == HONEST
    child = doc["root"]["children"][0]
    assert child["type"] == DISHONEST and child["abort_edge"]
    assert child["strategy"]["kind"] == "xor_set"


@lru_cache(maxsize=None)
def best_weight(depth, n, open_rounds):
    """Largest sum over leaves of 2**-(open honest rounds) for any attack shape."""
    if depth == n:
        return Fraction(1, 2**open_rounds)
    honest = 4 * best_weight(depth + 1, n, open_rounds + 1)
    dishonest = 3 * best_weight(depth + 1, n, max(open_rounds - 1, 0))
    return max(honest, dishonest)


@pytest.mark.parametrize("n", [2, 4, 6, 8, 10])
def test_weight_sum_dp_oracle(n):
    assert best_weight(0, n, 0) == 12 ** (n // 2)


def open_weight(attack):
    """Sum over leaves of 2**-u, u = honest rounds the attack leaves uncancelled."""
    total = Fraction(0)

    def visit(prefix, v, open_rounds):
        nonlocal total
        if v.is_leaf:
            total += Fraction(1, 2 ** len(open_rounds))
            return
        j = len(prefix)
        if attack.kinds[prefix] == HONEST:
            nxt = open_rounds | {j}
        else:
            nxt = open_rounds - set(attack.directive(prefix).sources)
        for lab, (_, c) in v.children.items():
            visit(prefix + (lab,), c, nxt)

    visit((), attack.tree.root, frozenset())
    return total


@pytest.mark.parametrize("n,eps", [(2, 0.05), (4, 0.05), (4, 0.1), (6, 0.05)])
def test_flat_sources_above_r_h(n, eps):
    src = augmented_alternating_source(n, eps)
    assert src.n_leaves >= target_leaf_count(n, eps)
    assert src.min_entropy_rate() >= THRESHOLDS.r_H + eps - 1e-12
    base = {p for p, _ in alternating_source(n).leaves()}
    assert base <= {p for p, _ in src.leaves()}
    bound = 2.0 ** (-2 * eps * n)
    assert cheatable_mass(src) <= bound + 1e-9
    assert cheatable_mass(src, rule="support") <= bound + 1e-9
    attack = zero_error_attack(src)
    weight = open_weight(attack)
    assert weight <= 12 ** (n // 2)
    report = engine.run_exact(engine.ProtocolConfig(n, src, attack.devices()))
    assert report.abort_prob == 0
    assert report.bias <= weight / (2 * src.n_leaves)
    assert report.bias <= cheat_bias_bound(THRESHOLDS.r_H + eps, n) + 1e-9


@given(st.integers(0, 1000))
def test_random_supersets_meet_bound(seed):
    n, eps = 4, 0.05
    src = superset_alternating_source(n, eps, seed)
    assert cheatable_mass(src) <= 2 ** (-2 * eps * n) + 1e-9
    attack = zero_error_attack(src)
    report = engine.run_exact(engine.ProtocolConfig(n, src, attack.devices()))
    assert report.abort_prob == 0
    assert report.bias <= open_weight(attack) / (2 * src.n_leaves)


def test_rate_above_one_is_impossible():
    with pytest.raises(ValueError):
        target_leaf_count(4, 0.2)


@pytest.mark.parametrize("n", [2, 4])
def test_risking_tree_survival(n):
    risky = build_risking_tree(build_alternating_tree(n))
    assert risky.n_leaves == 16 ** (n // 2)
    report = engine.run_exact(engine.ProtocolConfig(n, risky.tree, risky.devices()))
    assert 1 - report.abort_prob == Fraction(12 ** (n // 2), 16 ** (n // 2))
    assert report.bias == Fraction(1, 2)


def test_partial_risking_tree():
    base = build_alternating_tree(2)
    risky = build_risking_tree(base, vertices=[(3,)])
    assert risky.n_leaves == 13
    report = engine.run_exact(engine.ProtocolConfig(2, risky.tree, risky.devices()))
    # leaf-uniform over 13 leaves, one of which aborts
    assert report.abort_prob == Fraction(1, 13)
    with pytest.raises(ValueError):
        build_risking_tree(base, vertices=[()])


@pytest.mark.parametrize("k", range(1, 7))
def test_appendix_bias_all_subsets(k):
    for s in range(k + 1):
        expected = resend_bias_closed_form(k, s)
        for S in combinations(range(1, k + 1), s):
            assert resend_bias_bruteforce(k, S) == expected


@pytest.mark.parametrize("s", range(1, 9))
def test_binomial_sum_matches_block_formula(s):
    expected = Fraction(1, 2 ** (s + 1)) if s % 2 == 0 else Fraction(1, 2**s)
    assert resend_bias_binomial(s) == expected == resend_bias_closed_form(s, s)


def test_bruteforce_rejects_bad_subsets():
    with pytest.raises(ValueError):
        resend_bias_bruteforce(3, [0])
    with pytest.raises(ValueError):
        resend_bias_closed_form(3, 4)


def test_constant_balanced_table():
    consistent = [(f, g) for f in ONE_BIT_FUNCTIONS for g in ONE_BIT_FUNCTIONS if constant_balanced_check(f, g)]
    assert len(consistent) == 8
    for f in ONE_BIT_FUNCTIONS:
        for g in ONE_BIT_FUNCTIONS:
            assert constant_balanced_check(f, g) == (is_constant(f) == is_constant(g))
