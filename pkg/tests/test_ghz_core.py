from fractions import Fraction
from itertools import combinations, product

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ghzamp.ghz_core import (
    LocalStrategy,
    RoundInput,
    RoundOutput,
    all_local_strategies,
    classical_win_value,
    honest_round_sample,
    is_constant,
    strategies_winning,
    win,
)
from ghzamp.quantum_oracle import LEGAL_INPUTS


def test_encoding_yields_legal_inputs():
    assert {RoundInput.from_label(l).xyz for l in range(4)} == set(LEGAL_INPUTS)
    assert RoundInput(1, 1).xyz == (1, 1, 1)
    assert RoundInput(0, 0).xyz == (0, 0, 1)


def test_target_only_on_111():
    assert [RoundInput.from_label(l).target for l in range(4)] == [0, 0, 0, 1]


def test_illegal_input_rejected():
    with pytest.raises(ValueError):
        RoundInput.from_xyz(0, 0, 0)
    with pytest.raises(ValueError):
        RoundInput(2, 0)


def test_win_predicate():
    assert win(RoundInput(1, 1), RoundOutput(1, 0, 0))
    assert not win(RoundInput(1, 1), RoundOutput(1, 1, 0))
    assert win(RoundInput(0, 1), RoundOutput(1, 1, 0))


def test_classical_value_is_three_quarters():
    value, best = classical_win_value()
    assert value == Fraction(3, 4)
    # independent count with plain bit loops
    count = 0
    for bits in product((0, 1), repeat=6):
        f, g, h = bits[0:2], bits[2:4], bits[4:6]
        won = sum((f[x] ^ g[y] ^ h[z]) == (x & y & z) for x, y, z in LEGAL_INPUTS)
        assert won <= 3
        count += won == 3
    assert len(best) == count == 32


def test_sixty_four_strategies():
    assert len(set(all_local_strategies())) == 64


def test_any_three_inputs_are_classically_winnable():
    inputs = [RoundInput.from_label(l) for l in range(4)]
    for triple in combinations(inputs, 3):
        assert strategies_winning(triple)
    assert strategies_winning(inputs) == []


def test_strategy_validation():
    with pytest.raises(ValueError):
        LocalStrategy(((0, 0), (0, 1)))


def test_is_constant():
    assert is_constant((1, 1)) and not is_constant((0, 1))


@given(st.integers(0, 2**32 - 1), st.integers(0, 3))
def test_honest_sample_always_wins(seed, label):
    rng = np.random.default_rng(seed)
    inp = RoundInput.from_label(label)
    for _ in range(5):
        assert win(inp, honest_round_sample(inp, rng))
