from itertools import product

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ghzamp.quantum_oracle import (
    LEGAL_INPUTS,
    MeasurementSetting,
    StateVector3,
    analytic_table,
    calibrated_setting,
    ghz_state,
    honest_table,
    literal_setting,
    measure,
    table_for,
)

PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def projector_probs(state, setting):
    """Independent route: expectation of Kronecker products of spectral projectors."""
    psi = state.amplitudes
    out = np.zeros(8)
    for a, b, c in product((0, 1), repeat=3):
        op = np.eye(1)
        for bit, basis, flip in zip((a, b, c), setting.bases, setting.flips):
            e = bit ^ int(flip)  # eigenvalue index: 0 for +1
            op = np.kron(op, (np.eye(2) + (-1) ** e * PAULI[basis]) / 2)
        out[4 * a + 2 * b + c] = np.real(psi.conj() @ op @ psi)
    return out


@pytest.mark.parametrize("xyz", LEGAL_INPUTS)
def test_table_matches_projector_oracle(xyz):
    setting = calibrated_setting(*xyz)
    np.testing.assert_allclose(honest_table().row(xyz), projector_probs(ghz_state(), setting), atol=1e-12)


@pytest.mark.parametrize("xyz", LEGAL_INPUTS)
def test_honest_devices_always_win(xyz):
    assert honest_table().win_probability(xyz) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("xyz", LEGAL_INPUTS)
def test_ab_marginal_uniform(xyz):
    np.testing.assert_allclose(honest_table().marginal(xyz, (0, 1)), [0.25] * 4, atol=1e-12)


def test_matches_coset_table():
    assert honest_table().allclose(analytic_table())


def test_no_signaling():
    assert honest_table().is_no_signaling()


def test_literal_assignment_loses_on_111():
    t = table_for(literal_setting)
    assert t.win_probability((1, 1, 1)) == pytest.approx(0.5, abs=1e-12)


def test_ghz_amplitudes():
    s = ghz_state()
    assert s.amplitude("000") == pytest.approx(2**-0.5)
    assert s.amplitude("111") == pytest.approx(2**-0.5)
    assert s.amplitude("010") == 0


def test_z_measurement_of_basis_state():
    p = measure(StateVector3.basis("101"), MeasurementSetting(("Z", "Z", "Z")))
    assert p[0b101] == pytest.approx(1.0)


def test_flip_swaps_bits():
    p = measure(StateVector3.basis("000"), MeasurementSetting(("Z", "Z", "Z"), (True, False, True)))
    assert p[0b101] == pytest.approx(1.0)


def test_rejects_unnormalized_state():
    with pytest.raises(ValueError):
        measure(StateVector3(np.ones(8)), calibrated_setting(1, 1, 1))


def test_rejects_bad_settings():
    with pytest.raises(ValueError):
        MeasurementSetting(("X", "Q", "Y"))
    with pytest.raises(ValueError):
        StateVector3(np.ones(4))


amplitude = st.tuples(st.floats(-1, 1), st.floats(-1, 1))


@given(st.lists(amplitude, min_size=8, max_size=8), st.tuples(*[st.sampled_from("XYZ")] * 3),
       st.tuples(*[st.booleans()] * 3))
def test_born_rule_is_a_distribution(amps, bases, flips):
    v = np.array([complex(r, i) for r, i in amps])
    if np.linalg.norm(v) < 1e-3:
        v[0] = 1.0
    state = StateVector3(v / np.linalg.norm(v))
    setting = MeasurementSetting(bases, flips)
    p = measure(state, setting)
    assert p.min() >= -1e-12
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(p, projector_probs(state, setting), atol=1e-12)
