"""Three-qubit statevector oracle for the honest GHZ devices.

The honest correlation table P(abc|xyz) is derived here from the Born rule
instead of being typed in, so the rest of the package can check itself
against first-principles amplitudes.

Outcome triples are indexed as ``4*a + 2*b + c``; the same MSB-first order is
used for basis states ``|abc>``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

ATOL = 1e-12

_INV_SQRT2 = 1 / np.sqrt(2)

# Rows are the +1 and -1 eigenvectors.
_EIGENBASES = {
    "X": np.array([[1, 1], [1, -1]], dtype=complex) * _INV_SQRT2,
    "Y": np.array([[1, 1j], [1, -1j]], dtype=complex) * _INV_SQRT2,
    "Z": np.array([[1, 0], [0, 1]], dtype=complex),
}

LEGAL_INPUTS = ((1, 1, 1), (0, 0, 1), (0, 1, 0), (1, 0, 0))


@dataclass(frozen=True)
class StateVector3:
    """Pure state of three qubits, amplitudes indexed by ``|abc>``."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (8,):
            raise ValueError(f"need 8 amplitudes, got {amps.shape[0]}")
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def amplitude(self, bits: str) -> complex:
        return complex(self.amplitudes[int(bits, 2)])

    @classmethod
    def basis(cls, bits: str) -> "StateVector3":
        amps = np.zeros(8, dtype=complex)
        amps[int(bits, 2)] = 1.0
        return cls(amps)


@dataclass(frozen=True)
class MeasurementSetting:
    """Product measurement: one Pauli basis and one bit convention per qubit.

    ``flips[k]`` swaps the eigenvalue-to-bit map of qubit ``k``: by default
    eigenvalue +1 reads as bit 0 and -1 as bit 1.
    """

    bases: tuple[str, str, str]
    flips: tuple[bool, bool, bool] = (False, False, False)

    def __post_init__(self):
        if len(self.bases) != 3 or len(self.flips) != 3:
            raise ValueError("a setting needs exactly three per-qubit entries")
        for b in self.bases:
            if b not in _EIGENBASES:
                raise ValueError(f"unknown basis {b!r}")


def ghz_state() -> StateVector3:
    amps = np.zeros(8, dtype=complex)
    amps[0b000] = amps[0b111] = _INV_SQRT2
    return StateVector3(amps)


def measure(state: StateVector3, setting: MeasurementSetting) -> np.ndarray:
    """Born-rule distribution of the 8 outcome triples.

    Returns an array ``p`` with ``p[4*a + 2*b + c]`` the probability of reading
    bits ``(a, b, c)``.
    """
    if abs(state.norm - 1.0) > ATOL:
        raise ValueError(f"state is not normalized (norm {state.norm!r})")
    psi = state.amplitudes.reshape(2, 2, 2)
    u = [_EIGENBASES[b].conj() for b in setting.bases]
    # amp[e0, e1, e2] = <v_e0 v_e1 v_e2 | psi>, e = 0 for eigenvalue +1
    amp = np.einsum("ai,bj,ck,ijk->abc", u[0], u[1], u[2], psi)
    probs = np.abs(amp) ** 2
    for axis, flip in enumerate(setting.flips):
        if flip:
            probs = np.flip(probs, axis=axis)
    return probs.reshape(8)


def calibrated_setting(x: int, y: int, z: int) -> MeasurementSetting:
    """Input bit 1 measures X, input bit 0 measures Y; box C reads flipped bits."""
    basis = {1: "X", 0: "Y"}
    return MeasurementSetting(
        bases=(basis[x], basis[y], basis[z]), flips=(False, False, True)
    )


def literal_setting(x: int, y: int, z: int) -> MeasurementSetting:
    """sigma_x on input 0 and sigma_y on input 1 with the plain bit map.

    Kept to document that this assignment does not win the game with the
    legal input set {111, 001, 010, 100}.
    """
    basis = {0: "X", 1: "Y"}
    return MeasurementSetting(bases=(basis[x], basis[y], basis[z]))


class CorrelationTable:
    """Map from legal input triple to the 8-entry outcome distribution."""

    def __init__(self, rows: dict[tuple[int, int, int], np.ndarray]):
        if set(rows) != set(LEGAL_INPUTS):
            raise ValueError("table must have one row per legal input")
        frozen = {}
        for xyz, row in rows.items():
            row = np.array(row, dtype=float).reshape(8)
            if np.any(row < -ATOL) or abs(row.sum() - 1.0) > ATOL:
                raise ValueError(f"row {xyz} is not a probability vector")
            row = np.clip(row, 0.0, None)
            row.flags.writeable = False
            frozen[tuple(xyz)] = row
        self._rows = frozen

    def row(self, xyz) -> np.ndarray:
        return self._rows[tuple(xyz)]

    def __getitem__(self, xyz) -> np.ndarray:
        return self.row(xyz)

    def items(self):
        return self._rows.items()

    def prob(self, xyz, abc) -> float:
        a, b, c = abc
        return float(self._rows[tuple(xyz)][4 * a + 2 * b + c])

    def marginal(self, xyz, boxes) -> np.ndarray:
        """Distribution of the outputs of ``boxes`` (sorted tuple of 0..2)."""
        t = self._rows[tuple(xyz)].reshape(2, 2, 2)
        drop = tuple(k for k in range(3) if k not in boxes)
        return t.sum(axis=drop).reshape(-1) if drop else t.reshape(-1)

    def win_probability(self, xyz) -> float:
        x, y, z = xyz
        target = x & y & z
        return float(
            sum(
                self.prob(xyz, abc)
                for abc in product((0, 1), repeat=3)
                if abc[0] ^ abc[1] ^ abc[2] == target
            )
        )

    def is_no_signaling(self, atol: float = ATOL) -> bool:
        """Every box's marginal depends on its own input only."""
        for box in range(3):
            seen = {}
            for xyz in LEGAL_INPUTS:
                m = self.marginal(xyz, (box,))
                prev = seen.setdefault(xyz[box], m)
                if not np.allclose(prev, m, atol=atol, rtol=0):
                    return False
        return True

    def allclose(self, other: "CorrelationTable", atol: float = ATOL) -> bool:
        return all(
            np.allclose(self.row(xyz), other.row(xyz), atol=atol, rtol=0)
            for xyz in LEGAL_INPUTS
        )


def table_for(convention, state: StateVector3 | None = None) -> CorrelationTable:
    """Correlation table of ``state`` (GHZ by default) under a setting rule."""
    state = ghz_state() if state is None else state
    return CorrelationTable(
        {xyz: measure(state, convention(*xyz)) for xyz in LEGAL_INPUTS}
    )


@lru_cache(maxsize=1)
def honest_table() -> CorrelationTable:
    return table_for(calibrated_setting)


def analytic_table() -> CorrelationTable:
    """Uniform-on-coset rows: odd parity for 111, even parity otherwise."""
    odd = np.array([bin(i).count("1") % 2 for i in range(8)], dtype=float)
    rows = {
        xyz: (odd if xyz == (1, 1, 1) else 1.0 - odd) / 4.0 for xyz in LEGAL_INPUTS
    }
    return CorrelationTable(rows)
