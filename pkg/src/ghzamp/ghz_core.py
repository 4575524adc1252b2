"""The GHZ game: legal inputs, win predicate, classical strategies."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product

import numpy as np

from .quantum_oracle import LEGAL_INPUTS, honest_table

# The four one-bit functions, as (f(0), f(1)).
ONE_BIT_FUNCTIONS = ((0, 0), (1, 1), (0, 1), (1, 0))
CONSTANT_ZERO, CONSTANT_ONE, IDENTITY, NEGATION = ONE_BIT_FUNCTIONS


def is_constant(f) -> bool:
    return f[0] == f[1]


@dataclass(frozen=True)
class RoundInput:
    """Inputs of one round, selected by the source pair ``(r1, r2)``.

    Only the encoding x = r1, y = r2, z = r1 ^ r2 ^ 1 is representable, which
    makes every instance one of the legal triples 111, 001, 010, 100.
    """

    r1: int
    r2: int

    def __post_init__(self):
        if self.r1 not in (0, 1) or self.r2 not in (0, 1):
            raise ValueError(f"source pair must be bits, got {(self.r1, self.r2)}")

    @classmethod
    def from_label(cls, label: int) -> "RoundInput":
        """``label`` is the pair read as a 2-bit number, ``2*r1 + r2``."""
        return cls(label >> 1, label & 1)

    @classmethod
    def from_xyz(cls, x: int, y: int, z: int) -> "RoundInput":
        inp = cls(x, y)
        if inp.z != z:
            raise ValueError(f"{x}{y}{z} is not a legal input")
        return inp

    @property
    def x(self) -> int:
        return self.r1

    @property
    def y(self) -> int:
        return self.r2

    @property
    def z(self) -> int:
        return self.r1 ^ self.r2 ^ 1

    @property
    def xyz(self) -> tuple[int, int, int]:
        return (self.x, self.y, self.z)

    @property
    def label(self) -> int:
        return 2 * self.r1 + self.r2

    @property
    def target(self) -> int:
        """Required output parity, x AND y AND z."""
        return self.x & self.y & self.z

    def __str__(self):
        return "".join(map(str, self.xyz))


@dataclass(frozen=True)
class RoundOutput:
    a: int
    b: int
    c: int

    @property
    def abc(self) -> tuple[int, int, int]:
        return (self.a, self.b, self.c)

    @property
    def parity(self) -> int:
        return self.a ^ self.b ^ self.c

    def __str__(self):
        return f"{self.a}{self.b}{self.c}"


def win(inp: RoundInput, out: RoundOutput) -> bool:
    return out.parity == inp.target


@dataclass(frozen=True)
class LocalStrategy:
    """Deterministic classical play: one table ``(f(0), f(1))`` per box."""

    tables: tuple[tuple[int, int], tuple[int, int], tuple[int, int]]

    def __post_init__(self):
        if len(self.tables) != 3 or any(len(t) != 2 for t in self.tables):
            raise ValueError("need three two-entry tables")
        object.__setattr__(self, "tables", tuple(tuple(t) for t in self.tables))

    def respond(self, inp: RoundInput) -> RoundOutput:
        f, g, h = self.tables
        return RoundOutput(f[inp.x], g[inp.y], h[inp.z])

    def wins(self, inp: RoundInput) -> bool:
        return win(inp, self.respond(inp))

    def score(self) -> Fraction:
        won = sum(self.wins(RoundInput.from_xyz(*xyz)) for xyz in LEGAL_INPUTS)
        return Fraction(won, len(LEGAL_INPUTS))


@lru_cache(maxsize=1)
def all_local_strategies() -> tuple[LocalStrategy, ...]:
    return tuple(
        LocalStrategy(tables) for tables in product(ONE_BIT_FUNCTIONS, repeat=3)
    )


def classical_win_value() -> tuple[Fraction, list[LocalStrategy]]:
    """Best winning fraction over all 64 deterministic strategies.

    Mixed strategies are convex combinations of these, so the maximum is the
    classical value of the game.
    """
    scored = [(s.score(), s) for s in all_local_strategies()]
    best = max(score for score, _ in scored)
    return best, [s for score, s in scored if score == best]


def strategies_winning(inputs) -> list[LocalStrategy]:
    """All deterministic strategies that win on every input in ``inputs``."""
    inputs = list(inputs)
    return [s for s in all_local_strategies() if all(s.wins(i) for i in inputs)]


def honest_round_sample(inp: RoundInput, rng: np.random.Generator) -> RoundOutput:
    """Draw ``abc`` from the honest GHZ correlation table."""
    row = honest_table().row(inp.xyz)
    k = int(rng.choice(8, p=row))
    return RoundOutput(k >> 2, (k >> 1) & 1, k & 1)
