"""Hadamard (inner-product) two-source extractor and closeness checks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .randsource import PROB_ATOL, CondDistribution, min_entropy

EXACT_CAP = 12


def _as_bits(v) -> np.ndarray:
    if isinstance(v, str):
        return np.array([int(ch) for ch in v], dtype=np.int64)
    return np.asarray(v, dtype=np.int64).reshape(-1)


def hadamard(a, b) -> int:
    """Inner product mod 2 of two equal-length bit vectors (or bit strings)."""
    a, b = _as_bits(a), _as_bits(b)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    return int(np.bitwise_and(a, b).sum() & 1)


def popcount_parity(x: np.ndarray) -> np.ndarray:
    """Parity of the set bits of each (non-negative) integer in ``x``."""
    x = np.asarray(x, dtype=np.uint64).copy()
    for shift in (32, 16, 8, 4, 2, 1):
        x ^= x >> np.uint64(shift)
    return (x & np.uint64(1)).astype(np.int8)


def statistical_distance(d1, d2) -> float:
    """Total variation distance between two distributions on the same set."""
    p = d1.probs if isinstance(d1, CondDistribution) else np.asarray(d1, dtype=float)
    q = d2.probs if isinstance(d2, CondDistribution) else np.asarray(d2, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"support mismatch: {p.shape} vs {q.shape}")
    return 0.5 * float(np.abs(p - q).sum())


def walsh_hadamard(p: np.ndarray) -> np.ndarray:
    """``out[a] = sum_b p[b] * (-1)**<a, b>`` by the fast butterfly."""
    out = np.array(p, dtype=float)
    h = 1
    while h < out.size:
        out = out.reshape(-1, 2, h)
        out = np.stack((out[:, 0] + out[:, 1], out[:, 0] - out[:, 1]), axis=1)
        out = out.reshape(-1)
        h *= 2
    return out


@dataclass
class JointSource:
    """Mixture over shared randomness of independent pairs ``(A, B)``.

    ``components`` is a list of ``(weight, dist_a, dist_b)``; within one
    component A and B are independent.
    """

    components: list = field(default_factory=list)

    def __post_init__(self):
        if not self.components:
            raise ValueError("a joint source needs at least one component")
        total = sum(w for w, _, _ in self.components)
        if abs(total - 1.0) > PROB_ATOL:
            raise ValueError(f"component weights sum to {total!r}")
        n = self.components[0][1].n_bits
        for _, da, db in self.components:
            if da.n_bits != n or db.n_bits != n:
                raise ValueError("all components must share one length n")
        self.n = n

    @classmethod
    def independent(cls, dist_a: CondDistribution, dist_b: CondDistribution):
        return cls([(1.0, dist_a, dist_b)])


def _p_one(da: CondDistribution, db: CondDistribution) -> float:
    """P(<A, B> = 1) for independent A, B."""
    corr = float(np.dot(da.probs, walsh_hadamard(db.probs)))
    return 0.5 - 0.5 * corr


def extractor_output_distribution(src: JointSource, cap: int = EXACT_CAP) -> np.ndarray:
    """Exact ``[P(O=0), P(O=1)]`` of the Hadamard output under ``src``."""
    if src.n > cap:
        raise ValueError(f"n = {src.n} exceeds the exact-evaluation cap of {cap}")
    p1 = sum(w * _p_one(da, db) for w, da, db in src.components)
    return np.array([1.0 - p1, p1])


@dataclass(frozen=True)
class BoundCheck:
    distance: float
    bound: float
    holds: bool
    applicable: bool  # k_a + k_b >= n/2 and the bound is below 1/2
    k_a: float
    k_b: float
    weight: float = 1.0


def hadamard_bound(n: int, k_a: float, k_b: float) -> float:
    return 2.0 ** ((n - k_a - k_b - 2) / 2)


def hadamard_bound_check(src: JointSource, atol: float = 1e-12) -> list[BoundCheck]:
    """Per-component distance of the output bit to uniform against the bound.

    The guarantee is claimed only when ``k_a + k_b >= n/2``; when the bound is
    at least 1/2 it says nothing and the check is reported but not applicable.
    """
    out = []
    for w, da, db in src.components:
        ka, kb = min_entropy(da), min_entropy(db)
        distance = abs(_p_one(da, db) - 0.5)
        bound = hadamard_bound(src.n, ka, kb)
        applicable = ka + kb >= src.n / 2 - 1e-12 and bound < 0.5
        out.append(BoundCheck(distance, bound, distance <= bound + atol, applicable, ka, kb, w))
    return out


def flat_pair_distance(support_a: Sequence[int], support_b: Sequence[int], n: int) -> float:
    """Distance to uniform of ``<A, B>`` for flat A, B; a direct count."""
    a = np.asarray(support_a, dtype=np.uint64)[:, None]
    b = np.asarray(support_b, dtype=np.uint64)[None, :]
    ones = int(popcount_parity(a & b).sum())
    return abs(ones / (a.size * b.size) - 0.5)
