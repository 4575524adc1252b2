"""Weak random sources: explicit distributions, min-entropy, SV sources, trees.

Bit strings are indexed MSB-first: the string ``r_1 r_2 ... r_N`` is the
integer with ``r_1`` as its most significant bit. A protocol source emits
``2n`` bits, read as ``n`` round labels ``2*r1 + r2`` in ``{0, 1, 2, 3}``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from numbers import Real
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

PROB_ATOL = 1e-12
ENTROPY_TOL = 1e-9
DEFAULT_CAP = 24
LOG2_3 = math.log2(3)

LABEL_STRINGS = ("00", "01", "10", "11")


def label_of(bits: str) -> int:
    if bits not in LABEL_STRINGS:
        raise ValueError(f"bad round label {bits!r}")
    return int(bits, 2)


def labels_from_bits(bits: str) -> tuple[int, ...]:
    if len(bits) % 2:
        raise ValueError("a realization has an even number of bits")
    return tuple(int(bits[k : k + 2], 2) for k in range(0, len(bits), 2))


def bits_from_labels(labels: Sequence[int]) -> str:
    return "".join(LABEL_STRINGS[l] for l in labels)


def _as_labels(r) -> tuple[int, ...]:
    if isinstance(r, str):
        return labels_from_bits(r)
    return tuple(int(l) for l in r)


# --------------------------------------------------------------------------
# explicit distributions
# --------------------------------------------------------------------------


class CondDistribution:
    """Explicit probability table over ``n_bits``-bit strings.

    ``label`` is the adversary symbol ``e`` the table is conditioned on, if
    any. Tables are capped at ``cap`` bits since they are stored densely.
    """

    def __init__(self, n_bits: int, probs, label=None, cap: int = DEFAULT_CAP):
        if n_bits < 0:
            raise ValueError("n_bits must be non-negative")
        if n_bits > cap:
            raise ValueError(f"{n_bits} bits exceeds the enumeration cap of {cap}")
        probs = np.array(probs, dtype=float).reshape(-1)
        if probs.shape[0] != 2**n_bits:
            raise ValueError(f"expected {2**n_bits} probabilities, got {probs.shape[0]}")
        if np.any(probs < -PROB_ATOL):
            raise ValueError("negative probability")
        if abs(probs.sum() - 1.0) > PROB_ATOL:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
        probs = np.clip(probs, 0.0, None)
        probs.flags.writeable = False
        self.n_bits = n_bits
        self.probs = probs
        self.label = label

    def __repr__(self):
        return f"CondDistribution(n_bits={self.n_bits}, support={self.support_size})"

    @classmethod
    def from_entries(cls, n_bits: int, entries: Mapping[str, float], label=None):
        if not entries:
            raise ValueError("empty probability table")
        probs = np.zeros(2**n_bits)
        for bits, p in entries.items():
            if len(bits) != n_bits:
                raise ValueError(f"entry {bits!r} does not have {n_bits} bits")
            probs[int(bits, 2) if n_bits else 0] += float(p)
        return cls(n_bits, probs, label)

    @classmethod
    def uniform(cls, n_bits: int):
        return cls(n_bits, np.full(2**n_bits, 2.0**-n_bits))

    @classmethod
    def flat(cls, n_bits: int, support: Iterable[int]):
        """Uniform on ``support`` (integers or bit strings)."""
        idx = sorted({int(s, 2) if isinstance(s, str) else int(s) for s in support})
        if not idx:
            raise ValueError("empty support")
        probs = np.zeros(2**n_bits)
        probs[idx] = 1.0 / len(idx)
        return cls(n_bits, probs)

    @classmethod
    def point(cls, n_bits: int, x):
        return cls.flat(n_bits, [x])

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.probs > 0)

    @property
    def support_size(self) -> int:
        return int(np.count_nonzero(self.probs > 0))

    def prob(self, bits: str) -> float:
        return float(self.probs[int(bits, 2)])

    def prefix_marginal(self, k: int) -> np.ndarray:
        """Distribution of the first ``k`` bits, as a length ``2**k`` array."""
        return self.probs.reshape(2**k, -1).sum(axis=1)

    def condition(self, prefix: str) -> "CondDistribution":
        """Distribution of the remaining bits given the first ones."""
        k = len(prefix)
        block = self.probs.reshape(2**k, -1)[int(prefix, 2) if k else 0]
        mass = block.sum()
        if mass <= 0:
            raise ValueError(f"prefix {prefix!r} has zero probability")
        return CondDistribution(self.n_bits - k, block / mass, self.label)

    def to_json(self) -> dict:
        entries = {
            format(int(i), f"0{self.n_bits}b") if self.n_bits else "": float(self.probs[i])
            for i in self.support
        }
        return {"n_bits": self.n_bits, "entries": entries}

    @classmethod
    def from_json(cls, data) -> "CondDistribution":
        if isinstance(data, str):
            data = json.loads(data)
        return cls.from_entries(int(data["n_bits"]), data["entries"])


def guessing_probability(d) -> float:
    """``max_x P(x)``, or ``sum_e P(e) max_x P(x|e)`` for a weighted family."""
    if isinstance(d, CondDistribution):
        return float(d.probs.max())
    family = list(d)
    if not family:
        raise ValueError("empty family")
    weights = np.array([w for w, _ in family], dtype=float)
    if abs(weights.sum() - 1.0) > PROB_ATOL:
        raise ValueError("family weights must sum to 1")
    return float(sum(w * dist.probs.max() for w, dist in family))


def min_entropy(d) -> float:
    """Min-entropy in bits of a distribution or of a family ``[(P(e), P(X|e))]``."""
    return -math.log2(guessing_probability(d))


def min_entropy_rate(d) -> float:
    if isinstance(d, CondDistribution):
        n = d.n_bits
    else:
        family = list(d)
        n = family[0][1].n_bits if family else 0
        d = family
    if n == 0:
        raise ValueError("min-entropy rate undefined for zero-length strings")
    return min_entropy(d) / n


@dataclass(frozen=True)
class SVParams:
    delta: float

    def __post_init__(self):
        if not 0.0 <= self.delta <= 0.5:
            raise ValueError(f"SV parameter must lie in [0, 1/2], got {self.delta}")


def sv_min_entropy_rate_bound(p: SVParams) -> float:
    """Guaranteed min-entropy rate of any delta-SV source."""
    return -math.log2(0.5 + p.delta)


def is_sv_source(d: CondDistribution, p: SVParams, tol: float = ENTROPY_TOL) -> bool:
    """Check the per-bit SV condition after every positive-probability prefix."""
    lo, hi = 0.5 - p.delta - tol, 0.5 + p.delta + tol
    for i in range(d.n_bits):
        blocks = d.probs.reshape(2**i, 2, -1).sum(axis=2)
        mass = blocks.sum(axis=1)
        live = mass > 0
        p0 = blocks[live, 0] / mass[live]
        if np.any(p0 < lo) or np.any(p0 > hi):
            return False
    return True


def adversarial_source_for_function(
    f: Callable[[int], int] | Sequence[int], n_bits: int, cap: int = DEFAULT_CAP
) -> CondDistribution:
    """Flat source on the larger preimage of a one-bit function ``f``.

    Whatever deterministic extractor ``f`` is, the adversary can hand over this
    source: it keeps min-entropy at least ``n_bits - 1`` and makes ``f``
    constant. Ties go to the preimage of 0.
    """
    if n_bits > cap:
        raise ValueError(f"{n_bits} bits exceeds the enumeration cap of {cap}")
    if callable(f):
        values = np.fromiter((f(x) for x in range(2**n_bits)), dtype=np.int64)
    else:
        values = np.asarray(f, dtype=np.int64)
    zeros = np.flatnonzero(values == 0)
    ones = np.flatnonzero(values == 1)
    if zeros.size + ones.size != 2**n_bits:
        raise ValueError("f must map every string to 0 or 1")
    return CondDistribution.flat(n_bits, zeros if zeros.size >= ones.size else ones)


# --------------------------------------------------------------------------
# round typing
# --------------------------------------------------------------------------


class RoundType(Enum):
    TYPE1 = 1  # all four inputs possible: only the honest strategy wins surely
    TYPE2 = 2  # a perfect classical strategy exists

    def __str__(self):
        return self.name.capitalize()


def classify_round(fresh: float, tol: float = ENTROPY_TOL) -> RoundType:
    """Type 1 iff the fresh entropy exceeds log2(3); the boundary is Type 2."""
    if fresh < -tol:
        raise ValueError("entropy cannot be negative")
    return RoundType.TYPE1 if fresh > LOG2_3 + tol else RoundType.TYPE2


def entropy_of_edges(probs: Iterable) -> float:
    return -math.log2(max(probs))


# --------------------------------------------------------------------------
# trees
# --------------------------------------------------------------------------


class Vertex:
    """Tree vertex; ``children`` maps a round label to ``(prob, child)``.

    Vertices are treated as immutable, so identical subtrees may be shared
    between parents. Memoised traversals key on ``id``.
    """

    __slots__ = ("children",)

    def __init__(self, children: Mapping[int, tuple] | None = None):
        self.children = dict(sorted((children or {}).items()))

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def probs(self) -> list:
        return [p for p, _ in self.children.values()]

    def __repr__(self):
        return f"Vertex({[LABEL_STRINGS[l] for l in self.children]})"


def _prob_from_json(p):
    if isinstance(p, str):
        return Fraction(p)
    return p


def _prob_to_json(p):
    if isinstance(p, Fraction):
        return str(p) if p.denominator != 1 else int(p)
    return float(p)


class SourceTree:
    """Depth-``n`` tree of round labels with conditional edge probabilities.

    Each root-to-leaf path is one ``2n``-bit realization of the source.
    Edge probabilities may be floats or ``Fraction``; ``Fraction`` keeps leaf
    masses exact.
    """

    def __init__(self, root: Vertex, depth: int):
        self.root = root
        self.depth = depth
        self._validate()

    def _validate(self):
        ok: set[int] = set()

        def check(v: Vertex, level: int):
            if id(v) in ok:
                return
            if level == self.depth:
                if not v.is_leaf:
                    raise ValueError(f"vertex below depth {self.depth}")
            else:
                if v.is_leaf:
                    raise ValueError(f"leaf at depth {level}, expected {self.depth}")
                if len(v.children) > 4:
                    raise ValueError("more than four children")
                total = 0
                for lab, (p, child) in v.children.items():
                    if lab not in (0, 1, 2, 3):
                        raise ValueError(f"bad label {lab!r}")
                    if not p > 0:
                        raise ValueError("edge probabilities must be positive")
                    total += p
                    check(child, level + 1)
                if abs(total - 1) > PROB_ATOL:
                    raise ValueError(f"outgoing probabilities sum to {float(total)!r}")
            ok.add(id(v))

        check(self.root, 0)

    # -- construction ------------------------------------------------------

    @classmethod
    def from_leaves(cls, leaves: Mapping[Sequence[int], Real], depth: int | None = None):
        """Build a tree from leaf masses ``{labels: prob}``."""
        items = [(tuple(_as_labels(k)), p) for k, p in leaves.items() if p > 0]
        if not items:
            raise ValueError("no leaf with positive probability")
        depth = len(items[0][0]) if depth is None else depth
        if any(len(k) != depth for k, _ in items):
            raise ValueError("all leaves must have the same depth")

        def build(group, level):
            if level == depth:
                return Vertex(), sum(p for _, p in group)
            by_label: dict[int, list] = {}
            for path, p in group:
                by_label.setdefault(path[level], []).append((path, p))
            built = {lab: build(g, level + 1) for lab, g in by_label.items()}
            mass = sum(m for _, m in built.values())
            return Vertex({lab: (m / mass, v) for lab, (v, m) in built.items()}), mass

        root, _ = build(items, 0)
        return cls(root, depth)

    @classmethod
    def flat_over(cls, paths: Iterable[Sequence[int]], depth: int | None = None):
        """Leaf-uniform tree on ``paths``, with exact ``Fraction`` edges."""
        paths = {tuple(_as_labels(p)) for p in paths}
        return cls.from_leaves({p: Fraction(1) for p in paths}, depth)

    @classmethod
    def from_distribution(cls, d: CondDistribution) -> "SourceTree":
        if d.n_bits % 2:
            raise ValueError("a protocol source has an even number of bits")
        n = d.n_bits // 2
        leaves = {
            labels_from_bits(format(int(i), f"0{d.n_bits}b")): float(d.probs[i])
            for i in d.support
        }
        return cls.from_leaves(leaves, n)

    @classmethod
    def uniform(cls, depth: int) -> "SourceTree":
        v = Vertex()
        for _ in range(depth):
            v = Vertex({lab: (Fraction(1, 4), v) for lab in range(4)})
        return cls(v, depth)

    # -- queries -----------------------------------------------------------

    def vertex(self, prefix) -> Vertex:
        v = self.root
        for lab in _as_labels(prefix):
            if lab not in v.children:
                raise ValueError(f"prefix {bits_from_labels(_as_labels(prefix))!r} has zero probability")
            v = v.children[lab][1]
        return v

    def prefix_prob(self, prefix):
        v, mass = self.root, 1
        for lab in _as_labels(prefix):
            if lab not in v.children:
                return 0
            p, v = v.children[lab]
            mass = mass * p
        return mass

    def vertices(self) -> Iterator[tuple[tuple[int, ...], Vertex]]:
        """Every (prefix, vertex) pair, depth first, shared subtrees repeated."""
        stack = [((), self.root)]
        while stack:
            prefix, v = stack.pop()
            yield prefix, v
            for lab in reversed(v.children):
                stack.append((prefix + (lab,), v.children[lab][1]))

    def leaves(self) -> Iterator[tuple[tuple[int, ...], Real]]:
        stack = [((), self.root, 1)]
        while stack:
            prefix, v, mass = stack.pop()
            if v.is_leaf:
                yield prefix, mass
                continue
            for lab in reversed(v.children):
                p, child = v.children[lab]
                stack.append((prefix + (lab,), child, mass * p))

    def _fold(self, leaf_value, combine):
        memo: dict[int, object] = {}

        def go(v):
            key = id(v)
            if key not in memo:
                memo[key] = leaf_value if v.is_leaf else combine(v, [go(c) for _, c in v.children.values()])
            return memo[key]

        return go(self.root)

    @property
    def n_leaves(self) -> int:
        return self._fold(1, lambda v, counts: sum(counts))

    def max_leaf_prob(self):
        def combine(v, sub):
            return max(p * s for p, s in zip(v.probs(), sub))

        return self._fold(1, combine)

    def min_entropy(self) -> float:
        return -math.log2(self.max_leaf_prob())

    def min_entropy_rate(self) -> float:
        if self.depth == 0:
            raise ValueError("min-entropy rate undefined for depth 0")
        return self.min_entropy() / (2 * self.depth)

    def leaf_table(self) -> tuple[np.ndarray, np.ndarray]:
        """Leaves as an ``(L, n)`` label array and a float probability vector."""
        paths, probs = [], []
        for path, p in self.leaves():
            paths.append(path)
            probs.append(float(p))
        return np.array(paths, dtype=np.int8).reshape(len(paths), self.depth), np.array(probs)

    def flattened(self) -> "SourceTree":
        """Same support with leaf-uniform weights (exact), sharing preserved."""
        counts: dict[int, int] = {}

        def count(v):
            if id(v) not in counts:
                counts[id(v)] = 1 if v.is_leaf else sum(count(c) for _, c in v.children.values())
            return counts[id(v)]

        count(self.root)
        memo: dict[int, Vertex] = {}

        def rebuild(v):
            if id(v) not in memo:
                total = counts[id(v)]
                memo[id(v)] = Vertex(
                    {lab: (Fraction(counts[id(c)], total), rebuild(c)) for lab, (_, c) in v.children.items()}
                )
            return memo[id(v)]

        return SourceTree(rebuild(self.root), self.depth)

    # -- serialization -----------------------------------------------------

    def vertex_json(self, v: Vertex, label, prob, extra=None, prefix=()) -> dict:
        node = {
            "label": label,
            "prob": _prob_to_json(prob),
            "children": [
                self.vertex_json(c, LABEL_STRINGS[lab], p, extra, prefix + (lab,))
                for lab, (p, c) in v.children.items()
            ],
        }
        if extra is not None:
            node.update(extra(prefix, v))
        return node

    def to_json(self) -> dict:
        return {"depth": self.depth, "root": self.vertex_json(self.root, None, 1)}

    @classmethod
    def from_json(cls, data) -> "SourceTree":
        if isinstance(data, str):
            data = json.loads(data)

        def build(node):
            return Vertex(
                {label_of(ch["label"]): (_prob_from_json(ch["prob"]), build(ch)) for ch in node["children"]}
            )

        return cls(build(data["root"]), int(data["depth"]))


def fresh_entropy(source, r, i: int | None = None) -> float:
    """Min-entropy of round ``i``'s label given the realized earlier rounds.

    ``r`` is a bit string or label sequence; with ``i`` given (1-based) only
    its first ``i - 1`` rounds are used, otherwise all of ``r`` is the prefix.
    """
    labels = _as_labels(r)
    if i is not None:
        if i < 1:
            raise ValueError("rounds are numbered from 1")
        labels = labels[: i - 1]
    if isinstance(source, CondDistribution):
        rest = source.condition(bits_from_labels(labels))
        if rest.n_bits < 2:
            raise ValueError("no round left after this prefix")
        return entropy_of_edges(rest.prefix_marginal(2))
    v = source.vertex(labels)
    if v.is_leaf:
        raise ValueError("no round left after this prefix")
    return entropy_of_edges(v.probs())


def tree_to_distribution(t: SourceTree, cap: int = DEFAULT_CAP) -> CondDistribution:
    n_bits = 2 * t.depth
    if n_bits > cap:
        raise ValueError(f"{n_bits} bits exceeds the enumeration cap of {cap}")
    probs = np.zeros(2**n_bits)
    for path, p in t.leaves():
        idx = 0
        for lab in path:
            idx = 4 * idx + lab
        probs[idx] += float(p)
    return CondDistribution(n_bits, probs, cap=cap)
