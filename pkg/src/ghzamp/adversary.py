"""Adversarial source trees, device attacks, and the bias bounds they meet.

Rounds are 0-based in code. A vertex at depth ``j`` chooses the input of
round ``j``; its *directive* says how the three boxes answer there: either
``MEASURE`` (honest GHZ measurement) or an ``XorSetStrategy``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import comb
from typing import Iterable

import numpy as np

from .extractor import popcount_parity
from .ghz_core import ONE_BIT_FUNCTIONS, LocalStrategy, RoundInput, strategies_winning
from .randsource import (
    LABEL_STRINGS,
    RoundType,
    SourceTree,
    Vertex,
    classify_round,
    entropy_of_edges,
)

HONEST = "honest"
DISHONEST = "dishonest"

BRUTEFORCE_CAP = 12
TREE_CAP = 12


@dataclass(frozen=True)
class Thresholds:
    r_trivial: float = math.log2(math.sqrt(3))
    r_max: float = math.log2(10) / 4
    r_H: float = math.log2(12) / 4

    def __post_init__(self):
        if not self.r_trivial < self.r_max < self.r_H:
            raise ValueError("threshold ordering violated")


THRESHOLDS = Thresholds()


# --------------------------------------------------------------------------
# directives
# --------------------------------------------------------------------------


class _Measure:
    """Directive: all three boxes measure their GHZ share."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "MEASURE"

    def to_json(self):
        return {"kind": "measure"}


MEASURE = _Measure()

_ZERO = LocalStrategy((ONE_BIT_FUNCTIONS[0],) * 3)


@dataclass(frozen=True)
class XorSetStrategy:
    """Deterministic play in round ``round``.

    Box A outputs ``XOR_{i in sources} a_i XOR f'(x)``, and likewise for B and
    C, where ``f', g', h'`` are the residual tables of ``residual``. An empty
    ``sources`` is plain classical play; a single source round is a re-send.
    """

    round: int
    sources: tuple[int, ...] = ()
    residual: LocalStrategy = _ZERO

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(sorted(set(self.sources))))
        if any(not 0 <= i < self.round for i in self.sources):
            raise ValueError(f"sources {self.sources} must precede round {self.round}")

    @classmethod
    def classical(cls, round: int, strategy: LocalStrategy) -> "XorSetStrategy":
        return cls(round, (), strategy)

    @classmethod
    def resend(cls, round: int, source: int, flip_c=(0, 0)) -> "XorSetStrategy":
        return cls(round, (source,), LocalStrategy(((0, 0), (0, 0), tuple(flip_c))))

    def box_output(self, box: int, own_outputs, own_input: int) -> int:
        bit = self.residual.tables[box][own_input]
        for i in self.sources:
            bit ^= int(own_outputs[i])
        return bit

    def to_json(self):
        return {
            "kind": "xor_set",
            "round": self.round,
            "sources": list(self.sources),
            "residual": [list(t) for t in self.residual.tables],
        }


def _and(label: int) -> int:
    return RoundInput.from_label(label).target


# --------------------------------------------------------------------------
# attack trees
# --------------------------------------------------------------------------


class AttackTree:
    """A source tree annotated with the devices' play at every vertex.

    ``kinds`` and ``strategies`` are keyed by the label prefix leading to a
    vertex. ``risky`` holds dishonest vertices given a fourth, aborting edge.
    """

    def __init__(self, tree: SourceTree, kinds: dict, strategies: dict, risky=frozenset()):
        self.tree = tree
        self.kinds = kinds
        self.strategies = strategies
        self.risky = frozenset(risky)
        self.validate()

    @property
    def depth(self) -> int:
        return self.tree.depth

    @property
    def n_leaves(self) -> int:
        return self.tree.n_leaves

    def directive(self, prefix):
        prefix = tuple(prefix)
        if self.kinds[prefix] == HONEST:
            return MEASURE
        return self.strategies[prefix]

    def validate(self):
        for prefix, v in self.tree.vertices():
            if v.is_leaf:
                continue
            kind = self.kinds.get(prefix)
            n_children = len(v.children)
            if kind == HONEST:
                if n_children != 4:
                    raise ValueError(f"honest vertex {prefix} needs four children")
            elif kind == DISHONEST:
                limit = 4 if prefix in self.risky else 3
                if n_children > limit:
                    raise ValueError(f"dishonest vertex {prefix} has {n_children} children")
                strat = self.strategies.get(prefix)
                if strat is None or strat.round != len(prefix):
                    raise ValueError(f"dishonest vertex {prefix} lacks a strategy for its round")
                for i in strat.sources:
                    if self.kinds.get(prefix[:i]) != HONEST:
                        raise ValueError(f"vertex {prefix} re-sends non-honest round {i}")
            else:
                raise ValueError(f"vertex {prefix} is not annotated")
        for prefix in self.risky:
            if self.kinds.get(prefix) != DISHONEST:
                raise ValueError("only dishonest vertices can take an abort edge")

    def devices(self):
        from .engine import tree_devices

        return tree_devices(self)

    def to_json(self) -> dict:
        def extra(prefix, v):
            if v.is_leaf:
                return {}
            out = {"type": self.kinds[prefix]}
            out["strategy"] = self.directive(prefix).to_json()
            if prefix in self.risky:
                out["abort_edge"] = True
            return out

        return {"depth": self.depth, "root": self.tree.vertex_json(self.tree.root, None, 1, extra)}


def _dishonest_play(j: int, labels, open_rounds, parities) -> tuple[XorSetStrategy, int | None]:
    """Zero-error play at a vertex with at most three possible labels.

    Re-sends the latest uncancelled honest round when box C alone can fix the
    parity (C's input z does not separate 00 from 11); otherwise falls back to
    a classical strategy that wins on every label present.
    """
    if open_rounds:
        i = open_rounds[-1]
        h = {}
        ok = True
        for lab in labels:
            z = RoundInput.from_label(lab).z
            need = _and(lab) ^ parities[i]
            if h.setdefault(z, need) != need:
                ok = False
                break
        if ok:
            return XorSetStrategy.resend(j, i, (h.get(0, 0), h.get(1, 0))), i
    inputs = [RoundInput.from_label(lab) for lab in labels]
    winners = strategies_winning(inputs)
    if not winners:
        raise ValueError(f"no classical strategy wins on {[LABEL_STRINGS[l] for l in labels]}")
    return XorSetStrategy.classical(j, winners[0]), None


def zero_error_attack(tree: SourceTree) -> AttackTree:
    """Best never-caught play on ``tree`` with full knowledge of the path.

    Vertices with all four labels possible are played honestly; every other
    vertex cancels one earlier honest round if it can. The path knowledge is
    an idealisation: boxes that only see their own inputs may be unable to
    realise it (``engine.device_isolation_audit`` tells).
    """
    kinds, strategies = {}, {}

    def visit(prefix, v, open_rounds, parities):
        if v.is_leaf:
            return
        j = len(prefix)
        if len(v.children) == 4:
            kinds[prefix] = HONEST
            for lab, (_, child) in v.children.items():
                visit(prefix + (lab,), child, open_rounds + (j,), parities + (_and(lab),))
            return
        kinds[prefix] = DISHONEST
        strat, used = _dishonest_play(j, list(v.children), open_rounds, parities)
        strategies[prefix] = strat
        rest = tuple(i for i in open_rounds if i != used)
        for lab, (_, child) in v.children.items():
            visit(prefix + (lab,), child, rest, parities + (_and(lab),))

    visit((), tree.root, (), ())
    return AttackTree(tree, kinds, strategies)


def _check_even(n: int):
    if n % 2 or n < 2:
        raise ValueError(f"round count must be even and positive, got {n}")
    if n > TREE_CAP:
        raise ValueError(f"n = {n} exceeds the tree cap of {TREE_CAP}")


def _paired_tree(n: int, pair) -> SourceTree:
    v = Vertex()
    for _ in range(n // 2):
        v = pair(v)
    return SourceTree(v, n).flattened()


def alternating_source(n: int) -> SourceTree:
    """Honest (4 children) and dishonest (labels 00, 01, 10) levels alternate."""
    _check_even(n)

    def pair(nxt):
        d = Vertex({lab: (Fraction(1, 3), nxt) for lab in (0, 1, 2)})
        return Vertex({lab: (Fraction(1, 4), d) for lab in range(4)})

    return _paired_tree(n, pair)


def resend_source(n: int) -> SourceTree:
    """After an honest 11 the next label is 11; otherwise one of 00, 01, 10."""
    _check_even(n)

    def pair(nxt):
        after_and0 = Vertex({lab: (Fraction(1, 3), nxt) for lab in (0, 1, 2)})
        after_and1 = Vertex({3: (Fraction(1), nxt)})
        return Vertex({lab: (Fraction(1, 4), after_and1 if lab == 3 else after_and0) for lab in range(4)})

    return _paired_tree(n, pair)


def build_alternating_tree(n: int) -> AttackTree:
    return zero_error_attack(alternating_source(n))


def build_resend_tree(n: int) -> AttackTree:
    return zero_error_attack(resend_source(n))


def build_risking_tree(base: AttackTree, vertices="all") -> AttackTree:
    """Give selected three-child dishonest vertices their missing fourth label.

    The new edge carries a copy of a sibling subtree. The vertex keeps its
    strategy, which loses on the new label, so realising it aborts the run.
    ``vertices`` is ``"all"`` or an iterable of prefixes of ``base``.
    Weights are reset to leaf-uniform.
    """
    if vertices == "all":
        selected = {
            p for p, v in base.tree.vertices()
            if not v.is_leaf and base.kinds[p] == DISHONEST and len(v.children) == 3
        }
    else:
        selected = {tuple(p) for p in vertices}
        for p in selected:
            if base.kinds.get(p) != DISHONEST:
                raise ValueError(f"vertex {p} is not dishonest and cannot be augmented")
            if len(base.tree.vertex(p).children) != 3:
                raise ValueError(f"vertex {p} does not have exactly three children")

    kinds, strategies, risky = {}, {}, set()

    def rebuild(new_prefix, v, src_prefix):
        if v.is_leaf:
            return Vertex()
        kinds[new_prefix] = base.kinds[src_prefix]
        if src_prefix in base.strategies:
            strategies[new_prefix] = base.strategies[src_prefix]
        children = {
            lab: rebuild(new_prefix + (lab,), c, src_prefix + (lab,))
            for lab, (_, c) in v.children.items()
        }
        if src_prefix in selected:
            (missing,) = set(range(4)) - set(v.children)
            sib = min(v.children)
            children[missing] = rebuild(new_prefix + (missing,), v.children[sib][1], src_prefix + (sib,))
            risky.add(new_prefix)
        k = len(children)
        return Vertex({lab: (Fraction(1, k), c) for lab, c in children.items()})

    tree = SourceTree(rebuild((), base.tree.root, ()), base.depth).flattened()
    return AttackTree(tree, kinds, strategies, risky)


# --------------------------------------------------------------------------
# cheatable mass and closed-form bounds
# --------------------------------------------------------------------------


def vertex_type(v: Vertex, rule: str = "entropy") -> RoundType:
    if rule == "entropy":
        return classify_round(entropy_of_edges(v.probs()))
    if rule == "support":
        return RoundType.TYPE1 if len(v.children) == 4 else RoundType.TYPE2
    raise ValueError(f"unknown typing rule {rule!r}")


def cheatable_mass(t, rule: str = "entropy"):
    """Mass of leaves whose path has no more Type 1 than Type 2 rounds.

    Rounds are typed by fresh entropy (``rule="entropy"``) or by whether all
    four labels are possible (``rule="support"``).
    """
    tree = t.tree if isinstance(t, AttackTree) else t
    memo: dict = {}

    def go(v, balance):
        key = (id(v), balance)
        if key not in memo:
            if v.is_leaf:
                memo[key] = 1 if balance <= 0 else 0
            else:
                step = 1 if vertex_type(v, rule) is RoundType.TYPE1 else -1
                memo[key] = sum(p * go(c, balance + step) for p, c in v.children.values())
        return memo[key]

    return go(tree.root, 0)


def _epsilon(rate: float) -> float:
    return rate - THRESHOLDS.r_H


def cheat_bias_bound(rate: float, n: int) -> float:
    """Upper bound ``2**-(2 eps n + 1)`` on the output bias, ``eps = rate - r_H``."""
    eps = _epsilon(rate)
    if eps <= 0:
        raise ValueError("rate at or below r_H admits full cheating; no bound")
    return 2.0 ** -(2 * eps * n + 1)


def guess_success(rate: float, n: int, tol: float = 1e-12) -> float:
    """Probability ``2**(-2 eps n)`` that a risking adversary is never caught."""
    eps = _epsilon(rate)
    if eps < -tol:
        raise ValueError("rate below r_H: full cheating is possible without risk")
    return 2.0 ** (-2 * max(eps, 0.0) * n)


def resend_bias_closed_form(k: int, s: int) -> Fraction:
    if not 0 <= s <= k:
        raise ValueError(f"need 0 <= s <= k, got k={k}, s={s}")
    return Fraction(1, 2 ** (k + 1)) if s % 2 == 0 else Fraction(1, 2**k)


@lru_cache(maxsize=4)
def _inner_parity(k: int) -> np.ndarray:
    a = np.arange(2**k, dtype=np.uint64)
    return popcount_parity(a[:, None] & a[None, :])


def resend_bias_bruteforce(k: int, S: Iterable[int]) -> Fraction:
    """Bias of ``XOR_i a_i b_i XOR (XOR_S a_i)(XOR_S b_i)`` over all 2**(2k) outcomes.

    ``S`` holds 1-based round indices. Counts are exact integers.
    """
    if k > BRUTEFORCE_CAP:
        raise ValueError(f"k = {k} exceeds the brute-force cap of {BRUTEFORCE_CAP}")
    S = set(S)
    if any(not 1 <= i <= k for i in S):
        raise ValueError(f"S must be a subset of 1..{k}")
    mask = sum(1 << (k - i) for i in S)
    a = np.arange(2**k, dtype=np.uint64)
    sel = popcount_parity(a & np.uint64(mask))
    out = _inner_parity(k) ^ (sel[:, None] & sel[None, :])
    zeros = int(out.size - np.count_nonzero(out))
    return abs(Fraction(zeros, 4**k) - Fraction(1, 2))


def resend_bias_binomial(s: int) -> Fraction:
    """Bias of the corrected block, evaluated from the binomial double sum."""
    total = Fraction(0)
    for ka, kb in product(range(s + 1), repeat=2):
        inner = 0
        for i in range(max(0, ka + kb - s), min(ka, kb) + 1):
            if (i + ka * kb) % 2 == 0:
                inner += comb(ka, i) * comb(s - ka, kb - i)
        total += comb(s, ka) * inner
    return abs(total / 4**s - Fraction(1, 2))


def constant_balanced_check(f, g) -> bool:
    """Whether some ``h`` keeps ``f(a)^g(b)^h(c)`` fixed on both parity cosets."""
    for h in ONE_BIT_FUNCTIONS:
        coset_values: dict[int, set] = {0: set(), 1: set()}
        for a, b, c in product((0, 1), repeat=3):
            coset_values[a ^ b ^ c].add(f[a] ^ g[b] ^ h[c])
        if all(len(vals) == 1 for vals in coset_values.values()):
            return True
    return False


# --------------------------------------------------------------------------
# flat sources just above r_H
# --------------------------------------------------------------------------


def target_leaf_count(n: int, eps: float) -> int:
    """Smallest leaf count whose flat source has rate at least ``r_H + eps``."""
    want = 12 ** (n / 2) * 2 ** (2 * eps * n)
    count = math.ceil(want - 1e-9 * want)
    if count > 4**n:
        raise ValueError(f"rate r_H + {eps} exceeds 1 at n = {n}: no such source")
    return count


def _alternating_paths(n: int) -> set[tuple[int, ...]]:
    return {path for path, _ in alternating_source(n).leaves()}


def _trie_to_tree(trie: dict, n: int) -> SourceTree:
    def build(node):
        k = len(node)
        return Vertex({lab: (Fraction(1, k), build(child)) for lab, child in node.items()})

    return SourceTree(build(trie), n).flattened()


def _trie_copy(node: dict) -> tuple[dict, int]:
    if not node:
        return {}, 1
    out, leaves = {}, 0
    for lab, child in node.items():
        out[lab], m = _trie_copy(child)
        leaves += m
    return out, leaves


def augmented_alternating_source(n: int, eps: float) -> SourceTree:
    """Alternating support grown by adding fourth labels, deepest levels first.

    Each augmented vertex receives a copy of its first sibling's subtree.
    Growth stops as soon as the flat rate reaches ``r_H + eps``.
    """
    target = target_leaf_count(n, eps)
    trie: dict = {}
    for path in _alternating_paths(n):
        node = trie
        for lab in path:
            node = node.setdefault(lab, {})
    count = 12 ** (n // 2)

    def at_depth(node, depth):
        if depth == 0:
            yield node
            return
        for lab in sorted(node):
            yield from at_depth(node[lab], depth - 1)

    for depth in range(n - 1, 0, -2):
        for node in list(at_depth(trie, depth)):
            if count >= target:
                return _trie_to_tree(trie, n)
            if len(node) == 4:
                continue
            missing = min(set(range(4)) - set(node))
            node[missing], added = _trie_copy(node[min(node)])
            count += added
    if count < target:
        raise ValueError("augmentation cannot reach the requested rate")
    return _trie_to_tree(trie, n)


def superset_alternating_source(n: int, eps: float, seed: int = 0) -> SourceTree:
    """Alternating support plus uniformly chosen extra strings, flat."""
    target = target_leaf_count(n, eps)
    base = _alternating_paths(n)

    def code(path):
        c = 0
        for lab in path:
            c = 4 * c + lab
        return c

    taken = np.array(sorted(code(p) for p in base), dtype=np.int64)
    rest = np.setdiff1d(np.arange(4**n, dtype=np.int64), taken)
    rng = np.random.default_rng(seed)
    extra = rng.choice(rest, size=target - len(base), replace=False)
    paths = set(base)
    for c in extra:
        paths.add(tuple((int(c) >> (2 * (n - 1 - j))) & 3 for j in range(n)))
    return SourceTree.flat_over(paths, n)
