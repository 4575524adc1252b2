"""Run the n-round protocol: source draw, device rounds, abort gate, extraction.

Devices
-------
A device triple is three *box strategies*. Each is called once per round as
``box(ctx, k)`` on a batch of runs and returns one int8 per run: the output
bit, or ``MEASURE_BIT`` (-1) to measure the box's share of a fresh GHZ state.
The context carries every box's record because the simulator plays all three;
box ``k`` may only read column ``k`` of ``ctx.inputs`` / ``ctx.outputs`` and
the shared ``ctx.lam``. :func:`device_isolation_audit` checks that contract.

Exact evaluation enumerates source leaves and the equiprobable GHZ outcomes.
Devices that also publish per-vertex *directives* (honest, classical,
re-send, attack trees) can instead be evaluated symbolically: every output
bit is then an affine function of the honest outcome bits, so the output's
bias follows from GF(2) rank computations, and probabilities stay exact.
"""
from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .adversary import MEASURE, XorSetStrategy
from .ghz_core import LocalStrategy, RoundInput, RoundOutput
from .quantum_oracle import honest_table
from .randsource import CondDistribution, SourceTree

MEASURE_BIT = -1
EXACT_MAX_ROUNDS = 10
MAX_BRANCHES = 1 << 22
CHUNK = 1 << 16

# --------------------------------------------------------------------------
# device contract
# --------------------------------------------------------------------------


@dataclass
class RoundContext:
    """Batch view of round ``round`` (0-based) across ``T`` runs.

    ``inputs`` has shape ``(T, round + 1, 3)`` and includes the current round;
    ``outputs`` has shape ``(T, round, 3)``.
    """

    round: int
    inputs: np.ndarray
    outputs: np.ndarray
    lam: np.ndarray

    @property
    def size(self) -> int:
        return self.inputs.shape[0]

    def own_inputs(self, box: int) -> np.ndarray:
        return self.inputs[:, :, box]

    def own_outputs(self, box: int) -> np.ndarray:
        return self.outputs[:, :, box]


BoxStrategy = Callable[[RoundContext, int], np.ndarray]


@dataclass
class Devices:
    """Three box strategies plus the shared randomness they may use.

    ``lambdas`` lists ``(weight, value)`` pairs for the shared variable.
    ``directives(prefix, lam)``, when present, describes the same play per
    source-tree vertex and enables symbolic evaluation. ``support`` is the
    source tree outside of which path-dependent play is undefined.
    """

    boxes: tuple
    lambdas: tuple = ((1.0, 0),)
    directives: Callable | None = None
    support: SourceTree | None = None
    name: str = "custom"

    def __post_init__(self):
        if len(self.boxes) != 3:
            raise ValueError("a device triple has exactly three boxes")
        total = sum(w for w, _ in self.lambdas)
        if abs(total - 1) > 1e-12:
            raise ValueError("shared-randomness weights must sum to 1")

    def respond(self, ctx: RoundContext) -> np.ndarray:
        out = np.stack([np.asarray(box(ctx, k), dtype=np.int8) for k, box in enumerate(self.boxes)], axis=1)
        return out.reshape(ctx.size, 3)


def _measure_all(ctx: RoundContext, box: int) -> np.ndarray:
    return np.full(ctx.size, MEASURE_BIT, dtype=np.int8)


def honest_devices() -> Devices:
    return Devices((_measure_all,) * 3, directives=lambda prefix, lam=0: MEASURE, name="honest")


def classical_devices(strategy: LocalStrategy) -> Devices:
    """Every round is played with the same deterministic local strategy."""
    tables = [np.array(t, dtype=np.int8) for t in strategy.tables]

    def box(ctx, k):
        return tables[k][ctx.inputs[:, -1, k]]

    return Devices(
        (box,) * 3,
        directives=lambda prefix, lam=0: XorSetStrategy.classical(len(prefix), strategy),
        name="classical",
    )


def resend_devices() -> Devices:
    """Even rounds measured, odd rounds repeat the box's own previous output."""

    def box(ctx, k):
        if ctx.round % 2 == 0:
            return np.full(ctx.size, MEASURE_BIT, dtype=np.int8)
        return ctx.outputs[:, -1, k].astype(np.int8)

    def directives(prefix, lam=0):
        j = len(prefix)
        return MEASURE if j % 2 == 0 else XorSetStrategy.resend(j, j - 1)

    return Devices((box,) * 3, directives=directives, name="resend")


def _prefix_codes(labels: np.ndarray) -> np.ndarray:
    codes = np.zeros(labels.shape[0], dtype=np.int64)
    for j in range(labels.shape[1]):
        codes = 4 * codes + labels[:, j]
    return codes


def tree_devices(attack) -> Devices:
    """Boxes that look up the attack tree's directive for the current vertex.

    The lookup reads the whole input history, i.e. other boxes' inputs; the
    play is local only if the directive it finds never depends on them.
    """
    cache: dict = {}

    def directive_for(code: int, j: int):
        key = (code, j)
        if key not in cache:
            prefix = tuple((code >> (2 * (j - 1 - i))) & 3 for i in range(j))
            try:
                cache[key] = attack.directive(prefix)
            except KeyError:
                raise ValueError(f"history {prefix} is not on the attack tree") from None
        return cache[key]

    def box(ctx, k):
        j = ctx.round
        labels = 2 * ctx.inputs[:, :j, 0] + ctx.inputs[:, :j, 1]
        codes = _prefix_codes(labels)
        out = np.empty(ctx.size, dtype=np.int8)
        uniq, inverse = np.unique(codes, return_inverse=True)
        own_in = ctx.inputs[:, j, k]
        for u_idx, code in enumerate(uniq):
            rows = inverse == u_idx
            d = directive_for(int(code), j)
            if d is MEASURE:
                out[rows] = MEASURE_BIT
                continue
            bit = np.array(d.residual.tables[k], dtype=np.int8)[own_in[rows]]
            for i in d.sources:
                bit = bit ^ ctx.outputs[rows, i, k]
            out[rows] = bit
        return out

    return Devices(
        (box,) * 3,
        directives=lambda prefix, lam=0: attack.directive(prefix),
        support=attack.tree,
        name="attack-tree",
    )


def _xyz(labels: np.ndarray) -> np.ndarray:
    """Labels ``2*r1 + r2`` to input triples, along a new last axis."""
    x = labels >> 1
    y = labels & 1
    return np.stack([x, y, x ^ y ^ 1], axis=-1).astype(np.int8)


def _target(labels: np.ndarray) -> np.ndarray:
    return (labels == 3).astype(np.int8)


# --------------------------------------------------------------------------
# configuration and reports
# --------------------------------------------------------------------------


@dataclass
class ProtocolConfig:
    n: int
    source: object  # SourceTree, CondDistribution, or sampler(rng, size) -> labels
    devices: Devices
    extractor: str = "hadamard"
    mode: str = "exact"
    trials: int = 0
    seed: int = 0
    method: str = "auto"  # exact mode: auto | enumerate | symbolic
    workers: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one round")
        if self.extractor != "hadamard":
            raise ValueError(f"unsupported extractor {self.extractor!r}")
        if self.mode not in ("exact", "montecarlo"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if isinstance(self.source, SourceTree) and self.source.depth != self.n:
            raise ValueError(f"source tree has depth {self.source.depth}, protocol has {self.n} rounds")
        if isinstance(self.source, CondDistribution) and self.source.n_bits != 2 * self.n:
            raise ValueError(f"source emits {self.source.n_bits} bits, protocol needs {2 * self.n}")


@dataclass
class RunReport:
    mode: str
    n: int
    abort_prob: object
    completion_prob: object
    p_zero: object  # P(O = 0 | completed), None when nothing completes
    bias: object
    trials_or_leaves: int
    seed: int | None = None
    abort_stderr: float | None = None
    bias_stderr: float | None = None
    method: str = ""
    wall_time: float = 0.0
    transcripts: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not 0 <= self.abort_prob <= 1:
            raise ValueError("abort probability out of range")

    def as_dict(self) -> dict:
        def num(v):
            return None if v is None else float(v)

        return {
            "mode": self.mode,
            "n": self.n,
            "abort_prob": num(self.abort_prob),
            "bias": num(self.bias),
            "completion_prob": num(self.completion_prob),
            "trials_or_leaves": int(self.trials_or_leaves),
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2) + "\n"


def _finish(mode, n, p0, p1, abort, count, **kw) -> RunReport:
    completion = p0 + p1
    if completion > 0:
        p_zero = p0 / completion
        bias = abs(p_zero - (Fraction(1, 2) if isinstance(p_zero, Fraction) else 0.5))
    else:
        p_zero = bias = None
    return RunReport(mode, n, abort, completion, p_zero, bias, count, **kw)


# --------------------------------------------------------------------------
# exact evaluation
# --------------------------------------------------------------------------


def _as_tree(source) -> SourceTree:
    if isinstance(source, SourceTree):
        return source
    if isinstance(source, CondDistribution):
        return SourceTree.from_distribution(source)
    raise ValueError("exact evaluation needs an enumerable source (tree or distribution)")


@lru_cache(maxsize=None)
def _marginal_outcomes(label: int, measured: tuple) -> tuple:
    """Nonzero outcomes ``(prob, bits)`` of the measuring boxes for one input."""
    xyz = RoundInput.from_label(label).xyz
    marg = honest_table().marginal(xyz, measured)
    m = len(measured)
    return tuple(
        (float(p), tuple((idx >> (m - 1 - t)) & 1 for t in range(m)))
        for idx, p in enumerate(marg)
        if p > 1e-15
    )


def _enumerate(tree: SourceTree, devices: Devices, on_round=None, max_branches=MAX_BRANCHES):
    """Breadth-first exact enumeration; returns ``(p0, p1, abort)`` floats."""
    n = tree.depth
    paths, probs = tree.leaf_table()
    lam_w = np.array([w for w, _ in devices.lambdas], dtype=float)
    lam_v = np.array([v for _, v in devices.lambdas], dtype=np.int64)
    labels = np.repeat(paths, len(lam_w), axis=0)
    prob = (probs[:, None] * lam_w[None, :]).reshape(-1)
    lam = np.tile(lam_v, len(paths))
    outputs = np.zeros((len(prob), 0, 3), dtype=np.int8)
    abort = 0.0

    for j in range(n):
        ctx = RoundContext(j, _xyz(labels[:, : j + 1]), outputs, lam)
        resp = devices.respond(ctx)
        if on_round is not None:
            on_round(ctx, resp)
        pattern = (resp == MEASURE_BIT).astype(np.int64) @ np.array([4, 2, 1])
        cur = labels[:, j].astype(np.int64)
        parts = []
        for key in np.unique(4 * pattern + cur):
            rows = np.flatnonzero(4 * pattern + cur == key)
            pat, lab = divmod(int(key), 4)
            measured = tuple(k for k in range(3) if pat & (4 >> k))
            outcomes = _marginal_outcomes(lab, measured) if measured else ((1.0, ()),)
            for p_out, bits in outcomes:
                abc = resp[rows].copy()
                for k, bit in zip(measured, bits):
                    abc[:, k] = bit
                parts.append((rows, p_out, abc))
        total = sum(len(r) for r, _, _ in parts)
        if total > max_branches:
            raise ValueError(f"exact enumeration needs {total} branches (cap {max_branches})")
        rows = np.concatenate([r for r, _, _ in parts])
        abc = np.concatenate([a for _, _, a in parts])
        prob = np.concatenate([prob[r] * p for r, p, _ in parts])
        labels, lam, outputs = labels[rows], lam[rows], outputs[rows]
        won = (abc[:, 0] ^ abc[:, 1] ^ abc[:, 2]) == _target(labels[:, j])
        abort += float(prob[~won].sum())
        labels, lam, prob = labels[won], lam[won], prob[won]
        outputs = np.concatenate([outputs[won], abc[won][:, None, :]], axis=1)

    o = (np.bitwise_and(outputs[:, :, 0], outputs[:, :, 1]).sum(axis=1) & 1) if n else np.zeros(len(prob), int)
    return float(prob[o == 0].sum()), float(prob[o == 1].sum()), abort


def _span_insert(basis: list, vec: int) -> None:
    for b in basis:
        vec = min(vec, vec ^ b)
    if vec:
        basis.append(vec)
        basis.sort(reverse=True)


def _in_span(basis: list, vec: int) -> bool:
    for b in basis:
        vec = min(vec, vec ^ b)
    return vec == 0


@lru_cache(maxsize=1 << 16)
def hadamard_correlation(a_forms: tuple, b_forms: tuple) -> Fraction:
    """``E[(-1)**O]`` for ``O = XOR_j a_j b_j`` with affine GF(2) output bits.

    ``a_forms[j] = (mask, const)`` means ``a_j = <mask, alpha> ^ const`` for
    independent uniform bits ``alpha``; likewise ``b_forms`` over ``beta``.
    """
    rows: dict[int, int] = {}
    u = v = c = 0
    for (pa, sa), (pb, sb) in zip(a_forms, b_forms):
        r = pa
        while r:
            low = r & -r
            rows[low] = rows.get(low, 0) ^ pb
            r ^= low
        if sb:
            u ^= pa
        if sa:
            v ^= pb
        c ^= sa & sb
    basis: list[int] = []
    for low, mrow in rows.items():
        _span_insert(basis, (mrow << 1) | (1 if u & low else 0))
    hit0, hit1 = _in_span(basis, v << 1), _in_span(basis, (v << 1) | 1)
    if hit0 == hit1:
        return Fraction(0)
    sign = (1 if hit0 else -1) * (-1 if c else 1)
    return Fraction(sign, 2 ** len(basis))


def _symbolic(tree: SourceTree, devices: Devices):
    """Exact ``(p0, p1, abort)`` for directive-described devices."""
    p0 = p1 = abort = 0
    for w, lam in devices.lambdas:

        def visit(prefix, v, mass, a_forms, b_forms, parities):
            nonlocal p0, p1, abort
            if v.is_leaf:
                e = hadamard_correlation(a_forms, b_forms)
                p0 += mass * (1 + e) / 2
                p1 += mass * (1 - e) / 2
                return
            j = len(prefix)
            d = devices.directives(prefix, lam)
            for lab, (p, child) in v.children.items():
                inp = RoundInput.from_label(lab)
                if d is MEASURE:
                    a, b, parity = (1 << j, 0), (1 << j, 0), inp.target
                else:
                    f, g, h = d.residual.tables
                    am, ac = 0, f[inp.x]
                    bm, bc = 0, g[inp.y]
                    parity = f[inp.x] ^ g[inp.y] ^ h[inp.z]
                    for i in d.sources:
                        am ^= a_forms[i][0]
                        ac ^= a_forms[i][1]
                        bm ^= b_forms[i][0]
                        bc ^= b_forms[i][1]
                        parity ^= parities[i]
                    a, b = (am, ac), (bm, bc)
                if parity != inp.target:
                    abort += mass * p
                    continue
                visit(prefix + (lab,), child, mass * p, a_forms + (a,), b_forms + (b,), parities + (parity,))

        visit((), tree.root, Fraction(w) if isinstance(w, int) or w == 1 else w, (), (), ())
    return p0, p1, abort


def run_exact(cfg: ProtocolConfig) -> RunReport:
    """Exact abort probability and conditional output bias."""
    if cfg.n > EXACT_MAX_ROUNDS:
        raise ValueError(f"exact mode supports at most {EXACT_MAX_ROUNDS} rounds")
    tree = _as_tree(cfg.source)
    method = cfg.method
    if method == "auto":
        method = "symbolic" if cfg.devices.directives is not None else "enumerate"
    start = time.perf_counter()
    if method == "symbolic":
        if cfg.devices.directives is None:
            raise ValueError("symbolic evaluation needs devices with directives")
        p0, p1, abort = _symbolic(tree, cfg.devices)
    elif method == "enumerate":
        p0, p1, abort = _enumerate(tree, cfg.devices)
    else:
        raise ValueError(f"unknown exact method {method!r}")
    return _finish(
        "exact", cfg.n, p0, p1, abort, tree.n_leaves,
        method=method, wall_time=time.perf_counter() - start,
    )


# --------------------------------------------------------------------------
# Monte Carlo
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RoundRecord:
    input: RoundInput
    output: RoundOutput
    won: bool


@dataclass(frozen=True)
class Transcript:
    """One run: round records, then either the abort round or the output bit."""

    rounds: tuple
    aborted_at: int | None = None
    output: int | None = None

    def __post_init__(self):
        if self.aborted_at is None:
            if self.output is None or not all(r.won for r in self.rounds):
                raise ValueError("a completed run has an output and only won rounds")
        else:
            if self.output is not None:
                raise ValueError("an aborted run has no output")
            if len(self.rounds) != self.aborted_at + 1 or self.rounds[-1].won:
                raise ValueError("an aborted run ends with its single lost round")
            if not all(r.won for r in self.rounds[:-1]):
                raise ValueError("rounds before the abort must be won")

    @property
    def completed(self) -> bool:
        return self.aborted_at is None


def write_transcripts_csv(transcripts: Sequence[Transcript], fh) -> None:
    """One row per played round: trial, round, r1r2, xyz, abc, win."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["trial", "round", "r1r2", "xyz", "abc", "win"])
    for t, tr in enumerate(transcripts):
        for j, rec in enumerate(tr.rounds):
            writer.writerow([t, j + 1, f"{rec.input.r1}{rec.input.r2}", str(rec.input), str(rec.output), int(rec.won)])


def _sampler(source, n: int):
    """Return ``draw(rng, size) -> (size, n)`` label array for a source."""
    if isinstance(source, SourceTree):
        paths, probs = source.leaf_table()
        probs = probs / probs.sum()

        def draw(rng, size):
            return paths[rng.choice(len(paths), size=size, p=probs)]

        return draw
    if isinstance(source, CondDistribution):
        probs = source.probs / source.probs.sum()
        shifts = np.arange(2 * (n - 1), -1, -2)

        def draw(rng, size):
            idx = rng.choice(probs.size, size=size, p=probs)
            return ((idx[:, None] >> shifts[None, :]) & 3).astype(np.int8)

        return draw
    if callable(source):
        return lambda rng, size: np.asarray(source(rng, size), dtype=np.int8).reshape(size, n)
    raise ValueError(f"unsupported source {type(source).__name__}")


_HONEST_CDF = None


def _honest_cdf() -> np.ndarray:
    global _HONEST_CDF
    if _HONEST_CDF is None:
        rows = [honest_table().row(RoundInput.from_label(l).xyz) for l in range(4)]
        _HONEST_CDF = np.cumsum(np.array(rows), axis=1)
        _HONEST_CDF[:, -1] = 1.0
    return _HONEST_CDF


def _simulate(n, draw, devices: Devices, size: int, rng: np.random.Generator):
    """Vectorised runs; returns labels, outputs, abort round (-1 if none), O."""
    labels = draw(rng, size)
    lam_w = np.array([float(w) for w, _ in devices.lambdas])
    lam_v = np.array([v for _, v in devices.lambdas], dtype=np.int64)
    lam = lam_v[rng.choice(len(lam_v), size=size, p=lam_w / lam_w.sum())]
    outputs = np.zeros((size, 0, 3), dtype=np.int8)
    aborted_at = np.full(size, -1, dtype=np.int64)
    cdf = _honest_cdf()
    for j in range(n):
        ctx = RoundContext(j, _xyz(labels[:, : j + 1]), outputs, lam)
        resp = devices.respond(ctx)
        u = rng.random(size)
        k = (u[:, None] >= cdf[labels[:, j]]).sum(axis=1)
        honest = np.stack([(k >> 2) & 1, (k >> 1) & 1, k & 1], axis=1).astype(np.int8)
        abc = np.where(resp == MEASURE_BIT, honest, resp).astype(np.int8)
        won = (abc[:, 0] ^ abc[:, 1] ^ abc[:, 2]) == _target(labels[:, j])
        aborted_at[(aborted_at < 0) & ~won] = j
        outputs = np.concatenate([outputs, abc[:, None, :]], axis=1)
    o = (np.bitwise_and(outputs[:, :, 0], outputs[:, :, 1]).sum(axis=1) & 1).astype(np.int8)
    return labels, outputs, aborted_at, o


def _transcripts(labels, outputs, aborted_at, o, limit: int) -> list[Transcript]:
    out = []
    for t in range(min(limit, len(o))):
        stop = aborted_at[t] if aborted_at[t] >= 0 else labels.shape[1] - 1
        recs = []
        for j in range(stop + 1):
            inp = RoundInput.from_label(int(labels[t, j]))
            res = RoundOutput(*map(int, outputs[t, j]))
            recs.append(RoundRecord(inp, res, res.parity == inp.target))
        if aborted_at[t] >= 0:
            out.append(Transcript(tuple(recs), aborted_at=int(aborted_at[t])))
        else:
            out.append(Transcript(tuple(recs), output=int(o[t])))
    return out


def run_montecarlo(cfg: ProtocolConfig, transcripts: int = 0) -> RunReport:
    """Seeded sampling counterpart of :func:`run_exact`.

    Trials run in fixed-size chunks, each with its own child of the seed's
    ``SeedSequence``; the report does not depend on ``cfg.workers``.
    """
    if cfg.trials <= 0:
        raise ValueError("Monte Carlo needs a positive number of trials")
    start = time.perf_counter()
    draw = _sampler(cfg.source, cfg.n)
    sizes = [CHUNK] * (cfg.trials // CHUNK) + ([cfg.trials % CHUNK] if cfg.trials % CHUNK else [])
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(sizes))
    kept: list[Transcript] = []

    def chunk(i):
        rng = np.random.default_rng(seeds[i])
        labels, outputs, aborted_at, o = _simulate(cfg.n, draw, cfg.devices, sizes[i], rng)
        done = aborted_at < 0
        trs = _transcripts(labels, outputs, aborted_at, o, transcripts) if i == 0 and transcripts else []
        return int((~done).sum()), int((done & (o == 0)).sum()), int((done & (o == 1)).sum()), trs

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(chunk, range(len(sizes))))
    else:
        results = [chunk(i) for i in range(len(sizes))]
    aborts = sum(r[0] for r in results)
    zeros = sum(r[1] for r in results)
    ones = sum(r[2] for r in results)
    kept = results[0][3]

    t = cfg.trials
    abort = aborts / t
    report = _finish(
        "montecarlo", cfg.n, zeros / t, ones / t, abort, t,
        seed=cfg.seed, method="sampled", wall_time=time.perf_counter() - start,
        abort_stderr=float(np.sqrt(abort * (1 - abort) / t)),
        transcripts=kept,
    )
    done = zeros + ones
    if done:
        q = zeros / done
        report.bias_stderr = float(np.sqrt(q * (1 - q) / done))
    return report


def run(cfg: ProtocolConfig, **kw) -> RunReport:
    return run_exact(cfg) if cfg.mode == "exact" else run_montecarlo(cfg, **kw)


# --------------------------------------------------------------------------
# isolation audit
# --------------------------------------------------------------------------


def isolation_violations(devices: Devices, source: SourceTree | None = None, n: int = 3) -> list:
    """Boxes whose answer is not a function of their own view.

    Every context reachable under ``source`` (default: the devices' support
    tree, else a uniform source over ``n`` rounds) is generated by exact
    enumeration. For box ``k`` the view is its input and output history plus
    the shared variable; two contexts with equal views must get equal answers.
    Returns ``(box, round)`` pairs where that fails.
    """
    if source is None:
        source = devices.support if devices.support is not None else SourceTree.uniform(n)
    seen: dict = {}
    bad: set = set()

    def record(ctx: RoundContext, resp: np.ndarray):
        for k in range(3):
            view = np.concatenate(
                [ctx.own_inputs(k), ctx.own_outputs(k), ctx.lam[:, None].astype(np.int8)], axis=1
            )
            for row, ans in zip(map(bytes, view), resp[:, k]):
                key = (k, ctx.round, row)
                if seen.setdefault(key, ans) != ans:
                    bad.add((k, ctx.round))

    _enumerate(source, devices, on_round=record)
    return sorted(bad)


def device_isolation_audit(devices: Devices, source: SourceTree | None = None, n: int = 3) -> bool:
    """True iff each box consumes only its own view and honest play is no-signaling."""
    if isolation_violations(devices, source, n):
        return False
    return honest_table().is_no_signaling()
