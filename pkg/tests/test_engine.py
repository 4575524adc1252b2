import io
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ghzamp import engine
from ghzamp.adversary import (
    augmented_alternating_source,
    build_alternating_tree,
    build_resend_tree,
    build_risking_tree,
    zero_error_attack,
)
from ghzamp.engine import (
    Devices,
    ProtocolConfig,
    RoundRecord,
    Transcript,
    classical_devices,
    device_isolation_audit,
    hadamard_correlation,
    honest_devices,
    isolation_violations,
    resend_devices,
    run_exact,
    run_montecarlo,
    write_transcripts_csv,
)
from ghzamp.extractor import JointSource, extractor_output_distribution
from ghzamp.ghz_core import RoundInput, RoundOutput, classical_win_value
from ghzamp.randsource import CondDistribution, SourceTree

BEST = classical_win_value()[1][0]


def exact(n, source, devices, method="auto"):
    return run_exact(ProtocolConfig(n, source, devices, method=method))


def mc(n, source, devices, trials, seed=0, **kw):
    return run_montecarlo(ProtocolConfig(n, source, devices, mode="montecarlo", trials=trials, seed=seed, **kw))


form = st.tuples(st.integers(0, 15), st.integers(0, 1))


@given(st.lists(st.tuples(form, form), min_size=1, max_size=4))
def test_symbolic_correlation_matches_brute_force(pairs):
    a_forms = tuple(p[0] for p in pairs)
    b_forms = tuple(p[1] for p in pairs)

    def bit(form, x):
        mask, const = form
        return (bin(mask & x).count("1") + const) & 1

    total = 0
    for alpha, beta in product(range(16), repeat=2):
        o = 0
        for fa, fb in zip(a_forms, b_forms):
            o ^= bit(fa, alpha) & bit(fb, beta)
        total += 1 - 2 * o
    assert hadamard_correlation(a_forms, b_forms) == Fraction(total, 256)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_honest_uniform_run(n):
    sym = exact(n, SourceTree.uniform(n), honest_devices(), "symbolic")
    enum = exact(n, SourceTree.uniform(n), honest_devices(), "enumerate")
    assert sym.abort_prob == 0 and enum.abort_prob == 0
    assert sym.bias == Fraction(1, 2 ** (n + 1))
    assert enum.bias == pytest.approx(float(sym.bias), abs=1e-12)
    # honest outputs are uniform, so the extractor alone predicts the bias
    u = CondDistribution.uniform(n)
    p0, _ = extractor_output_distribution(JointSource.independent(u, u))
    assert float(sym.bias) == pytest.approx(p0 - 0.5, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_classical_devices_abort(n):
    sym = exact(n, SourceTree.uniform(n), classical_devices(BEST), "symbolic")
    enum = exact(n, SourceTree.uniform(n), classical_devices(BEST), "enumerate")
    assert sym.abort_prob == 1 - Fraction(3, 4) ** n
    assert float(enum.abort_prob) == pytest.approx(float(sym.abort_prob), abs=1e-12)
    assert sym.bias == Fraction(1, 2)


@pytest.mark.parametrize(
    "n,attack",
    [
        (2, lambda: build_risking_tree(build_alternating_tree(2))),
        (4, lambda: build_alternating_tree(4)),
        (4, lambda: zero_error_attack(augmented_alternating_source(4, 0.05))),
        (4, lambda: build_risking_tree(build_resend_tree(4))),
    ],
)
def test_exact_routes_agree_on_attacks(n, attack):
    a = attack()
    sym = exact(n, a.tree, a.devices(), "symbolic")
    enum = exact(n, a.tree, a.devices(), "enumerate")
    assert float(sym.abort_prob) == pytest.approx(enum.abort_prob, abs=1e-12)
    assert float(sym.bias) == pytest.approx(enum.bias, abs=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_exact_routes_agree_on_random_sources(seed):
    rng = np.random.default_rng(seed)
    n = 2
    d = CondDistribution(2 * n, rng.dirichlet(np.ones(4**n) * 0.5))
    for devices in (honest_devices(), classical_devices(BEST)):
        sym = exact(n, d, devices, "symbolic")
        enum = exact(n, d, devices, "enumerate")
        assert float(sym.abort_prob) == pytest.approx(enum.abort_prob, abs=1e-9)
        if sym.bias is not None:
            assert float(sym.bias) == pytest.approx(enum.bias, abs=1e-9)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_resend_attack_cheats_fully(n):
    a = build_resend_tree(n)
    r = exact(n, a.tree, a.devices())
    assert r.abort_prob == 0 and r.bias == Fraction(1, 2)
    plain = exact(n, a.tree, resend_devices())
    assert plain.abort_prob == 0 and plain.bias == Fraction(1, 2)


def within(sampled, exact_value, se, k=5):
    return abs(sampled - float(exact_value)) <= k * max(se, 1e-12)


def test_montecarlo_agrees_with_exact_classical():
    n = 3
    ex = exact(n, SourceTree.uniform(n), classical_devices(BEST))
    r = mc(n, SourceTree.uniform(n), classical_devices(BEST), 50_000, seed=3)
    assert within(r.abort_prob, ex.abort_prob, r.abort_stderr)


def test_montecarlo_agrees_with_exact_honest_bias():
    n = 2
    ex = exact(n, SourceTree.uniform(n), honest_devices())
    r = mc(n, SourceTree.uniform(n), honest_devices(), 100_000, seed=5)
    assert r.abort_prob == 0
    assert within(r.bias, ex.bias, r.bias_stderr)


def test_montecarlo_agrees_with_exact_risking():
    a = build_risking_tree(build_alternating_tree(4))
    ex = exact(4, a.tree, a.devices())
    r = mc(4, a.tree, a.devices(), 40_000, seed=11)
    assert within(r.abort_prob, ex.abort_prob, r.abort_stderr)
    assert r.bias == 0.5


def test_montecarlo_with_distribution_and_sampler():
    n = 2
    d = CondDistribution.uniform(2 * n)
    r1 = mc(n, d, honest_devices(), 1000)
    r2 = mc(n, lambda rng, size: rng.integers(0, 4, size=(size, n)), honest_devices(), 1000)
    assert r1.abort_prob == r2.abort_prob == 0


def test_reports_are_reproducible():
    src = SourceTree.uniform(3)
    a = mc(3, src, honest_devices(), 70_000, seed=42).to_json()
    b = mc(3, src, honest_devices(), 70_000, seed=42).to_json()
    c = mc(3, src, honest_devices(), 70_000, seed=42, workers=2).to_json()
    assert a == b == c
    assert mc(3, src, honest_devices(), 70_000, seed=43).to_json() != a


def test_report_schema():
    r = exact(2, SourceTree.uniform(2), honest_devices())
    assert set(r.as_dict()) == {"mode", "n", "abort_prob", "bias", "completion_prob", "trials_or_leaves", "seed"}


def test_everything_aborts():
    # a strategy that loses on every input
    lose = next(s for s in classical_win_value()[1] if not s.wins(RoundInput(1, 1)))
    src = SourceTree.flat_over([(3,)], 1)
    r = exact(1, src, classical_devices(lose))
    assert r.abort_prob == 1 and r.bias is None and r.p_zero is None


def test_transcripts_and_csv():
    r = run_montecarlo(
        ProtocolConfig(3, SourceTree.uniform(3), classical_devices(BEST), mode="montecarlo", trials=200, seed=1),
        transcripts=50,
    )
    assert len(r.transcripts) == 50
    assert any(not t.completed for t in r.transcripts)
    for t in r.transcripts:
        assert t.completed == (t.output is not None)
    buf = io.StringIO()
    write_transcripts_csv(r.transcripts, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "trial,round,r1r2,xyz,abc,win"
    assert len(lines) == 1 + sum(len(t.rounds) for t in r.transcripts)


def test_transcript_invariants():
    won = RoundRecord(RoundInput(0, 0), RoundOutput(0, 0, 0), True)
    lost = RoundRecord(RoundInput(1, 1), RoundOutput(0, 0, 0), False)
    Transcript((won, lost), aborted_at=1)
    with pytest.raises(ValueError):
        Transcript((won, lost), aborted_at=1, output=0)
    with pytest.raises(ValueError):
        Transcript((won,))
    with pytest.raises(ValueError):
        Transcript((lost, won), aborted_at=0)


def test_isolation_audit():
    assert device_isolation_audit(honest_devices())
    assert device_isolation_audit(classical_devices(BEST))
    assert device_isolation_audit(resend_devices())
    assert device_isolation_audit(build_resend_tree(4).devices())
    assert not device_isolation_audit(build_alternating_tree(4).devices())


def test_isolation_audit_catches_peeking_box():
    def peek(ctx, k):
        return ctx.inputs[:, -1, (k + 1) % 3].astype(np.int8)

    assert isolation_violations(Devices((peek,) * 3), n=1) == [(0, 0), (1, 0), (2, 0)]


def test_shared_randomness_is_allowed():
    def by_lambda(ctx, k):
        return (ctx.lam & 1).astype(np.int8) if k == 0 else np.zeros(ctx.size, dtype=np.int8)

    d = Devices((by_lambda,) * 3, lambdas=((0.5, 0), (0.5, 1)))
    assert device_isolation_audit(d, n=2)
    r = exact(1, SourceTree.uniform(1), d)
    assert r.abort_prob == pytest.approx(0.5)


def test_config_validation():
    with pytest.raises(ValueError):
        ProtocolConfig(3, SourceTree.uniform(2), honest_devices())
    with pytest.raises(ValueError):
        ProtocolConfig(2, SourceTree.uniform(2), honest_devices(), extractor="xor")
    with pytest.raises(ValueError):
        ProtocolConfig(2, CondDistribution.uniform(3), honest_devices())
    with pytest.raises(ValueError):
        run_montecarlo(ProtocolConfig(2, SourceTree.uniform(2), honest_devices(), mode="montecarlo"))
    with pytest.raises(ValueError):
        run_exact(ProtocolConfig(11, lambda rng, size: None, honest_devices()))
    with pytest.raises(ValueError):
        Devices((honest_devices().boxes[0],) * 2)


def test_attack_devices_reject_off_tree_histories():
    a = build_alternating_tree(4)
    with pytest.raises(ValueError):
        mc(4, SourceTree.uniform(4), a.devices(), 100)
