"""The re-send attack: a source at rate (1/4) log2 10 that lets devices cheat fully.

After an honest round with input 111, the source forces 111 again; otherwise
it avoids 111. The dishonest round then replays the honest outputs and the
two rounds cancel inside the inner-product extractor.
"""
from ghzamp.adversary import THRESHOLDS, build_alternating_tree, build_resend_tree
from ghzamp.engine import ProtocolConfig, device_isolation_audit, isolation_violations, run_exact, run_montecarlo

for n in (2, 4, 6):
    attack = build_resend_tree(n)
    r = run_exact(ProtocolConfig(n, attack.tree, attack.devices()))
    print(
        f"n={n}: {attack.n_leaves} leaves, rate {attack.tree.min_entropy_rate():.6f} "
        f"(r_max {THRESHOLDS.r_max:.6f}), abort {r.abort_prob}, bias {r.bias}"
    )

attack = build_resend_tree(4)
mc = run_montecarlo(ProtocolConfig(4, attack.tree, attack.devices(), mode="montecarlo", trials=50_000, seed=3))
print(f"\nsampled: abort {mc.abort_prob}, bias {mc.bias}")

print("\nCan separated boxes play it?")
print(f"  re-send tree: {device_isolation_audit(attack.devices())}")
alt = build_alternating_tree(4)
print(f"  alternating tree: {device_isolation_audit(alt.devices())} "
      f"(box, round) pairs reading foreign inputs: {isolation_violations(alt.devices())}")
