"""Just above r_H the cheating advantage decays exponentially in n.

Flat sources are grown from the alternating tree until their rate reaches
r_H + eps; the best zero-error attack is then evaluated exactly.
"""
from ghzamp.adversary import (
    THRESHOLDS,
    augmented_alternating_source,
    build_alternating_tree,
    build_risking_tree,
    cheat_bias_bound,
    cheatable_mass,
    zero_error_attack,
)
from ghzamp.engine import ProtocolConfig, run_exact

print(" n   eps   leaves  cheatable  bound     bias      bound")
for eps in (0.05, 0.1):
    for n in (2, 4, 6, 8):
        src = augmented_alternating_source(n, eps)
        report = run_exact(ProtocolConfig(n, src, zero_error_attack(src).devices()))
        print(
            f"{n:2d}  {eps:.2f} {src.n_leaves:7d}  {float(cheatable_mass(src)):.5f}  "
            f"{2 ** (-2 * eps * n):.5f}  {float(report.bias):.5f}  {cheat_bias_bound(THRESHOLDS.r_H + eps, n):.5f}"
        )

print("\nRisking instead: guess classically on every dishonest vertex, abort when wrong.")
for n in (2, 4, 6):
    risky = build_risking_tree(build_alternating_tree(n))
    r = run_exact(ProtocolConfig(n, risky.tree, risky.devices()))
    print(f"  n={n}: survive {1 - r.abort_prob}, and when it survives the bias is {r.bias}")
