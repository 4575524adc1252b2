"""A walk through the GHZ game: classical limit, quantum table, honest runs.

Run with ``python demos/ghz_game_tour.py``.
"""
import numpy as np

from ghzamp.engine import ProtocolConfig, honest_devices, run_exact, run_montecarlo
from ghzamp.ghz_core import RoundInput, classical_win_value, strategies_winning
from ghzamp.quantum_oracle import LEGAL_INPUTS, honest_table, literal_setting, table_for
from ghzamp.randsource import SourceTree

value, best = classical_win_value()
print(f"Best deterministic strategy wins {value} of the legal inputs ({len(best)} strategies reach it).")

# every three-input subset is winnable; all four never are
for drop in range(4):
    kept = [RoundInput.from_label(l) for l in range(4) if l != drop]
    print(f"  without {RoundInput.from_label(drop)}: {len(strategies_winning(kept))} perfect strategies")

print("\nHonest GHZ devices, P(abc | xyz) from the Born rule:")
table = honest_table()
for xyz in LEGAL_INPUTS:
    row = " ".join(f"{p:.2f}" for p in table.row(xyz))
    print(f"  {''.join(map(str, xyz))}: {row}  win={table.win_probability(xyz):.3f}")

lit = table_for(literal_setting)
print(f"\nThe un-calibrated sigma_x/sigma_y assignment wins 111 with probability {lit.win_probability((1, 1, 1)):.2f}.")

print("\nHonest protocol on a uniform source (exact):")
for n in range(1, 6):
    r = run_exact(ProtocolConfig(n, SourceTree.uniform(n), honest_devices()))
    print(f"  n={n}: abort {r.abort_prob}, bias {r.bias}")

n = 6
mc = run_montecarlo(
    ProtocolConfig(n, lambda rng, size: rng.integers(0, 4, size=(size, n)), honest_devices(),
                   mode="montecarlo", trials=200_000, seed=1)
)
print(f"\nMonte Carlo, n={n}: bias {mc.bias:.5f} +- {mc.bias_stderr:.5f} (exact {2.0 ** -(n + 1):.5f})")
