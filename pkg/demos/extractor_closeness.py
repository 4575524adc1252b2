"""How close to uniform is the inner product of two independent weak sources?"""
import numpy as np

from ghzamp.extractor import JointSource, hadamard_bound_check
from ghzamp.randsource import CondDistribution

rng = np.random.default_rng(0)
n = 8
print(" k_a   k_b   distance   bound")
for size_a, size_b in [(256, 256), (64, 64), (16, 128), (16, 16), (4, 64)]:
    da = CondDistribution.flat(n, rng.choice(2**n, size=size_a, replace=False))
    db = CondDistribution.flat(n, rng.choice(2**n, size=size_b, replace=False))
    (c,) = hadamard_bound_check(JointSource.independent(da, db))
    print(f"{c.k_a:4.1f}  {c.k_b:4.1f}   {c.distance:.5f}   {c.bound:.5f}")

# a subspace and its orthogonal complement meet the bound with equality
a = CondDistribution.flat(n, [v << 4 for v in range(16)])
b = CondDistribution.flat(n, range(16))
(c,) = hadamard_bound_check(JointSource.independent(a, b))
print(f"\northogonal subspaces: distance {c.distance}, bound {c.bound}")
