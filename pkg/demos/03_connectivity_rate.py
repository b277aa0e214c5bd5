"""Closed-form conditional rate versus its convex-conjugate definition.

Run:  python demos/03_connectivity_rate.py
"""

import numpy as np

from boolean_ldp import (BinnedMeasure, BinnedPairMeasure, ConstantKernel, Domain, Partition,
                         ScalingRegime, TableKernel, UniformLaw, conditional_rate,
                         legendre_conditional_rate)
from boolean_ldp.harness import PairEvent, ldp_slope

dom = Domain.cube(1.0, 3)
part = Partition.regular(dom, 1, [0.0, 0.5, 1.0])
regime = ScalingRegime(1.0, UniformLaw(0, 1), TableKernel(part, np.array([[1.0, 2.0], [2.0, 4.0]])))
omega = BinnedMeasure(part, [0.3, 0.7])
pi = BinnedPairMeasure(part, [[0.5, 0.2], [0.2, 3.0]])
print("closed form :", conditional_rate(pi, omega, regime).value)
print("conjugate   :", legendre_conditional_rate(pi, omega, regime).value)

# one cell, lam points, constant Psi = 2: how fast does P(|E| >= 2 lam) vanish?
single = Partition.single(dom, 0.0, 1.0)
flat = ScalingRegime(1.0, UniformLaw(0, 1), ConstantKernel(2.0))
res = ldp_slope(PairEvent(None, 4.0), flat, [50, 100, 200, 400], 200_000, seed=3,
                omega=BinnedMeasure(single, [1.0]), partition=single, method="tilted")
print(f"edge-count slope {res.slope:.4f} vs predicted {res.predicted:.4f}: {res.verdict}")
