"""Sample a marked Poisson configuration, connect it two ways, and bin it.

Run:  python demos/01_sample_network.py
"""

import numpy as np

from boolean_ldp import (CorollaryKernel, Domain, Partition, ScalingRegime, UniformLaw, build_hard,
                         build_soft, empirical_connectivity_measure, empirical_mark_measure,
                         reference_measure, sample_marked_ppp)

dom = Domain.cube(1.0, 3)
regime = ScalingRegime(200.0, UniformLaw(0.3, 0.6), CorollaryKernel(1.0))
config = sample_marked_ppp(regime, dom, seed=2024)
print(f"{config.n_points} devices (expected about {regime.lam:.0f})")

# the geometric rule joins overlapping balls; at these radii almost everything overlaps
hard = build_hard(config, dom)
print(f"hard rule: {hard.n_edges} edges, mean degree {hard.degrees().mean():.1f}")

# the soft rule keeps each pair with probability Psi/lam, giving O(1) degree per device
soft = build_soft(config, regime, seed=2024)
print(f"soft rule: {soft.n_edges} edges, |E|/lam = {soft.n_edges / regime.lam:.3f}")

part = Partition.regular(dom, (2, 1, 1), [0.3, 0.45, 0.6])
l1 = empirical_mark_measure(soft, part)
l2 = empirical_connectivity_measure(soft, part)
ref = reference_measure(regime, part)
print("L1 :", np.round(l1.masses, 3), " reference:", np.round(ref.masses, 3))
print("L2 total mass", round(l2.total, 3), "= 2|E|/lam =", round(2 * soft.n_edges / regime.lam, 3))
