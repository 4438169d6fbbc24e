"""
Channels, Choi operators and parallel testers
=============================================

A parallel tester is a family of PSD operators T_i on n input and n output
systems whose sum is rho (x) I. Its outcome probabilities on a channel are the
link products T_i * C^{(x)n}. Here we build one, check those probabilities
against a physical simulation with a reference system, and print them.
"""

import numpy as np

from qlocaltest import channels as chn
from qlocaltest import testers as ts

rng = np.random.default_rng(2024)

# an amplitude-damping qubit channel, written by hand
g = 0.3
damp = chn.QuantumChannel((np.array([[1, 0], [0, np.sqrt(1 - g)]]), np.array([[0, np.sqrt(g)], [0, 0]])), 2, 2)
print("Kraus rank:", damp.kraus_rank)
print("Choi operator (out, in):\n", np.round(chn.choi_matrix(damp).real, 3))

# round trip through the Choi operator
back = chn.kraus_from_choi(chn.choi_matrix(damp), 2, 2)
print("Choi round trip error:", np.abs(chn.choi_matrix(back) - chn.choi_matrix(damp)).max())

# a random two-copy tester with three outcomes
t = ts.random_tester(2, 2, 2, 3, rng)
print("tester valid:", t.validate()["ok"])

exact = ts.outcome_distribution(t, damp)
state, povm = ts.realize(t)
physical = ts.simulate(state, povm, damp, 2)
for k in t.labels:
    print(f"outcome {k}: link product {exact[k]:.6f}   simulated {physical[k]:.6f}")
