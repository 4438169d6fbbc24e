"""
Schur transform and the ancilla twirl
=====================================

The Schur transform block-diagonalizes both the permutation action and U^{(x)n}.
Each block is indexed by a Young diagram lambda, with a permutation factor P and
a unitary factor Q. The exact twirl over U(r) on the ancillas uses that
structure and agrees with a Monte-Carlo average over Haar unitaries.
"""

import numpy as np

from qlocaltest.checks import schur_checks, twirl_checks
from qlocaltest.schur_weyl import schur_transform

rng = np.random.default_rng(11)

st = schur_transform(3, 2)
for shape, dim_p, dim_q in st.layout:
    print(f"lambda={shape}: dim P={dim_p}, dim Q={dim_q}")

for c in schur_checks(3, 2, rng, states=5) + twirl_checks(2, 2, 2, 20000, rng):
    print(f"{c['name']:>24}  {c['value']:.2e}  {'ok' if c['ok'] else 'FAIL'}")
