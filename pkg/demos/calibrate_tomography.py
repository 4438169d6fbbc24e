"""
Calibrating the tomography constants
====================================

The query count is N = c_total d1 d2 / eps^2 and the oracle error scale is
eps_max = c_copies d / copies. This sweep picks c_total: the smallest value in
the grid whose success rate clears 2/3 with margin at d1=2, d2=4, eps=0.25.
The numbers it printed are frozen in qlocaltest.tomography.

    python demos/calibrate_tomography.py --trials 200
"""

import argparse

import numpy as np

from qlocaltest import channels as chn
from qlocaltest import metrics as mt
from qlocaltest import tomography as tm

p = argparse.ArgumentParser()
p.add_argument("--trials", type=int, default=200)
p.add_argument("--seed", type=int, default=0)
args = p.parse_args()

rng = np.random.default_rng(args.seed)
d1, d2, eps = 2, 4, 0.25
for c_total in (4.0, 8.0, 16.0, 24.0):
    errs = []
    for _ in range(args.trials):
        v = chn.random_isometry(d1, d2, rng).matrix
        est = tm.isometry_tomography(tm.IsometryOracle(v), eps, rng, c_copies=tm.C_COPIES, c_total=c_total)
        errs.append(mt.isometry_diamond_distance(v, est.matrix))
    errs = np.array(errs)
    print(f"c_total={c_total:>5}: success {np.mean(errs <= eps):.3f}, max error {errs.max():.3f}")
