"""
Isometry tomography under a simulated state-tomography oracle
=============================================================

Each column of V is estimated from copies of V|j>, then the columns are snapped
to an isometry. A second run on V F (F the discrete Fourier transform) fixes the
unknown column phases through medians. The diamond error falls like N^(-1/2).
"""

import numpy as np

from qlocaltest import channels as chn
from qlocaltest import metrics as mt
from qlocaltest import tomography as tm

rng = np.random.default_rng(3)
d1, d2 = 2, 4
v = chn.random_isometry(d1, d2, rng).matrix

noiseless = tm.isometry_tomography(tm.IsometryOracle(v), 0.25, rng, noiseless=True)
print("zero-noise diamond error:", mt.isometry_diamond_distance(v, noiseless.matrix))

grid = [100, 1000, 10000, 100000]
medians = []
for big_n in grid:
    errs = [mt.isometry_diamond_distance(v, tm.isometry_tomography(tm.IsometryOracle(v), rng=rng, queries=big_n).matrix)
            for _ in range(20)]
    medians.append(np.median(errs))
    print(f"N={big_n:>6}  median diamond error {medians[-1]:.4f}")
print("log-log slope:", round(np.polyfit(np.log(grid), np.log(medians), 1)[0], 3))
