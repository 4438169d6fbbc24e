"""
Compiling a dilation-access tester
==================================

A tester written for a Stinespring dilation V of a channel (ancilla first, rank r)
is turned into a tester that only needs the channel itself. The compiled
tester reproduces the average over Haar-random re-dilations; the leftover
probability goes to an extra outcome BOT.
"""

import numpy as np

from qlocaltest import channels as chn
from qlocaltest import compiler as cp
from qlocaltest import testers as ts

rng = np.random.default_rng(7)
n, d1, d2, r = 2, 2, 2, 2

t = ts.random_tester(n, d1, r * d2, 3, rng)
ch = chn.random_channel(d1, d2, r, rng)
compiled = cp.compile_tester(t, r, d2)
print("layout:", compiled.layout_info)
print("validity:", compiled.validate())

report = cp.verify_theorem(t, compiled, ch, 20000, rng)
for k, row in report["outcomes"].items():
    print(k, {name: round(v, 5) if isinstance(v, float) else v for name, v in row.items()})
print("max |z| =", round(report["max_abs_z"], 3), " pass:", report["pass"])
