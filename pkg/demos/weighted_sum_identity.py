#!/usr/bin/env python3
"""The LSTM memory cell as a weighted sum of past content layers.

An LSTM's cell state is usually described procedurally: at every step
the input gate writes, the forget gate decays.  Unrolling that
recurrence gives a closed form instead,

    c_t = sum_{j<=t} ( i_j * prod_{k=j+1..t} f_k ) * c~_j,

i.e. each past candidate c~_j contributes through an element-wise
weight that is the input gate at write time decayed by every forget
gate since.  This script builds a randomly initialised cell, runs it on
noise, and checks the identity numerically for every gated variant.
"""

import numpy as np

from weightcell import (CellParams, CellState, Variant, compute_weights,
                        unroll, verify_identity, weight_sums)
from weightcell.numerics import new_rng

HIDDEN = 32
INPUT = 8
STEPS = 60

rng = new_rng(0)
xs = rng.standard_normal((STEPS, INPUT))

print(f"hidden={HIDDEN}  input={INPUT}  steps={STEPS}\n")
print(f"{'variant':<18} {'max |c_t - reconstruction|':>28}")

for variant in Variant:
    if variant is Variant.SRNN:
        continue  # no memory cell, nothing to decompose
    params = CellParams.create(variant, INPUT, HIDDEN, seed=1)
    traces = unroll(params, variant, CellState.zeros(variant, HIDDEN), xs)
    report = verify_identity(traces, tolerance=1e-8)
    status = "ok" if report.passed else "FAILED"
    print(f"{variant.value:<18} {report.max_abs_deviation:>28.3e}  {status}")

# The weights themselves are interpretable.  For the coupled-gate cell
# (f = 1 - i) they telescope: the weights at each timestep sum to less
# than one, so the cell state is a convex-ish average of what it has
# seen -- the "dynamically computed weighted sum" reading.
params = CellParams.create(Variant.COUPLED, INPUT, HIDDEN, seed=1)
traces = unroll(params, Variant.COUPLED,
                CellState.zeros(Variant.COUPLED, HIDDEN), xs)
weights = compute_weights(traces)
sums = weight_sums(weights)
print("\ncoupled-gate weight sums (should stay inside [0, 1]):")
for t in (1, 10, 30, 60):
    s = sums[t - 1]
    print(f"  t={t:<3} min={s.min():.4f}  max={s.max():.4f}")

# And the most recent step always dominates: w_t^t = i_t has not been
# decayed yet, so its norm beats every older weight.
norms_last = [np.linalg.norm(weights.weight(j, STEPS))
              for j in range(1, STEPS + 1)]
print(f"\nat t={STEPS}: ||w_t^t|| = {norms_last[-1]:.4f}, "
      f"largest older weight = {max(norms_last[:-1]):.4f}")
