#!/usr/bin/env python3
"""Finite-difference validation of the hand-written BPTT gradients.

Every cell variant here ships with analytic backpropagation through
time.  The standard way to trust such code is a central-difference
check: perturb each parameter by +/- epsilon, difference the losses,
and compare against the analytic gradient.  Relative errors land
around sqrt(machine epsilon) ~ 1e-8 when the adjoints are right and
near 1.0 when they are wrong, so the 1e-5 threshold is generous yet
unforgiving of real mistakes.
"""

from weightcell import CellParams, Variant
from weightcell.numerics import new_rng
from weightcell.training import grad_check

INPUT, HIDDEN, STEPS = 3, 4, 5

print(f"dims: input={INPUT} hidden={HIDDEN} steps={STEPS}, "
      f"epsilon=1e-5, threshold=1e-5\n")

for variant in Variant:
    params = CellParams.create(variant, INPUT, HIDDEN, seed=7)
    xs = new_rng(8).standard_normal((STEPS, INPUT))
    report = grad_check(params, variant, xs, epsilon=1e-5, threshold=1e-5)
    worst = max(report.per_block_error.values())
    print(f"{variant.value:<18} worst block {report.worst_block:<8} "
          f"rel err {worst:.3e}  {'ok' if report.passed else 'FAILED'}")
    for block, err in sorted(report.per_block_error.items()):
        print(f"    {block:<8} {err:.3e}")
