#!/usr/bin/env python3
"""Long-range recall: where the memory cell earns its keep.

The task: see a symbol, sit through `delay` steps of noise, then answer
a query with the original symbol.  Any variant with a memory cell can
park the symbol in c and protect it with the forget gate; a plain tanh
RNN has to thread it through squashing nonlinearities at every step and
loses it.  The accuracy gap is the cleanest behavioural evidence that
the gates -- not the recurrent content layer -- provide long-range
memory.

This demo uses a short delay so it finishes in about a minute; the
acceptance suite runs the full delay-50 version.
"""

from weightcell.ablation import run_recall_sweep
from weightcell.tasks import SyntheticSpec
from weightcell.training import TrainingConfig

spec = SyntheticSpec(delay=20, alphabet_size=8, count=4000, seed=3)
print(f"recall task: delay={spec.delay}, alphabet={spec.alphabet_size}, "
      f"{spec.count} training sequences\n")

# The forget-gate bias starts high so the cell retains across the delay
# from the first update; the tanh RNN has no forget gate, so the same
# setting leaves it to fend for itself.
config = TrainingConfig(learning_rate=1e-2, optimizer="adam", clip_norm=5.0,
                        batch_size=32, epochs=10)
report = run_recall_sweep(
    spec, ["lstm", "no-srnn", "coupled", "srnn"], seeds=[0], config=config,
    hidden_dim=40, emb_dim=16, forget_bias=4.0,
    log=lambda m: print(m, flush=True))

print()
print(report.to_table())
