#!/usr/bin/env python3
"""Visualising the decomposition weights of a trained model.

After training a character model, the decomposition weights w_j^t say
how much each past position j still contributes to the cell state at
time t.  Plotting ||w_j^t||_2 as a j-by-t grid gives the familiar
attention-style heatmap: a bright diagonal (the current step always
dominates) with streaks where the model holds information.

This demo trains a small LSTM briefly, decomposes it over a snippet of
text, and writes the heatmap in all three supported formats (CSV of raw
norms, 8-bit PGM where darker = larger, and a labelled SVG).
"""

from pathlib import Path

from weightcell import (CellState, compute_weights, diagonal_dominance,
                        heatmap, save_heatmap, unroll)
from weightcell.corpus_gen import synthetic_text
from weightcell.model import SequenceModel
from weightcell.tasks import corpus_from_text
from weightcell.trainer import train_lm
from weightcell.training import TrainingConfig

out = Path("heatmap_out")
out.mkdir(exist_ok=True)

corpus = corpus_from_text(synthetic_text(60_000, 5))
model = SequenceModel.create("lstm", corpus.vocab_size, 32, 64, seed=0)
config = TrainingConfig(learning_rate=1.0, epochs=2, bptt_len=32,
                        batch_size=32)
print("training a small LSTM for two epochs...")
result = train_lm(model, corpus, config,
                  log=lambda m: print(f"  {m}", flush=True))

snippet_ids = corpus.split_ids("valid")[:48]
snippet = "".join(list(corpus.char_to_id)[i] for i in snippet_ids)
print(f"\ndecomposing over: {snippet!r}")

emb = model.embedding[snippet_ids]
traces = unroll(model.layers[0], model.variant,
                CellState.zeros(model.variant, model.hidden_dim), emb)
weights = compute_weights(traces)
grid = heatmap(weights, labels=list(snippet))

for ext in ("csv", "pgm", "svg"):
    path = out / f"weights.{ext}"
    save_heatmap(grid, path)
    print(f"wrote {path}")

frac = diagonal_dominance(weights)
print(f"\ndiagonal dominance: the newest weight is the largest at "
      f"{frac:.0%} of timesteps")
