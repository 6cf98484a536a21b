"""Gated-RNN ablation laboratory.

LSTM and its simplified variants from first principles, the memory
cell's implicit element-wise weighted-sum decomposition, exact BPTT with
finite-difference verification, desk-scale ablation training, and
attention-style weight-heatmap export.
"""

from .cells import (CellParams, CellState, StepTrace, Variant, param_count,
                    step, unroll, unroll_bidirectional)
from .decomposition import (DecompositionReport, HeatmapGrid, WeightTensor,
                            compute_weights, diagonal_dominance, heatmap,
                            heatmap_bidirectional,
                            reconstruct_cell, save_heatmap, verify_identity,
                            weight_sums)
from .model import SequenceModel
from .tasks import (Batch, Corpus, SyntheticSpec, batch_iter,
                    corpus_from_text, load_text_corpus, make_recall,
                    perplexity)
from .trainer import train_lm, train_recall
from .training import (GradCheckReport, Gradients, TrainingConfig, bptt,
                       clip_global_norm, grad_check, optimizer_step,
                       softmax_xent)

__version__ = "0.1.0"
