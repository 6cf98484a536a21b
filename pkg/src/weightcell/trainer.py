"""Training loops: character LM with truncated BPTT and carried state,
and the synthetic recall classifier. Both are deterministic given the
config seed.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .numerics import new_rng
from .tasks import Batch, Corpus, batch_iter, perplexity
from .training import (OptimizerState, TrainingConfig, clip_global_norm,
                       global_norm, optimizer_step, softmax_xent_batch)

METRICS_COLUMNS = ("epoch", "split", "loss", "perplexity_or_accuracy",
                   "wallclock_seconds", "grad_norm_mean", "lr")


@dataclass
class LossRecord:
    epoch: int
    split: str
    loss: float
    metric: float  # perplexity for LM, accuracy for recall
    wallclock: float
    grad_norm_mean: float
    lr: float


@dataclass
class RunResult:
    records: list = field(default_factory=list)
    best_metric: float = math.inf
    best_epoch: int = -1
    failed: bool = False
    failed_epoch: int = -1

    def metrics_csv(self) -> str:
        lines = [",".join(METRICS_COLUMNS)]
        for r in self.records:
            lines.append(
                f"{r.epoch},{r.split},{r.loss:.17g},{r.metric:.17g},"
                f"{r.wallclock:.3f},{r.grad_norm_mean:.17g},{r.lr:.17g}"
            )
        return "\n".join(lines) + "\n"


def write_metrics(result: RunResult, path):
    with open(path, "w") as f:
        f.write(result.metrics_csv())


def train_lm(model, corpus: Corpus, config: TrainingConfig,
             checkpoint_path=None, vocab_chars=None,
             eval_max_tokens=None, log=None) -> RunResult:
    """Train a character LM. Carries recurrent state across truncated-BPTT
    segments (values only; gradients are detached at segment boundaries).
    Learning rate decays by config.lr_decay whenever validation
    perplexity fails to improve. A divergent run is recorded as failed,
    not raised."""
    from . import checkpoint as ckpt

    result = RunResult()
    blocks = model.all_blocks()
    opt = OptimizerState()
    lr = config.learning_rate
    train_ids = corpus.split_ids("train")
    valid_ids = corpus.split_ids("valid")
    t0 = time.time()
    for epoch in range(1, config.epochs + 1):
        states = None
        total_loss, total_tok = 0.0, 0
        gnorms = []
        for batch in batch_iter(train_ids, config.bptt_len, config.batch_size):
            try:
                logits, traces, states = model.forward(batch.inputs, states)
                loss, dlogits = softmax_xent_batch(logits, batch.targets)
                ntok = batch.targets.size
                if not math.isfinite(loss):
                    raise FloatingPointError("non-finite loss")
                grads = model.backward(traces, dlogits / ntok, batch.inputs)
                clip_global_norm(grads, config.clip_norm)
            except FloatingPointError as e:
                result.failed = True
                result.failed_epoch = epoch
                if log:
                    log(f"diverged at epoch {epoch}: {e}")
                return result
            gnorms.append(min(global_norm(grads), config.clip_norm))
            optimizer_step(opt, blocks, grads, config, lr=lr)
            total_loss += loss
            total_tok += ntok
        train_loss = total_loss / max(total_tok, 1)
        gmean = float(np.mean(gnorms)) if gnorms else 0.0
        result.records.append(LossRecord(
            epoch, "train", train_loss, math.exp(min(train_loss, 700.0)),
            time.time() - t0, gmean, lr))
        val_ppl = perplexity(model, valid_ids, max_tokens=eval_max_tokens)
        if not math.isfinite(val_ppl):
            result.failed = True
            result.failed_epoch = epoch
            if log:
                log(f"diverged at epoch {epoch}: non-finite validation loss")
            return result
        result.records.append(LossRecord(
            epoch, "valid", math.log(val_ppl), val_ppl,
            time.time() - t0, gmean, lr))
        if log:
            log(f"epoch {epoch}: train loss {train_loss:.4f}, "
                f"valid ppl {val_ppl:.2f}, lr {lr:g}")
        if val_ppl < result.best_metric:
            result.best_metric = val_ppl
            result.best_epoch = epoch
            if checkpoint_path is not None:
                ckpt.save_model(checkpoint_path, model, vocab_chars)
        else:
            lr *= config.lr_decay
    return result


def _recall_eval(model, batch: Batch, batch_size=256):
    correct = 0
    for start in range(0, len(batch.inputs), batch_size):
        inp = batch.inputs[start:start + batch_size]
        logits, _, _ = model.forward(inp)
        pred = logits[:, -1].argmax(axis=-1)
        correct += int((pred == batch.targets[start:start + batch_size]).sum())
    return correct / len(batch.inputs)


def train_recall(model, train_data: Batch, valid_data: Batch,
                 config: TrainingConfig, log=None) -> RunResult:
    """Train the recall classifier: loss on the final timestep only,
    sequences shuffled each epoch, fresh zero state per sequence."""
    result = RunResult()
    result.best_metric = -math.inf  # accuracy: larger is better
    blocks = model.all_blocks()
    opt = OptimizerState()
    rng = new_rng(config.seed)
    n = len(train_data.inputs)
    t0 = time.time()
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        total_loss, gnorms = 0.0, []
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            inputs = train_data.inputs[idx]
            targets = train_data.targets[idx]
            try:
                logits, traces, _ = model.forward(inputs)
                loss, dlast = softmax_xent_batch(logits[:, -1], targets)
                if not math.isfinite(loss):
                    raise FloatingPointError("non-finite loss")
                dlogits = np.zeros_like(logits)
                dlogits[:, -1] = dlast / len(idx)
                grads = model.backward(traces, dlogits, inputs)
                clip_global_norm(grads, config.clip_norm)
            except FloatingPointError:
                result.failed = True
                result.failed_epoch = epoch
                return result
            gnorms.append(min(global_norm(grads), config.clip_norm))
            optimizer_step(opt, blocks, grads, config)
            total_loss += loss
        train_loss = total_loss / n
        acc = _recall_eval(model, valid_data)
        gmean = float(np.mean(gnorms)) if gnorms else 0.0
        result.records.append(LossRecord(
            epoch, "train", train_loss, float("nan"),
            time.time() - t0, gmean, config.learning_rate))
        result.records.append(LossRecord(
            epoch, "valid", float("nan"), acc,
            time.time() - t0, gmean, config.learning_rate))
        if log:
            log(f"epoch {epoch}: train loss {train_loss:.4f}, "
                f"valid acc {acc:.3f}")
        if acc > result.best_metric:
            result.best_metric = acc
            result.best_epoch = epoch
        if acc >= 0.999:
            break
    return result
