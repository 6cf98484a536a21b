"""Ablation sweeps: every (variant, seed) cell trained with identical
hyperparameters, results aggregated into a mean +/- std table in the
canonical presentation order (LSTM, -- S-RNN, -- S-RNN -- OUT,
-- S-RNN -- HIDDEN, -- GATES).

At most one per-variant learning-rate override is allowed per sweep,
mirroring the single documented exception for the gate-free baseline,
and it is logged prominently.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .cells import TABLE_ORDER, Variant
from .model import SequenceModel
from .tasks import make_recall
from .trainer import RunResult, train_lm, train_recall, write_metrics
from .training import TrainingConfig


@dataclass
class RunCell:
    variant: Variant
    seed: int
    metric: float  # best validation perplexity (LM) or accuracy (recall)
    n_params: int
    failed: bool
    lr_used: float


@dataclass
class AblationReport:
    metric_name: str
    cells: list = field(default_factory=list)

    def variants(self):
        seen = []
        for v in TABLE_ORDER:
            if any(c.variant is v for c in self.cells):
                seen.append(v)
        return seen

    def stats(self, variant):
        vals = [c.metric for c in self.cells
                if c.variant is variant and not c.failed]
        n_params = next(c.n_params for c in self.cells if c.variant is variant)
        if not vals:
            return math.nan, None, n_params, 0
        mean = float(np.mean(vals))
        std = float(np.std(vals, ddof=1)) if len(vals) >= 2 else None
        return mean, std, n_params, len(vals)

    def to_csv(self) -> str:
        lines = [f"variant,seed,{self.metric_name},n_params,failed"]
        for c in self.cells:
            lines.append(f"{c.variant.value},{c.seed},{c.metric:.17g},"
                         f"{c.n_params},{int(c.failed)}")
        lines.append("")
        lines.append(f"variant,mean_{self.metric_name},std,n_params,n_runs")
        for v in self.variants():
            mean, std, n_params, n = self.stats(v)
            std_s = f"{std:.17g}" if std is not None else ""
            lines.append(f"{v.value},{mean:.17g},{std_s},{n_params},{n}")
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        rows = [("Model", self.metric_name, "params", "runs")]
        for v in self.variants():
            mean, std, n_params, n = self.stats(v)
            metric = f"{mean:.2f}" if std is None else f"{mean:.2f} ± {std:.2f}"
            if not n:
                metric = "failed"
            rows.append((v.display_name, metric, str(n_params), str(n)))
        widths = [max(len(r[i]) for r in rows) for i in range(4)]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip()
                 for r in rows]
        lines.insert(1, "-" * len(lines[0]))
        return "\n".join(lines) + "\n"


def _check_overrides(lr_overrides):
    lr_overrides = dict(lr_overrides or {})
    if len(lr_overrides) > 1:
        raise ValueError(
            "at most one per-variant learning-rate override is allowed")
    return {Variant(k): v for k, v in lr_overrides.items()}


def _plan(variants, seeds, config, lr_overrides, log):
    jobs = []
    for variant in [Variant(v) for v in variants]:
        cfg = config
        if variant in lr_overrides:
            cfg = replace(config, learning_rate=lr_overrides[variant])
            if log:
                log(f"NOTE: learning-rate override for {variant.value}: "
                    f"lr={cfg.learning_rate} (all other hyperparameters shared)")
        for seed in seeds:
            jobs.append((variant, seed, replace(cfg, seed=seed)))
    return jobs


def _run_lm_cell(job):
    variant, seed, cfg, corpus, hidden_dim, emb_dim, num_layers, out_dir, \
        eval_max_tokens, forget_bias, verbose = job
    model = SequenceModel.create(variant, corpus.vocab_size, emb_dim,
                                 hidden_dim, num_layers, seed=seed,
                                 forget_bias=forget_bias)
    log = (lambda m: print(f"[{variant.value} s{seed}] {m}", flush=True)) \
        if verbose else None
    ckpt = f"{out_dir}/{variant.value}_seed{seed}.ckpt" if out_dir else None
    result = train_lm(model, corpus, cfg, checkpoint_path=ckpt,
                      vocab_chars="".join(corpus.char_to_id),
                      eval_max_tokens=eval_max_tokens, log=log)
    if out_dir:
        write_metrics(result,
                      f"{out_dir}/{variant.value}_seed{seed}_metrics.csv")
    return RunCell(variant, seed,
                   result.best_metric if not result.failed else math.inf,
                   model.n_params(), result.failed, cfg.learning_rate)


def _run_recall_cell(job):
    variant, seed, cfg, train_data, valid_data, hidden_dim, emb_dim, \
        vocab_size, out_dir, forget_bias, verbose = job
    model = SequenceModel.create(variant, vocab_size, emb_dim, hidden_dim,
                                 1, seed=seed, forget_bias=forget_bias)
    log = (lambda m: print(f"[{variant.value} s{seed}] {m}", flush=True)) \
        if verbose else None
    result = train_recall(model, train_data, valid_data, cfg, log=log)
    if out_dir:
        write_metrics(result,
                      f"{out_dir}/{variant.value}_seed{seed}_metrics.csv")
    return RunCell(variant, seed,
                   result.best_metric if not result.failed else 0.0,
                   model.n_params(), result.failed, cfg.learning_rate)


def _execute(runner, jobs, n_jobs):
    if n_jobs <= 1:
        return [runner(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(runner, jobs))


def run_lm_sweep(corpus, variants, seeds, config: TrainingConfig,
                 hidden_dim, emb_dim, num_layers=1, out_dir=None,
                 lr_overrides=None, eval_max_tokens=None, jobs=1,
                 forget_bias=1.0, log=None) -> AblationReport:
    """Best-validation perplexity per (variant, seed)."""
    lr_overrides = _check_overrides(lr_overrides)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    plan = _plan(variants, seeds, config, lr_overrides, log)
    work = [(v, s, c, corpus, hidden_dim, emb_dim, num_layers, out_dir,
             eval_max_tokens, forget_bias, log is not None) for v, s, c in plan]
    report = AblationReport(metric_name="valid_perplexity")
    report.cells = _execute(_run_lm_cell, work, jobs)
    return report


def run_recall_sweep(spec, variants, seeds, config: TrainingConfig,
                     hidden_dim, emb_dim, valid_count=2000,
                     lr_overrides=None, out_dir=None, jobs=1,
                     forget_bias=1.0, log=None) -> AblationReport:
    """Test accuracy per (variant, seed) on the synthetic recall task."""
    lr_overrides = _check_overrides(lr_overrides)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    train_data = make_recall(spec)
    valid_data = make_recall(replace(spec, count=valid_count,
                                     seed=spec.seed + 1))
    plan = _plan(variants, seeds, config, lr_overrides, log)
    work = [(v, s, c, train_data, valid_data, hidden_dim, emb_dim,
             spec.vocab_size, out_dir, forget_bias, log is not None)
            for v, s, c in plan]
    report = AblationReport(metric_name="test_accuracy")
    report.cells = _execute(_run_recall_cell, work, jobs)
    return report
