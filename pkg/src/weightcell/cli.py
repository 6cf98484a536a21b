"""Command-line surface.

Subcommands: train, ablate, gradcheck, decompose, eval.
Config files are flat `key=value` lines (# comments); any key can be
overridden with repeated --set key=value flags. The WEIGHTCELL_OUT
environment variable overrides the output root.

Exit codes: 0 ok, 1 check failure, 2 usage error, 3 divergence.
"""

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt
from .ablation import run_lm_sweep, run_recall_sweep
from .cells import CellParams, CellState, TABLE_ORDER, Variant, unroll
from .corpus_gen import synthetic_text
from .decomposition import (UnsupportedVariantError, compute_weights,
                            heatmap, heatmap_bidirectional, save_heatmap,
                            verify_identity)
from .model import SequenceModel
from .tasks import (SyntheticSpec, corpus_from_text, load_text_corpus,
                    make_recall, perplexity)
from .trainer import train_lm, train_recall, write_metrics
from .training import TrainingConfig, grad_check

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_DIVERGED = 3


class UsageError(Exception):
    pass


def parse_config_file(path) -> dict:
    cfg = {}
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read config file {path}: {e}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        cfg[key.strip()] = value.strip()
    return cfg


def build_config(args) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        cfg.update(parse_config_file(args.config))
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        cfg[key.strip()] = value.strip()
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = str(args.seed)
    return cfg


def _get(cfg, key, default=None, required=False, cast=str):
    if key not in cfg:
        if required:
            raise UsageError(f"missing required config key: {key}")
        return default
    try:
        return cast(cfg[key])
    except ValueError:
        raise UsageError(f"bad value for {key}: {cfg[key]!r}") from None


def _out_dir(cfg, default_name) -> Path:
    root = os.environ.get("WEIGHTCELL_OUT") or _get(cfg, "out_dir",
                                                    default="runs")
    out = Path(root) / default_name
    out.mkdir(parents=True, exist_ok=True)
    return out


def echo_config(cfg: dict, out_dir: Path):
    lines = [f"{k}={v}" for k, v in sorted(cfg.items())]
    (out_dir / "config.txt").write_text("\n".join(lines) + "\n")


def training_config(cfg) -> TrainingConfig:
    return TrainingConfig(
        learning_rate=_get(cfg, "learning_rate", 1.0, cast=float),
        optimizer=_get(cfg, "optimizer", "sgd"),
        momentum=_get(cfg, "momentum", 0.0, cast=float),
        clip_norm=_get(cfg, "clip_norm", 5.0, cast=float),
        bptt_len=_get(cfg, "bptt_len", 64, cast=int),
        batch_size=_get(cfg, "batch_size", 32, cast=int),
        epochs=_get(cfg, "epochs", 5, cast=int),
        seed=_get(cfg, "seed", 0, cast=int),
        lr_decay=_get(cfg, "lr_decay", 0.5, cast=float),
    )


def load_corpus_from_config(cfg):
    corpus_key = _get(cfg, "corpus", required=True)
    if corpus_key.startswith("synthetic"):
        n = _get(cfg, "corpus_chars", 1_000_000, cast=int)
        seed = _get(cfg, "corpus_seed", 12345, cast=int)
        return corpus_from_text(synthetic_text(n, seed))
    return load_text_corpus(corpus_key)


def _parse_variant(name) -> Variant:
    try:
        return Variant(name)
    except ValueError:
        valid = ", ".join(v.value for v in Variant)
        raise UsageError(f"unknown variant {name!r}; expected one of: {valid}")


# ---------------------------------------------------------------------------
# subcommands

def cmd_train(args):
    cfg = build_config(args)
    variant = _parse_variant(_get(cfg, "variant", required=True))
    task = _get(cfg, "task", "lm")
    tc = training_config(cfg)
    hidden = _get(cfg, "hidden_dim", 128, cast=int)
    emb = _get(cfg, "emb_dim", 64, cast=int)
    layers = _get(cfg, "num_layers", 1, cast=int)
    fbias = _get(cfg, "forget_bias", 1.0, cast=float)
    out = _out_dir(cfg, f"train_{variant.value}_seed{tc.seed}")
    echo_config(cfg, out)

    if task == "lm":
        corpus = load_corpus_from_config(cfg)
        model = SequenceModel.create(variant, corpus.vocab_size, emb, hidden,
                                     layers, seed=tc.seed, forget_bias=fbias)
        result = train_lm(model, corpus, tc,
                          checkpoint_path=str(out / "checkpoint.ckpt"),
                          vocab_chars="".join(corpus.char_to_id),
                          log=lambda m: print(m, flush=True))
    elif task == "recall":
        spec = SyntheticSpec(
            delay=_get(cfg, "delay", 50, cast=int),
            alphabet_size=_get(cfg, "alphabet_size", 8, cast=int),
            count=_get(cfg, "count", 10_000, cast=int),
            seed=_get(cfg, "data_seed", 7, cast=int),
        )
        from dataclasses import replace
        train_data = make_recall(spec)
        valid_data = make_recall(replace(spec, count=2000, seed=spec.seed + 1))
        model = SequenceModel.create(variant, spec.vocab_size, emb, hidden,
                                     1, seed=tc.seed, forget_bias=fbias)
        result = train_recall(model, train_data, valid_data, tc,
                              log=lambda m: print(m, flush=True))
        ckpt.save_model(str(out / "checkpoint.ckpt"), model)
    else:
        raise UsageError(f"unknown task {task!r} (expected lm or recall)")

    write_metrics(result, out / "metrics.csv")
    if result.failed:
        print(f"run diverged at epoch {result.failed_epoch}", file=sys.stderr)
        return EXIT_DIVERGED
    print(f"done; outputs in {out}")
    return EXIT_OK


def cmd_ablate(args):
    cfg = build_config(args)
    names = _get(cfg, "variants",
                 default=",".join(v.value for v in TABLE_ORDER[:5]))
    variants = [_parse_variant(n.strip()) for n in names.split(",") if n.strip()]
    seeds = [int(s) for s in _get(cfg, "seeds", "0").split(",") if s.strip()]
    if not variants or not seeds:
        raise UsageError("ablate needs at least one variant and one seed")
    tc = training_config(cfg)
    hidden = _get(cfg, "hidden_dim", 128, cast=int)
    emb = _get(cfg, "emb_dim", 64, cast=int)
    layers = _get(cfg, "num_layers", 1, cast=int)
    fbias = _get(cfg, "forget_bias", 1.0, cast=float)
    task = _get(cfg, "task", "lm")
    out = _out_dir(cfg, _get(cfg, "run_name", f"ablate_{task}"))
    echo_config(cfg, out)
    overrides = {}
    ov = _get(cfg, "lr_override", None)
    if ov:
        name, _, val = ov.partition("=")
        overrides[_parse_variant(name)] = float(val)
    jobs = _get(cfg, "jobs", args.jobs or 1, cast=int)
    log = lambda m: print(m, flush=True)

    if task == "lm":
        corpus = load_corpus_from_config(cfg)
        report = run_lm_sweep(corpus, variants, seeds, tc, hidden, emb,
                              layers, out_dir=str(out),
                              lr_overrides=overrides, jobs=jobs,
                              forget_bias=fbias, log=log)
    elif task == "recall":
        spec = SyntheticSpec(
            delay=_get(cfg, "delay", 50, cast=int),
            alphabet_size=_get(cfg, "alphabet_size", 8, cast=int),
            count=_get(cfg, "count", 10_000, cast=int),
            seed=_get(cfg, "data_seed", 7, cast=int),
        )
        report = run_recall_sweep(spec, variants, seeds, tc, hidden, emb,
                                  lr_overrides=overrides, out_dir=str(out),
                                  jobs=jobs, forget_bias=fbias, log=log)
    else:
        raise UsageError(f"unknown task {task!r}")

    (out / "report.csv").write_text(report.to_csv())
    table = report.to_table()
    (out / "report.txt").write_text(table)
    print(table)
    return EXIT_OK


def cmd_gradcheck(args):
    names = ([v.value for v in Variant] if args.variant == "all"
             else [args.variant])
    threshold = args.threshold
    worst_overall = ("", 0.0)
    failed = False
    for name in names:
        variant = _parse_variant(name)
        from .numerics import new_rng
        rng = new_rng(args.seed)
        for draw in range(args.draws):
            params = CellParams.create(variant, args.input_dim,
                                       args.hidden_dim,
                                       rng=rng)
            xs = [rng.standard_normal(args.input_dim)
                  for _ in range(args.length)]
            readout = [rng.standard_normal(args.hidden_dim)
                       for _ in range(args.length)]
            report = grad_check(params, variant, xs, epsilon=args.epsilon,
                                threshold=threshold, readout=readout)
            worst = report.per_block_error[report.worst_block]
            if worst > worst_overall[1]:
                worst_overall = (f"{variant.value}/{report.worst_block}", worst)
            if not report.passed:
                failed = True
                print(f"FAIL {variant.value} draw {draw}: "
                      f"{report.worst_block} rel err {worst:.3g}")
        print(f"{variant.value}: max rel err over {args.draws} draws OK"
              if not failed else f"{variant.value}: FAILED")
    print(f"worst block: {worst_overall[0]} rel err {worst_overall[1]:.3g} "
          f"(threshold {threshold:g})")
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def _read_vector_csv(path):
    rows = []
    for line in Path(path).read_text().strip().splitlines():
        rows.append([float(v) for v in line.replace(",", " ").split()])
    return [np.array(r) for r in rows]


def cmd_decompose(args):
    header, blocks = ckpt.load_blocks(args.checkpoint)
    variant = header["variant"]
    if not variant.has_cell:
        print("variant has no memory cell", file=sys.stderr)
        return EXIT_USAGE

    labels = None
    if "embedding" in blocks:
        model, vocab_chars = ckpt.load_model(args.checkpoint)
        text = Path(args.input).read_text()
        if vocab_chars is None:
            raise UsageError("checkpoint has no vocabulary; cannot map text")
        char_to_id = {c: i for i, c in enumerate(vocab_chars)}
        unk = len(char_to_id)
        ids = [char_to_id.get(c, unk) for c in text.strip()]
        if not ids:
            raise UsageError("empty input text")
        xs = [model.embedding[i] for i in ids]
        params = model.layers[args.layer]
        if args.layer > 0:
            # feed through the stack up to the requested layer, unbatched
            for l in range(args.layer):
                p = model.layers[l]
                traces = unroll(p, variant,
                                CellState.zeros(variant, p.hidden_dim), xs)
                xs = [tr.h for tr in traces]
        labels = list(text.strip())
    else:
        params = CellParams(variant, header["input_dim"],
                            header["hidden_dim"], blocks)
        xs = _read_vector_csv(args.input)

    init = CellState.zeros(variant, params.hidden_dim)
    traces = unroll(params, variant, init, xs)
    report = verify_identity(traces, args.tolerance)
    status = "PASSED" if report.passed else "FAILED"
    print(f"{status}: max abs deviation {report.max_abs_deviation:.3g} "
          f"(tolerance {report.tolerance:g}, {len(traces)} steps)")
    if args.heatmap:
        weights = compute_weights(traces)
        if header["direction_count"] == 2:
            bwd_blocks = {k[4:]: v for k, v in blocks.items()
                          if k.startswith("bwd/")}
            fwd_blocks = {k[4:]: v for k, v in blocks.items()
                          if k.startswith("fwd/")}
            p_fwd = CellParams(variant, header["input_dim"],
                               header["hidden_dim"], fwd_blocks)
            p_bwd = CellParams(variant, header["input_dim"],
                               header["hidden_dim"], bwd_blocks)
            tr_f = unroll(p_fwd, variant, init, xs)
            tr_b = unroll(p_bwd, variant, init, xs[::-1])
            grid = heatmap_bidirectional(compute_weights(tr_f),
                                         compute_weights(tr_b), labels)
        else:
            grid = heatmap(weights, labels)
        save_heatmap(grid, args.heatmap)
        print(f"heatmap written to {args.heatmap}")
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def cmd_eval(args):
    model, vocab_chars = ckpt.load_model(args.checkpoint)
    if args.corpus.startswith("synthetic"):
        corpus = corpus_from_text(synthetic_text(args.corpus_chars,
                                                 args.corpus_seed))
    else:
        corpus = load_text_corpus(args.corpus)
    for split in ("valid", "test"):
        ids = corpus.split_ids(split)
        if len(ids) < 2:
            continue
        ppl = perplexity(model, ids)
        print(f"{split} perplexity: {ppl:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(
        prog="weightcell",
        description="Gated-RNN ablation lab: train LSTM variants, verify the "
                    "memory cell's weighted-sum decomposition, export "
                    "attention-style heatmaps.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="flat key=value config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
        sp.add_argument("--seed", type=int, help="override the seed")

    sp = sub.add_parser("train", help="train one (variant, seed)")
    common(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("ablate", help="run a variant x seed sweep")
    common(sp)
    sp.add_argument("--jobs", type=int, default=1,
                    help="parallel runs (default 1, deterministic logs)")
    sp.set_defaults(func=cmd_ablate)

    sp = sub.add_parser("gradcheck",
                        help="finite-difference check of BPTT gradients")
    sp.add_argument("--variant", default="all")
    sp.add_argument("--input-dim", type=int, default=3)
    sp.add_argument("--hidden-dim", type=int, default=4)
    sp.add_argument("--length", type=int, default=5)
    sp.add_argument("--draws", type=int, default=3)
    sp.add_argument("--epsilon", type=float, default=1e-5)
    sp.add_argument("--threshold", type=float, default=1e-5)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_gradcheck)

    sp = sub.add_parser("decompose",
                        help="verify the weighted-sum identity on a "
                             "checkpoint; optionally export a heatmap")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--input", required=True,
                    help="text file (model checkpoints) or CSV of input "
                         "vectors (bare cell checkpoints)")
    sp.add_argument("--tolerance", type=float, default=1e-8)
    sp.add_argument("--heatmap", help="output path (.csv/.pgm/.svg)")
    sp.add_argument("--layer", type=int, default=0)
    sp.set_defaults(func=cmd_decompose)

    sp = sub.add_parser("eval", help="evaluate a checkpoint on a corpus")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--corpus-chars", type=int, default=1_000_000)
    sp.add_argument("--corpus-seed", type=int, default=12345)
    sp.set_defaults(func=cmd_eval)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse uses 2 for usage errors already
        raise
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except UnsupportedVariantError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
