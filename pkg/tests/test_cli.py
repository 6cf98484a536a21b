import numpy as np
import pytest

from weightcell import checkpoint
from weightcell.cells import CellParams
from weightcell.cli import (EXIT_CHECK_FAILED, EXIT_DIVERGED, EXIT_OK,
                            EXIT_USAGE, main, parse_config_file)
from weightcell.corpus_gen import synthetic_text


@pytest.fixture
def corpus_file(tmp_path):
    p = tmp_path / "corpus.txt"
    p.write_text(synthetic_text(6000, 31))
    return p


def smoke_args(tmp_path, corpus_file, *extra):
    return [
        "--set", f"corpus={corpus_file}",
        "--set", f"out_dir={tmp_path / 'out'}",
        "--set", "hidden_dim=16", "--set", "emb_dim=8",
        "--set", "epochs=1", "--set", "bptt_len=16",
        "--set", "batch_size=8", "--set", "learning_rate=0.5",
        *extra,
    ]


def test_config_file_parsing(tmp_path):
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text(
        "# a comment\nvariant = lstm\nepochs=2  # trailing\n\nseed=5\n")
    cfg = parse_config_file(cfg_path)
    assert cfg == {"variant": "lstm", "epochs": "2", "seed": "5"}


def test_bad_config_line_is_usage_error(tmp_path):
    cfg_path = tmp_path / "bad.cfg"
    cfg_path.write_text("no_equals_sign\n")
    assert main(["train", "--config", str(cfg_path)]) == EXIT_USAGE


def test_train_missing_variant_names_key(tmp_path, corpus_file, capsys):
    code = main(["train", *smoke_args(tmp_path, corpus_file)])
    assert code == EXIT_USAGE
    assert "variant" in capsys.readouterr().err


def test_train_unknown_variant(tmp_path, corpus_file):
    code = main(["train", *smoke_args(tmp_path, corpus_file),
                 "--set", "variant=gru"])
    assert code == EXIT_USAGE


def test_train_zero_epochs_header_only(tmp_path, corpus_file):
    code = main(["train", *smoke_args(tmp_path, corpus_file),
                 "--set", "variant=lstm", "--set", "epochs=0"])
    assert code == EXIT_OK
    out = tmp_path / "out" / "train_lstm_seed0"
    lines = (out / "metrics.csv").read_text().strip().splitlines()
    assert len(lines) == 1  # header only
    assert (out / "config.txt").exists()


def test_train_smoke_checkpoint_roundtrip(tmp_path, corpus_file):
    code = main(["train", *smoke_args(tmp_path, corpus_file),
                 "--set", "variant=lstm"])
    assert code == EXIT_OK
    out = tmp_path / "out" / "train_lstm_seed0"
    model, vocab = checkpoint.load_model(out / "checkpoint.ckpt")
    assert model.hidden_dim == 16
    assert vocab
    # echoed config reproduces the run configuration
    echoed = dict(
        ln.split("=", 1)
        for ln in (out / "config.txt").read_text().strip().splitlines())
    assert echoed["variant"] == "lstm"
    assert echoed["epochs"] == "1"


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_train_divergence_exit_code(tmp_path, corpus_file):
    code = main(["train", *smoke_args(tmp_path, corpus_file),
                 "--set", "variant=srnn",
                 "--set", "learning_rate=1e300",
                 "--set", "clip_norm=1e12"])
    assert code == EXIT_DIVERGED


def test_ablate_two_variants(tmp_path, corpus_file):
    code = main(["ablate", *smoke_args(tmp_path, corpus_file),
                 "--set", "variants=lstm,srnn", "--set", "seeds=0,1"])
    assert code == EXIT_OK
    out = tmp_path / "out" / "ablate_lm"
    table = (out / "report.txt").read_text()
    lines = [ln for ln in table.splitlines() if ln.strip()]
    assert lines[0].startswith("Model")
    # canonical order: LSTM before -- GATES
    assert table.index("LSTM") < table.index("-- GATES")
    assert "±" in table  # two seeds: std column populated
    assert (out / "report.csv").exists()


def test_gradcheck_all_variants():
    assert main(["gradcheck", "--variant", "all", "--draws", "2"]) == EXIT_OK


def test_gradcheck_single_variant():
    assert main(["gradcheck", "--variant", "coupled", "--draws", "1",
                 "--input-dim", "3", "--hidden-dim", "4",
                 "--length", "5"]) == EXIT_OK


def _write_cell_and_inputs(tmp_path, variant="lstm", n=12, input_dim=3,
                           hidden_dim=8):
    from weightcell.numerics import new_rng
    params = CellParams.create(variant, input_dim, hidden_dim, seed=9)
    ckpt = tmp_path / "cell.ckpt"
    checkpoint.save_cell(ckpt, params)
    rng = new_rng(10)
    xs = rng.standard_normal((n, input_dim))
    inp = tmp_path / "inputs.csv"
    inp.write_text("\n".join(",".join(f"{v:.17g}" for v in row)
                             for row in xs))
    return ckpt, inp


def test_decompose_cell_checkpoint_passes(tmp_path, capsys):
    ckpt, inp = _write_cell_and_inputs(tmp_path)
    code = main(["decompose", "--checkpoint", str(ckpt),
                 "--input", str(inp), "--tolerance", "1e-8"])
    assert code == EXIT_OK
    assert "PASSED" in capsys.readouterr().out


def test_decompose_impossible_tolerance_fails(tmp_path, capsys):
    ckpt, inp = _write_cell_and_inputs(tmp_path)
    code = main(["decompose", "--checkpoint", str(ckpt),
                 "--input", str(inp), "--tolerance", "0"])
    assert code == EXIT_CHECK_FAILED
    assert "FAILED" in capsys.readouterr().out


def test_decompose_srnn_rejected(tmp_path, capsys):
    ckpt, inp = _write_cell_and_inputs(tmp_path, variant="srnn")
    code = main(["decompose", "--checkpoint", str(ckpt),
                 "--input", str(inp)])
    assert code == EXIT_USAGE
    assert "no memory cell" in capsys.readouterr().err


def test_decompose_writes_valid_pgm(tmp_path):
    ckpt, inp = _write_cell_and_inputs(tmp_path, n=9)
    pgm = tmp_path / "weights.pgm"
    code = main(["decompose", "--checkpoint", str(ckpt),
                 "--input", str(inp), "--heatmap", str(pgm)])
    assert code == EXIT_OK
    raw = pgm.read_bytes()
    assert raw.startswith(b"P5\n9 9\n255\n")
    assert len(raw) == len(b"P5\n9 9\n255\n") + 81


def test_decompose_model_checkpoint_with_text(tmp_path, corpus_file):
    code = main(["train", *smoke_args(tmp_path, corpus_file),
                 "--set", "variant=coupled"])
    assert code == EXIT_OK
    ckpt = tmp_path / "out" / "train_coupled_seed0" / "checkpoint.ckpt"
    text = tmp_path / "snippet.txt"
    text.write_text("the bread of the land")
    svg = tmp_path / "weights.svg"
    code = main(["decompose", "--checkpoint", str(ckpt),
                 "--input", str(text), "--heatmap", str(svg)])
    assert code == EXIT_OK
    assert svg.read_text().startswith("<svg")


def test_eval_reports_perplexity(tmp_path, corpus_file, capsys):
    main(["train", *smoke_args(tmp_path, corpus_file),
          "--set", "variant=lstm"])
    capsys.readouterr()
    ckpt = tmp_path / "out" / "train_lstm_seed0" / "checkpoint.ckpt"
    code = main(["eval", "--checkpoint", str(ckpt),
                 "--corpus", str(corpus_file)])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "valid perplexity" in out and "test perplexity" in out


def test_env_var_overrides_output_root(tmp_path, corpus_file, monkeypatch):
    monkeypatch.setenv("WEIGHTCELL_OUT", str(tmp_path / "envroot"))
    code = main(["train", *smoke_args(tmp_path, corpus_file),
                 "--set", "variant=lstm", "--set", "epochs=0"])
    assert code == EXIT_OK
    assert (tmp_path / "envroot" / "train_lstm_seed0" / "config.txt").exists()


def test_rerun_identical_metrics_modulo_wallclock(tmp_path, corpus_file):
    args = ["train", *smoke_args(tmp_path, corpus_file),
            "--set", "variant=lstm", "--seed", "3"]
    assert main(args) == EXIT_OK
    out = tmp_path / "out" / "train_lstm_seed3" / "metrics.csv"
    first = out.read_text()
    assert main(args) == EXIT_OK
    second = out.read_text()

    def strip_wallclock(csv):
        rows = [ln.split(",") for ln in csv.strip().splitlines()]
        return [r[:4] + r[5:] for r in rows]

    assert strip_wallclock(first) == strip_wallclock(second)
