import numpy as np
import numpy.testing as npt
import pytest

from weightcell.cells import CellParams, CellState, Variant, unroll
from weightcell.decomposition import (HeatmapGrid, UnsupportedVariantError,
                                      compute_weights, heatmap,
                                      heatmap_bidirectional, reconstruct_cell,
                                      save_heatmap, verify_identity,
                                      weight_sums)
from weightcell.numerics import new_rng

GATED = [v for v in Variant if v.has_cell]


def make_traces(variant, n, input_dim=3, hidden_dim=4, seed=0, x_scale=1.0):
    p = CellParams.create(variant, input_dim, hidden_dim, seed=seed)
    rng = new_rng(seed + 1000)
    xs = [x_scale * rng.standard_normal(input_dim) for _ in range(n)]
    return unroll(p, variant, CellState.zeros(variant, hidden_dim), xs)


def closed_form_weight(traces, j, t):
    """Independent oracle: w_j^t = i_j * prod_{k=j+1..t} f_k (1-indexed)."""
    w = traces[j - 1].i.copy()
    for k in range(j + 1, t + 1):
        w = w * traces[k - 1].f
    return w


def test_single_step_weight_is_input_gate():
    traces = make_traces(Variant.LSTM, 1)
    w = compute_weights(traces)
    npt.assert_array_equal(w.weight(1, 1), traces[0].i)


def test_saturated_gates_give_unit_weights():
    p = CellParams.create(Variant.LSTM, 2, 3, seed=0)
    p.blocks["b_i"][...] = 60.0
    p.blocks["b_f"][...] = 60.0
    for name in ("W_ih", "W_ix", "W_fh", "W_fx"):
        p.blocks[name][...] = 0.0
    xs = [new_rng(1).standard_normal(2) for _ in range(5)]
    traces = unroll(p, Variant.LSTM, CellState.zeros(Variant.LSTM, 3), xs)
    w = compute_weights(traces)
    for t in range(1, 6):
        for j in range(1, t + 1):
            npt.assert_allclose(w.weight(j, t), 1.0, atol=1e-12)


def test_dp_matches_closed_form_product():
    traces = make_traces(Variant.LSTM, 4, input_dim=2, hidden_dim=2, seed=9)
    w = compute_weights(traces)
    for t in range(1, 5):
        for j in range(1, t + 1):
            npt.assert_allclose(w.weight(j, t),
                                closed_form_weight(traces, j, t), atol=1e-14)


def test_srnn_traces_rejected():
    traces = make_traces(Variant.SRNN, 3)
    with pytest.raises(UnsupportedVariantError):
        compute_weights(traces)


def test_reconstruct_first_step():
    traces = make_traces(Variant.NO_SRNN, 1)
    recon = reconstruct_cell(compute_weights(traces), traces)
    npt.assert_allclose(recon[0], traces[0].i * traces[0].c_tilde, atol=0)
    npt.assert_allclose(recon[0], traces[0].c, atol=1e-15)


def test_zero_input_gates_zero_reconstruction():
    p = CellParams.create(Variant.LSTM, 2, 3, seed=4)
    p.blocks["b_i"][...] = -60.0
    for name in ("W_ih", "W_ix"):
        p.blocks[name][...] = 0.0
    xs = [new_rng(5).standard_normal(2) for _ in range(4)]
    traces = unroll(p, Variant.LSTM, CellState.zeros(Variant.LSTM, 3), xs)
    for r in reconstruct_cell(compute_weights(traces), traces):
        npt.assert_allclose(r, 0.0, atol=1e-24)


def test_identity_random_lstm_50_steps():
    traces = make_traces(Variant.LSTM, 50, input_dim=8, hidden_dim=32, seed=2)
    report = verify_identity(traces, 1e-9)
    assert report.passed
    assert report.max_abs_deviation <= 1e-9
    assert len(report.per_timestep_deviation) == 50


@pytest.mark.parametrize("variant", GATED)
def test_identity_all_gated_variants(variant):
    traces = make_traces(variant, 30, seed=7)
    assert verify_identity(traces, 1e-8).passed


def test_identity_planted_fault_detected():
    traces = make_traces(Variant.LSTM, 10, seed=3)
    traces[6].c = traces[6].c + 1e-3
    report = verify_identity(traces, 1e-8)
    assert not report.passed
    assert report.max_abs_deviation == pytest.approx(1e-3, rel=1e-3)


def test_identity_with_nonzero_initial_cell():
    p = CellParams.create(Variant.LSTM, 3, 4, seed=13)
    rng = new_rng(14)
    c0 = rng.standard_normal(4)
    init = CellState(np.zeros(4), c0.copy())
    xs = [rng.standard_normal(3) for _ in range(12)]
    traces = unroll(p, Variant.LSTM, init, xs)
    # without the boundary term the identity must fail...
    assert not verify_identity(traces, 1e-8).passed
    # ...and hold once (prod f) * c0 is added
    assert verify_identity(traces, 1e-8, c0=c0).passed


def test_weight_range_strict():
    traces = make_traces(Variant.LSTM, 25, seed=6)
    w = compute_weights(traces)
    for t in range(1, 26):
        for j in range(1, t + 1):
            v = w.weight(j, t)
            assert np.all(v > 0) and np.all(v < 1)


def test_weights_monotone_nonincreasing_in_t():
    traces = make_traces(Variant.COUPLED, 20, seed=8)
    w = compute_weights(traces)
    for j in range(1, 21):
        for t in range(j, 20):
            assert np.all(w.weight(j, t + 1) <= w.weight(j, t))


def test_weight_sums_single_step():
    traces = make_traces(Variant.LSTM, 1, seed=10)
    sums = weight_sums(compute_weights(traces))
    npt.assert_array_equal(sums[0], traces[0].i)


def test_coupled_weight_sums_in_unit_interval():
    # brute force over random gate draws with f = 1 - i
    rng = new_rng(123)
    for _ in range(50):
        n, d = 30, 4
        i = rng.uniform(0.001, 0.999, size=(n, d))
        f = 1.0 - i
        sums = np.zeros(d)
        w_prev = []
        for t in range(n):
            w_prev = [f[t] * w for w in w_prev]
            w_prev.append(i[t].copy())
            s = np.sum(w_prev, axis=0)
            assert np.all(s >= 0) and np.all(s <= 1.0 + 1e-12)
    traces = make_traces(Variant.COUPLED, 40, seed=3)
    for s in weight_sums(compute_weights(traces)):
        assert np.all(s >= 0) and np.all(s <= 1.0 + 1e-12)


def test_lstm_saturated_sums_approach_t():
    p = CellParams.create(Variant.LSTM, 2, 3, seed=0)
    p.blocks["b_i"][...] = 60.0
    p.blocks["b_f"][...] = 60.0
    for name in ("W_ih", "W_ix", "W_fh", "W_fx"):
        p.blocks[name][...] = 0.0
    xs = [new_rng(2).standard_normal(2) for _ in range(6)]
    traces = unroll(p, Variant.LSTM, CellState.zeros(Variant.LSTM, 3), xs)
    sums = weight_sums(compute_weights(traces))
    for t, s in enumerate(sums, start=1):
        npt.assert_allclose(s, float(t), atol=1e-9)


# --- heatmaps ---------------------------------------------------------------

def test_heatmap_all_ones_weights():
    from weightcell.decomposition import WeightTensor
    n, d = 3, 4
    data = np.zeros((n, n, d))
    for t in range(n):
        data[t, : t + 1] = 1.0
    grid = heatmap(WeightTensor(data, n, d))
    for t in range(n):
        for j in range(n):
            if j <= t:
                assert grid.norms[j, t] == pytest.approx(2.0)
            else:
                assert grid.norms[j, t] == 0.0


def test_heatmap_norms_vs_per_cell_summation():
    traces = make_traces(Variant.LSTM, 8, seed=5)
    w = compute_weights(traces)
    grid = heatmap(w)
    for t in range(1, 9):
        for j in range(1, t + 1):
            manual = np.sqrt(float(np.sum(w.weight(j, t) ** 2)))
            assert abs(grid.norms[j - 1, t - 1] - manual) < 1e-12


def test_heatmap_causal_zero_region_and_bound():
    traces = make_traces(Variant.LSTM, 6, hidden_dim=4, seed=2)
    grid = heatmap(compute_weights(traces))
    assert np.all(grid.norms[np.triu_indices(6, k=1)[::-1]] >= 0)
    for t in range(6):
        for j in range(t + 1, 6):
            assert grid.norms[j, t] == 0.0
    assert np.all(grid.norms <= np.sqrt(4) + 1e-12)


def test_heatmap_label_mismatch():
    traces = make_traces(Variant.LSTM, 4, seed=1)
    with pytest.raises(ValueError):
        heatmap(compute_weights(traces), labels=["a", "b"])


def test_bidirectional_heatmap_triangles():
    fwd = make_traces(Variant.LSTM, 5, seed=1)
    bwd = make_traces(Variant.LSTM, 5, seed=2)
    wf, wb = compute_weights(fwd), compute_weights(bwd)
    grid = heatmap_bidirectional(wf, wb, labels=list("abcde"))
    f_grid = heatmap(wf).norms
    b_grid = heatmap(wb).norms
    n = 5
    for t in range(n):
        for j in range(n):
            if j <= t:
                assert grid.norms[j, t] == f_grid[j, t]
            else:
                assert grid.norms[j, t] == b_grid[n - 1 - j, n - 1 - t]


def test_save_heatmap_formats(tmp_path):
    traces = make_traces(Variant.LSTM, 5, seed=4)
    grid = heatmap(compute_weights(traces), labels=list("abcde"))

    csv_path = tmp_path / "w.csv"
    save_heatmap(grid, csv_path)
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "a,b,c,d,e"
    assert len(lines) == 6
    parsed = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    npt.assert_allclose(parsed, grid.norms, rtol=0, atol=0)  # 17 sig digits

    pgm_path = tmp_path / "w.pgm"
    save_heatmap(grid, pgm_path)
    raw = pgm_path.read_bytes()
    assert raw.startswith(b"P5\n5 5\n255\n")
    assert len(raw) == len(b"P5\n5 5\n255\n") + 25
    pixels = np.frombuffer(raw[len(b"P5\n5 5\n255\n"):], dtype=np.uint8)
    # darker = larger: the max-norm cell maps to 0
    assert pixels.min() == 0

    svg_path = tmp_path / "w.svg"
    save_heatmap(grid, svg_path)
    text = svg_path.read_text()
    assert text.startswith("<svg") and text.count("<rect") == 25

    with pytest.raises(ValueError):
        save_heatmap(grid, tmp_path / "w.png")
