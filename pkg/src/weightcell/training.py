"""Reverse-mode gradients through unrolled cells, and the machinery to
train with them: loss, finite-difference checking, clipping, optimizers.

`bptt` is the hand-derived adjoint of `cells.step`/`cells.unroll` for
every variant; `grad_check` verifies it against central finite
differences, which stay the independent oracle throughout.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .cells import CellParams, CellState, Variant, unroll
from .numerics import FLOAT, new_rng


@dataclass
class Gradients:
    """Gradient blocks mirroring CellParams, plus input/initial-state
    gradients. Blocks absent in the variant are absent here too."""

    blocks: dict
    d_x: list
    d_h0: np.ndarray
    d_c0: np.ndarray | None = None

    def __getitem__(self, name):
        try:
            return self.blocks[name]
        except KeyError:
            raise KeyError(
                f"gradient block {name!r} does not exist (ablated)"
            ) from None


def _outer(da, v):
    """Accumulated outer product; sums over any leading batch axes."""
    if da.ndim == 1:
        return np.outer(da, v)
    return np.einsum("bi,bj->ij", da.reshape(-1, da.shape[-1]),
                     v.reshape(-1, v.shape[-1]))


def _bias(da):
    return da.reshape(-1, da.shape[-1]).sum(axis=0)


def bptt(params: CellParams, variant, traces, dloss_dh) -> Gradients:
    """Exact reverse-mode gradients through a full unroll.

    `dloss_dh[t]` is the direct loss gradient w.r.t. h_t (excluding the
    recurrent path, which this routine accumulates). Batched traces sum
    the parameter gradients over the batch.
    """
    variant = Variant(variant)
    n = len(traces)
    if n != len(dloss_dh):
        raise ValueError("dloss_dh length must match traces")
    grads = {name: np.zeros_like(b) for name, b in params.blocks.items()}
    d_x = [None] * n
    shape = traces[0].h.shape
    dh_next = np.zeros(shape, dtype=FLOAT)
    dc_next = np.zeros(shape, dtype=FLOAT) if variant.has_cell else None

    for t in range(n - 1, -1, -1):
        tr = traces[t]
        dh = np.asarray(dloss_dh[t], dtype=FLOAT) + dh_next

        if variant is Variant.SRNN:
            da = dh * (1.0 - tr.h * tr.h)
            grads["W_hh"] += _outer(da, tr.h_prev)
            grads["W_hx"] += _outer(da, tr.x)
            grads["b_h"] += _bias(da)
            dh_next = da @ params["W_hh"]
            d_x[t] = da @ params["W_hx"]
            continue

        gates_use_h = variant is not Variant.NO_SRNN_NO_HIDDEN

        if variant is Variant.NO_SRNN_NO_OUT:
            # h = tanh(c), so dtanh = 1 - h^2
            dc = dh * (1.0 - tr.h * tr.h) + dc_next
            da_o = None
        else:
            tanh_c = np.tanh(tr.c)
            da_o = (dh * tanh_c) * tr.o * (1.0 - tr.o)
            dc = dh * tr.o * (1.0 - tanh_c * tanh_c) + dc_next

        d_ctilde = dc * tr.i
        di = dc * tr.c_tilde
        df = dc * tr.c_prev
        if variant is Variant.COUPLED:
            # f = 1 - i: the forget path flows back through i with a sign flip
            da_i = (di - df) * tr.i * (1.0 - tr.i)
            da_f = None
        else:
            da_i = di * tr.i * (1.0 - tr.i)
            da_f = df * tr.f * (1.0 - tr.f)
        da_c = (
            d_ctilde * (1.0 - tr.c_tilde * tr.c_tilde)
            if variant is Variant.LSTM
            else d_ctilde  # linear content
        )
        dc_next = dc * tr.f

        dh_prev = np.zeros(shape, dtype=FLOAT)
        dx = np.zeros(tr.x.shape, dtype=FLOAT)
        if variant is Variant.LSTM:
            grads["W_ch"] += _outer(da_c, tr.h_prev)
            grads["W_cx"] += _outer(da_c, tr.x)
            grads["b_c"] += _bias(da_c)
            dh_prev += da_c @ params["W_ch"]
            dx += da_c @ params["W_cx"]
        else:
            grads["W_cx"] += _outer(da_c, tr.x)
            dx += da_c @ params["W_cx"]
        for g, da in (("i", da_i), ("f", da_f), ("o", da_o)):
            if da is None:
                continue
            grads[f"W_{g}x"] += _outer(da, tr.x)
            grads[f"b_{g}"] += _bias(da)
            dx += da @ params[f"W_{g}x"]
            if gates_use_h:
                grads[f"W_{g}h"] += _outer(da, tr.h_prev)
                dh_prev += da @ params[f"W_{g}h"]
        dh_next = dh_prev
        d_x[t] = dx

    return Gradients(grads, d_x, dh_next, dc_next)


# ---------------------------------------------------------------------------
# gradient checking

@dataclass
class GradCheckReport:
    per_block_error: dict
    epsilon: float
    threshold: float
    passed: bool
    worst_block: str = ""


GRADCHECK_WARN_PARAMS = 10_000


def _readout_loss(params, variant, xs, readout):
    init = CellState.zeros(variant, params.hidden_dim)
    traces = unroll(params, variant, init, xs)
    return sum(float(np.dot(readout[t], tr.h)) for t, tr in enumerate(traces))


def grad_check(params: CellParams, variant, xs, epsilon=1e-5,
               threshold=1e-5, readout=None, warn=None) -> GradCheckReport:
    """Central finite differences vs analytic BPTT, per parameter block.

    Loss is a fixed random linear readout of every h_t so all paths get
    exercised. Relative error uses |a-n| / max(|a|, |n|, 1e-8).
    """
    variant = Variant(variant)
    if params.n_params() > GRADCHECK_WARN_PARAMS and warn is not False:
        import warnings
        warnings.warn(
            f"grad_check on {params.n_params()} parameters is slow; "
            "intended for small dims", stacklevel=2)
    if readout is None:
        rng = new_rng(1234)
        readout = [rng.standard_normal(params.hidden_dim) for _ in xs]
    init = CellState.zeros(variant, params.hidden_dim)
    traces = unroll(params, variant, init, xs)
    analytic = bptt(params, variant, traces, readout)

    per_block = {}
    for name, block in params.blocks.items():
        worst = 0.0
        flat = block.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + epsilon
            lp = _readout_loss(params, variant, xs, readout)
            flat[k] = orig - epsilon
            lm = _readout_loss(params, variant, xs, readout)
            flat[k] = orig
            numeric = (lp - lm) / (2.0 * epsilon)
            a = analytic.blocks[name].reshape(-1)[k]
            rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, rel)
        per_block[name] = worst
    worst_block = max(per_block, key=per_block.get)
    return GradCheckReport(
        per_block_error=per_block,
        epsilon=epsilon,
        threshold=threshold,
        passed=all(e < threshold for e in per_block.values()),
        worst_block=worst_block,
    )


# ---------------------------------------------------------------------------
# loss

def softmax_xent(logits, target: int):
    """Cross-entropy of one softmax prediction, in stable log-sum-exp
    form. Returns (loss, dloss/dlogits)."""
    logits = np.asarray(logits, dtype=FLOAT)
    if not 0 <= target < logits.shape[-1]:
        raise ValueError(f"target {target} out of range for {logits.shape[-1]} classes")
    m = logits.max()
    z = logits - m
    lse = m + math.log(np.exp(z).sum())
    loss = lse - logits[target]
    dlogits = np.exp(logits - lse)
    dlogits[target] -= 1.0
    return loss, dlogits


def softmax_xent_batch(logits, targets):
    """Summed cross-entropy over a batch of rows. Returns (total, dlogits)."""
    logits = np.asarray(logits, dtype=FLOAT)
    targets = np.asarray(targets)
    m = logits.max(axis=-1, keepdims=True)
    z = np.exp(logits - m)
    zsum = z.sum(axis=-1, keepdims=True)
    logp = logits - m - np.log(zsum)
    rows = np.arange(targets.size)
    total = -float(logp.reshape(targets.size, -1)[rows, targets.reshape(-1)].sum())
    dlogits = z / zsum
    flat = dlogits.reshape(targets.size, -1)
    flat[rows, targets.reshape(-1)] -= 1.0
    return total, dlogits


# ---------------------------------------------------------------------------
# clipping and optimizers

def global_norm(blocks: dict) -> float:
    return math.sqrt(sum(float((b * b).sum()) for b in blocks.values()))


def clip_global_norm(blocks: dict, max_norm: float):
    """Scale all blocks by max_norm/g when the global L2 norm g exceeds
    max_norm. Returns (blocks, scale_applied)."""
    if max_norm <= 0:
        raise ValueError("max_norm must be positive")
    for name, b in blocks.items():
        if not np.all(np.isfinite(b)):
            raise FloatingPointError(f"non-finite gradient in block {name!r}")
    g = global_norm(blocks)
    if g <= max_norm:
        return blocks, 1.0
    scale = max_norm / g
    for b in blocks.values():
        b *= scale
    return blocks, scale


@dataclass
class TrainingConfig:
    learning_rate: float = 1.0
    optimizer: str = "sgd"  # "sgd" | "adam"
    momentum: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float = 5.0
    bptt_len: int = 64
    batch_size: int = 32
    epochs: int = 5
    seed: int = 0
    lr_decay: float = 0.5  # applied when validation stops improving

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.clip_norm <= 0:
            raise ValueError("clip_norm must be positive")
        if self.bptt_len < 1:
            raise ValueError("bptt_len must be >= 1")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class OptimizerState:
    slots: dict = field(default_factory=dict)
    step: int = 0

    def slot(self, name, like):
        if name not in self.slots:
            self.slots[name] = {}
        return self.slots[name]


def optimizer_step(state: OptimizerState, blocks: dict, grads: dict,
                   config: TrainingConfig, lr: float | None = None):
    """Update parameter blocks in place; returns (blocks, state)."""
    if lr is None:
        lr = config.learning_rate
    state.step += 1
    for name, theta in blocks.items():
        g = grads[name]
        if g.shape != theta.shape:
            raise ValueError(f"shape mismatch for block {name!r}")
        if config.optimizer == "sgd":
            if config.momentum > 0.0:
                s = state.slot(name, theta)
                v = s.get("v")
                if v is None:
                    v = np.zeros_like(theta)
                v *= config.momentum
                v += g
                s["v"] = v
                theta -= lr * v
            else:
                theta -= lr * g
        else:  # adam
            s = state.slot(name, theta)
            m = s.get("m")
            if m is None:
                m = np.zeros_like(theta)
                v = np.zeros_like(theta)
            else:
                v = s["v"]
            m *= config.beta1
            m += (1 - config.beta1) * g
            v *= config.beta2
            v += (1 - config.beta2) * g * g
            s["m"], s["v"] = m, v
            mhat = m / (1 - config.beta1 ** state.step)
            vhat = v / (1 - config.beta2 ** state.step)
            theta -= lr * mhat / (np.sqrt(vhat) + config.eps)
    return blocks, state
