"""Recurrent cell variants: the simple RNN, the full LSTM, its ablations,
and the coupled-gate form.

Every variant is a pure step function over immutable parameters. A step
returns both the new state and a complete trace (gates, content, cell,
pre-activations) so the backward pass and the weighted-sum decomposition
can share one forward pass.

The full LSTM:

    c~_t = tanh(W_ch h_{t-1} + W_cx x_t + b_c)        content layer
    i_t  = sigma(W_ih h_{t-1} + W_ix x_t + b_i)       input gate
    f_t  = sigma(W_fh h_{t-1} + W_fx x_t + b_f)       forget gate
    c_t  = i_t * c~_t + f_t * c_{t-1}                 memory cell
    o_t  = sigma(W_oh h_{t-1} + W_ox x_t + b_o)       output gate
    h_t  = o_t * tanh(c_t)                            output layer

Ablations replace the content layer with a bias-free linear map W_cx x_t
(NO_SRNN), additionally drop the output gate so h_t = tanh(c_t)
(NO_SRNN_NO_OUT), or remove h_{t-1} from every gate so the additive cell
is the only recurrence (NO_SRNN_NO_HIDDEN, which keeps an x-only output
gate). SRNN keeps only h_t = tanh(W_hh h_{t-1} + W_hx x_t + b_h).
COUPLED ties the gates, f_t = 1 - i_t.

Parameter blocks absent under a variant do not exist on the CellParams
object at all; reading one raises, it is never silently zero.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .numerics import FLOAT, new_rng, sigmoid, tanh, xavier_uniform


class Variant(str, Enum):
    SRNN = "srnn"
    LSTM = "lstm"
    NO_SRNN = "no-srnn"
    NO_SRNN_NO_OUT = "no-srnn-out"
    NO_SRNN_NO_HIDDEN = "no-srnn-hidden"
    COUPLED = "coupled"

    @property
    def display_name(self) -> str:
        return _DISPLAY[self]

    @property
    def has_cell(self) -> bool:
        """True for every variant with a gated memory cell."""
        return self is not Variant.SRNN


_DISPLAY = {
    Variant.LSTM: "LSTM",
    Variant.NO_SRNN: "-- S-RNN",
    Variant.NO_SRNN_NO_OUT: "-- S-RNN -- OUT",
    Variant.NO_SRNN_NO_HIDDEN: "-- S-RNN -- HIDDEN",
    Variant.SRNN: "-- GATES",
    Variant.COUPLED: "COUPLED",
}

# Canonical presentation order for ablation tables.
TABLE_ORDER = [
    Variant.LSTM,
    Variant.NO_SRNN,
    Variant.NO_SRNN_NO_OUT,
    Variant.NO_SRNN_NO_HIDDEN,
    Variant.SRNN,
    Variant.COUPLED,
]


def block_shapes(variant: Variant, input_dim: int, hidden_dim: int):
    """Ordered dict of block name -> shape for the variant."""
    h, x = hidden_dim, input_dim
    W = lambda suffix: (h, h) if suffix == "h" else (h, x)
    shapes = {}

    def gate(g, with_h=True):
        if with_h:
            shapes[f"W_{g}h"] = (h, h)
        shapes[f"W_{g}x"] = (h, x)
        shapes[f"b_{g}"] = (h,)

    if variant is Variant.SRNN:
        gate("h")
        return shapes

    if variant is Variant.LSTM:
        gate("c")
    else:
        # all -S-RNN forms: bias-free linear content, no recurrent block
        shapes["W_cx"] = (h, x)

    with_h = variant is not Variant.NO_SRNN_NO_HIDDEN
    gate("i", with_h)
    if variant is not Variant.COUPLED:
        gate("f", with_h)
    if variant is not Variant.NO_SRNN_NO_OUT:
        gate("o", with_h)
    return shapes


def param_count(variant: Variant, input_dim: int, hidden_dim: int) -> int:
    """Exact number of scalar parameters in the variant's CellParams."""
    if input_dim <= 0 or hidden_dim <= 0:
        raise ValueError("dimensions must be positive")
    return sum(
        int(np.prod(s)) for s in block_shapes(variant, input_dim, hidden_dim).values()
    )


@dataclass
class CellParams:
    """All weight matrices and bias vectors of one cell variant.

    Blocks live in a dict keyed by name (W_ih, b_f, ...). Only the blocks
    the variant defines exist; `params["W_fh"]` on a coupled-gate cell
    raises KeyError.
    """

    variant: Variant
    input_dim: int
    hidden_dim: int
    blocks: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.blocks[name]
        except KeyError:
            raise KeyError(
                f"parameter block {name!r} does not exist for variant "
                f"{self.variant.value} (ablated)"
            ) from None

    def __contains__(self, name: str) -> bool:
        return name in self.blocks

    def block_names(self):
        return list(self.blocks)

    @classmethod
    def create(cls, variant, input_dim, hidden_dim, rng=None, seed=None,
               forget_bias=1.0):
        """Fresh parameters: Xavier-uniform weights; zero biases except the
        forget-gate bias, which starts at `forget_bias`."""
        if rng is None:
            rng = new_rng(0 if seed is None else seed)
        variant = Variant(variant)
        blocks = {}
        for name, shape in block_shapes(variant, input_dim, hidden_dim).items():
            if len(shape) == 1:
                b = np.zeros(shape, dtype=FLOAT)
                if name == "b_f":
                    b += forget_bias
                blocks[name] = b
            else:
                blocks[name] = xavier_uniform(rng, *shape)
        return cls(variant, input_dim, hidden_dim, blocks)

    def copy(self):
        return CellParams(
            self.variant, self.input_dim, self.hidden_dim,
            {k: v.copy() for k, v in self.blocks.items()},
        )

    def n_params(self) -> int:
        return sum(b.size for b in self.blocks.values())


@dataclass
class CellState:
    """Hidden state h and, for gated variants, memory cell c."""

    h: np.ndarray
    c: np.ndarray | None = None

    @classmethod
    def zeros(cls, variant, hidden_dim, batch_shape=()):
        shape = (*batch_shape, hidden_dim)
        h = np.zeros(shape, dtype=FLOAT)
        c = np.zeros(shape, dtype=FLOAT) if Variant(variant).has_cell else None
        return cls(h, c)


@dataclass
class StepTrace:
    """Everything one step computed, kept for backprop and decomposition.

    Gate/content fields are None where the variant ablates them. `a_*`
    are pre-activations. Arrays may carry a leading batch axis.
    """

    x: np.ndarray
    h_prev: np.ndarray
    h: np.ndarray
    c_prev: np.ndarray | None = None
    c: np.ndarray | None = None
    c_tilde: np.ndarray | None = None
    i: np.ndarray | None = None
    f: np.ndarray | None = None
    o: np.ndarray | None = None
    a_c: np.ndarray | None = None
    a_i: np.ndarray | None = None
    a_f: np.ndarray | None = None
    a_o: np.ndarray | None = None
    a_h: np.ndarray | None = None


def _affine(params, g, h_prev, x, with_h):
    """Pre-activation W_gh h + W_gx x + b_g; the single gate code path
    shared by every gated variant."""
    a = x @ params[f"W_{g}x"].T + params[f"b_{g}"]
    if with_h:
        a = a + h_prev @ params[f"W_{g}h"].T
    return a


def step(params: CellParams, variant: Variant, prev: CellState, x):
    """One recurrence step. Returns (new CellState, StepTrace)."""
    variant = Variant(variant)
    x = np.asarray(x, dtype=FLOAT)
    if x.shape[-1] != params.input_dim:
        raise ValueError(
            f"input dim {x.shape[-1]} != expected {params.input_dim}"
        )
    if prev.h.shape[-1] != params.hidden_dim:
        raise ValueError(
            f"state dim {prev.h.shape[-1]} != expected {params.hidden_dim}"
        )
    if not np.all(np.isfinite(x)):
        raise FloatingPointError("non-finite input vector")
    h_prev = prev.h

    if variant is Variant.SRNN:
        a_h = _affine(params, "h", h_prev, x, with_h=True)
        h = tanh(a_h)
        return CellState(h), StepTrace(x=x, h_prev=h_prev, h=h, a_h=a_h)

    c_prev = prev.c
    if c_prev is None:
        raise ValueError("gated variant requires a memory cell state")
    gates_use_h = variant is not Variant.NO_SRNN_NO_HIDDEN

    if variant is Variant.LSTM:
        a_c = _affine(params, "c", h_prev, x, with_h=True)
        c_tilde = tanh(a_c)
    else:
        a_c = None
        c_tilde = x @ params["W_cx"].T  # bias-free linear content

    a_i = _affine(params, "i", h_prev, x, with_h=gates_use_h)
    i = sigmoid(a_i)
    if variant is Variant.COUPLED:
        a_f = None
        f = 1.0 - i
    else:
        a_f = _affine(params, "f", h_prev, x, with_h=gates_use_h)
        f = sigmoid(a_f)

    c = i * c_tilde + f * c_prev

    if variant is Variant.NO_SRNN_NO_OUT:
        a_o = o = None
        h = tanh(c)
    else:
        a_o = _affine(params, "o", h_prev, x, with_h=gates_use_h)
        o = sigmoid(a_o)
        h = o * tanh(c)

    trace = StepTrace(
        x=x, h_prev=h_prev, h=h, c_prev=c_prev, c=c, c_tilde=c_tilde,
        i=i, f=f, o=o, a_c=a_c, a_i=a_i, a_f=a_f, a_o=a_o,
    )
    return CellState(h, c), trace


def unroll(params, variant, init: CellState, xs):
    """Run step over a sequence; returns the list of traces.

    `xs` is a sequence of input vectors (or batched (B, input_dim) arrays).
    """
    xs = list(xs)
    if not xs:
        raise ValueError("unroll requires a nonempty input sequence")
    state = init
    traces = []
    for t, x in enumerate(xs):
        try:
            state, tr = step(params, variant, state, x)
        except (ValueError, FloatingPointError) as e:
            raise type(e)(f"at timestep {t}: {e}") from None
        traces.append(tr)
    return traces


def unroll_bidirectional(params_fwd, params_bwd, variant, xs, init_fwd=None,
                         init_bwd=None):
    """Forward and reversed unrolls; output[t] = concat(h_fwd[t], h_bwd[t]).

    Returns (outputs, traces_fwd, traces_bwd); traces_bwd is in reversed
    (processing) order.
    """
    if (params_fwd.input_dim, params_fwd.hidden_dim) != (
        params_bwd.input_dim, params_bwd.hidden_dim
    ):
        raise ValueError("forward/backward parameter dims differ")
    xs = list(xs)
    variant = Variant(variant)
    if init_fwd is None:
        init_fwd = CellState.zeros(variant, params_fwd.hidden_dim,
                                   np.shape(xs[0])[:-1])
    if init_bwd is None:
        init_bwd = CellState.zeros(variant, params_bwd.hidden_dim,
                                   np.shape(xs[0])[:-1])
    traces_fwd = unroll(params_fwd, variant, init_fwd, xs)
    traces_bwd = unroll(params_bwd, variant, init_bwd, xs[::-1])
    outputs = [
        np.concatenate([traces_fwd[t].h, traces_bwd[len(xs) - 1 - t].h], axis=-1)
        for t in range(len(xs))
    ]
    return outputs, traces_fwd, traces_bwd
