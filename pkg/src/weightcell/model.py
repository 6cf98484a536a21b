"""Token-sequence model: embedding, one or more recurrent layers of a
chosen variant, and a softmax readout. Forward/backward are plain numpy;
the per-layer backward delegates to `training.bptt`.
"""

from dataclasses import dataclass

import numpy as np

from .cells import CellParams, CellState, Variant, step
from .numerics import FLOAT, new_rng, xavier_uniform
from .training import bptt


@dataclass
class SequenceModel:
    variant: Variant
    vocab_size: int
    emb_dim: int
    hidden_dim: int
    layers: list  # CellParams per layer
    embedding: np.ndarray  # (V, E)
    out_w: np.ndarray  # (V, H)
    out_b: np.ndarray  # (V,)

    @classmethod
    def create(cls, variant, vocab_size, emb_dim, hidden_dim, num_layers=1,
               seed=0, forget_bias=1.0):
        variant = Variant(variant)
        rng = new_rng(seed)
        embedding = xavier_uniform(rng, vocab_size, emb_dim)
        layers = [
            CellParams.create(
                variant, emb_dim if l == 0 else hidden_dim, hidden_dim,
                rng=rng, forget_bias=forget_bias
            )
            for l in range(num_layers)
        ]
        out_w = xavier_uniform(rng, vocab_size, hidden_dim)
        out_b = np.zeros(vocab_size, dtype=FLOAT)
        return cls(variant, vocab_size, emb_dim, hidden_dim, layers,
                   embedding, out_w, out_b)

    @property
    def num_layers(self):
        return len(self.layers)

    def n_params(self) -> int:
        return (self.embedding.size + self.out_w.size + self.out_b.size
                + sum(p.n_params() for p in self.layers))

    def all_blocks(self) -> dict:
        """Flat name -> array view of every parameter block."""
        blocks = {"embedding": self.embedding, "out_w": self.out_w,
                  "out_b": self.out_b}
        for l, p in enumerate(self.layers):
            for name, arr in p.blocks.items():
                blocks[f"layer{l}/{name}"] = arr
        return blocks

    def zero_states(self, batch_size):
        return [
            CellState.zeros(self.variant, self.hidden_dim, (batch_size,))
            for _ in self.layers
        ]

    def forward(self, ids, states=None):
        """ids: (B, T) int array. Returns (logits (B,T,V), per-layer trace
        lists, final states). States carry values only; no gradient flows
        between calls."""
        ids = np.asarray(ids)
        B, T = ids.shape
        if states is None:
            states = self.zero_states(B)
        xs = self.embedding[ids]  # (B, T, E)
        layer_traces = [[] for _ in self.layers]
        h_top = np.empty((B, T, self.hidden_dim), dtype=FLOAT)
        for t in range(T):
            inp = xs[:, t]
            new_states = []
            for l, params in enumerate(self.layers):
                st, tr = step(params, self.variant, states[l], inp)
                layer_traces[l].append(tr)
                new_states.append(st)
                inp = st.h
            states = new_states
            h_top[:, t] = inp
        logits = h_top @ self.out_w.T + self.out_b
        return logits, layer_traces, states

    def backward(self, layer_traces, dlogits, ids) -> dict:
        """Gradients for all blocks given dloss/dlogits (B, T, V)."""
        ids = np.asarray(ids)
        B, T = ids.shape
        h_top = np.stack([tr.h for tr in layer_traces[-1]], axis=1)
        grads = {
            "out_w": np.einsum("btv,bth->vh", dlogits, h_top),
            "out_b": dlogits.sum(axis=(0, 1)),
        }
        dh = dlogits @ self.out_w  # (B, T, H)
        dloss_dh = [dh[:, t] for t in range(T)]
        for l in range(self.num_layers - 1, -1, -1):
            g = bptt(self.layers[l], self.variant, layer_traces[l], dloss_dh)
            for name, arr in g.blocks.items():
                grads[f"layer{l}/{name}"] = arr
            dloss_dh = g.d_x
        d_emb = np.zeros_like(self.embedding)
        dx = np.stack(dloss_dh, axis=1)  # (B, T, E)
        np.add.at(d_emb, ids.reshape(-1), dx.reshape(-1, self.emb_dim))
        grads["embedding"] = d_emb
        return grads
