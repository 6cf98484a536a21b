"""Implicit element-wise weighted-sum view of the memory cell.

Expanding the cell recurrence c_t = i_t * c~_t + f_t * c_{t-1} shows that

    c_t = sum_{j<=t} w_j^t * c~_j,   w_j^t = i_j * prod_{k=j+1..t} f_k

with vector weights acting elementwise. This module computes those
weights by dynamic program, verifies the identity against the stored
cell states, checks the weights' structural properties, and renders the
L2-norm grid used for attention-style visualization.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .cells import StepTrace, Variant

# 1-indexed timesteps throughout, matching the recurrence convention
# (inputs are x_1..x_n, c_0 is the initial cell).


class UnsupportedVariantError(ValueError):
    """Raised for traces from a variant without a memory cell."""


@dataclass
class WeightTensor:
    """Decomposition weights w_j^t for 1 <= j <= t <= n.

    `data[t-1, j-1]` holds the hidden_dim vector w_j^t; entries with
    j > t are zero padding, not weights.
    """

    data: np.ndarray  # (n, n, hidden_dim)
    n: int
    hidden_dim: int

    def weight(self, j: int, t: int) -> np.ndarray:
        if not 1 <= j <= t <= self.n:
            raise IndexError(f"need 1 <= j <= t <= {self.n}, got j={j}, t={t}")
        return self.data[t - 1, j - 1]


@dataclass
class DecompositionReport:
    max_abs_deviation: float
    per_timestep_deviation: list
    tolerance: float
    passed: bool


@dataclass
class HeatmapGrid:
    """n x n grid of L2 norms; entry [j-1, t-1] = ||w_j^t||_2.

    Rows are context positions j, columns are timesteps t. Cells outside
    the direction's triangle are zero.
    """

    norms: np.ndarray
    token_labels: list | None = None


def _check_gated(traces):
    if not traces:
        raise ValueError("empty trace sequence")
    if traces[0].i is None or traces[0].c is None:
        raise UnsupportedVariantError(
            "decomposition requires a gated variant with a memory cell "
            "(S-RNN has none)"
        )


def compute_weights(traces) -> WeightTensor:
    """DP accumulation: w_t^t = i_t and w_j^t = f_t * w_j^{t-1} for j < t.

    O(n^2 d) total; equal to the closed form i_j * prod_{k>j} f_k.
    """
    _check_gated(traces)
    n = len(traces)
    d = traces[0].i.shape[-1]
    if traces[0].i.ndim != 1:
        raise ValueError("compute_weights expects unbatched (1-D) traces")
    data = np.zeros((n, n, d))
    for t in range(n):
        if t > 0:
            data[t, :t] = traces[t].f * data[t - 1, :t]
        data[t, t] = traces[t].i
    return WeightTensor(data, n, d)


def reconstruct_cell(weights: WeightTensor, traces):
    """Per timestep, the weighted sum over stored content layers:
    sum_{j<=t} w_j^t * c~_j."""
    _check_gated(traces)
    if len(traces) != weights.n:
        raise ValueError(
            f"weights cover {weights.n} steps but got {len(traces)} traces"
        )
    c_tilde = np.stack([tr.c_tilde for tr in traces])  # (n, d)
    return [
        (weights.data[t, : t + 1] * c_tilde[: t + 1]).sum(axis=0)
        for t in range(weights.n)
    ]


def verify_identity(traces, tolerance: float, c0=None) -> DecompositionReport:
    """Compare the reconstruction against the stored cell states.

    If the unroll started from a nonzero initial cell, pass it as `c0`;
    its contribution (prod_{k<=t} f_k) * c_0 is added so the identity
    still holds.
    """
    if tolerance < 0:
        raise ValueError("tolerance must be nonnegative")
    _check_gated(traces)
    weights = compute_weights(traces)
    recon = reconstruct_cell(weights, traces)
    if c0 is not None:
        carried = np.asarray(c0, dtype=float)
        for t, tr in enumerate(traces):
            carried = tr.f * carried
            recon[t] = recon[t] + carried
    devs = [float(np.max(np.abs(r - tr.c))) for r, tr in zip(recon, traces)]
    max_dev = max(devs)
    return DecompositionReport(
        max_abs_deviation=max_dev,
        per_timestep_deviation=devs,
        tolerance=tolerance,
        passed=max_dev <= tolerance,
    )


def weight_sums(weights: WeightTensor):
    """sum_j w_j^t per timestep; bounded by [0, 1] elementwise for the
    coupled-gate variant, up to t for an unconstrained LSTM."""
    return [weights.data[t, : t + 1].sum(axis=0) for t in range(weights.n)]


def diagonal_dominance(weights: WeightTensor) -> float:
    """Fraction of timesteps t where ||w_t^t||_2 is the largest norm
    among {||w_j^t||_2 : j <= t}."""
    hits = 0
    for t in range(1, weights.n + 1):
        norms = [float(np.linalg.norm(weights.weight(j, t)))
                 for j in range(1, t + 1)]
        if norms[t - 1] >= max(norms):
            hits += 1
    return hits / weights.n


def heatmap(weights: WeightTensor, labels=None) -> HeatmapGrid:
    """Unidirectional L2-norm grid; zero where j > t."""
    if labels is not None and len(labels) != weights.n:
        raise ValueError(
            f"{len(labels)} labels for {weights.n} timesteps"
        )
    norms = np.linalg.norm(weights.data, axis=-1).T  # [j, t]
    return HeatmapGrid(norms, list(labels) if labels is not None else None)


def heatmap_bidirectional(fwd: WeightTensor, bwd: WeightTensor,
                          labels=None) -> HeatmapGrid:
    """Two-triangle layout: forward weights above/on the diagonal,
    backward weights strictly below.

    `bwd` comes from an unroll over the reversed sequence; its indices
    are mapped back to original positions.
    """
    if fwd.n != bwd.n:
        raise ValueError("forward/backward lengths differ")
    n = fwd.n
    if labels is not None and len(labels) != n:
        raise ValueError(f"{len(labels)} labels for {n} timesteps")
    norms = np.triu(np.linalg.norm(fwd.data, axis=-1).T)
    bwd_norms = np.linalg.norm(bwd.data, axis=-1).T  # reversed coordinates
    for t in range(n):
        for j in range(t + 1, n):
            # reversed position r = n-1-p maps (j', t') -> (j, t) below diagonal
            norms[j, t] = bwd_norms[n - 1 - j, n - 1 - t]
    return HeatmapGrid(norms, list(labels) if labels is not None else None)


# ---------------------------------------------------------------------------
# export

def save_heatmap(grid: HeatmapGrid, path: str):
    """Write the grid to CSV, PGM (P5), or SVG, chosen by extension."""
    path = str(path)
    if path.endswith(".csv"):
        _save_csv(grid, path)
    elif path.endswith(".pgm"):
        _save_pgm(grid, path)
    elif path.endswith(".svg"):
        _save_svg(grid, path)
    else:
        raise ValueError(f"unsupported heatmap extension: {path}")


def _save_csv(grid, path):
    n = grid.norms.shape[0]
    labels = grid.token_labels or [str(t + 1) for t in range(n)]
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(labels)
        for row in grid.norms:
            w.writerow([f"{v:.17g}" for v in row])


def _gray_levels(norms):
    # darker = larger weight, matching the usual attention rendering
    peak = norms.max()
    scaled = np.zeros_like(norms) if peak == 0 else norms / peak
    return 255 - np.rint(255 * scaled).astype(np.uint8)


def _save_pgm(grid, path):
    n, m = grid.norms.shape
    levels = _gray_levels(grid.norms)
    with open(path, "wb") as f:
        f.write(f"P5\n{m} {n}\n255\n".encode("ascii"))
        f.write(levels.tobytes())


def _save_svg(grid, path, cell=16):
    n, m = grid.norms.shape
    levels = _gray_levels(grid.norms)
    labels = grid.token_labels
    pad = 40 if labels else 0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'width="{m * cell + pad}" height="{n * cell + pad}">'
    ]
    for j in range(n):
        for t in range(m):
            g = int(levels[j, t])
            parts.append(
                f'<rect x="{pad + t * cell}" y="{pad + j * cell}" '
                f'width="{cell}" height="{cell}" fill="rgb({g},{g},{g})"/>'
            )
    if labels:
        for t, lab in enumerate(labels):
            x = pad + t * cell + cell // 2
            parts.append(
                f'<text x="{x}" y="{pad - 6}" font-size="10" '
                f'text-anchor="middle">{_xml_escape(lab)}</text>'
            )
            y = pad + t * cell + cell // 2 + 3
            parts.append(
                f'<text x="{pad - 6}" y="{y}" font-size="10" '
                f'text-anchor="end">{_xml_escape(lab)}</text>'
            )
    parts.append("</svg>")
    with open(path, "w") as f:
        f.write("\n".join(parts))


def _xml_escape(s):
    return (str(s).replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;"))
