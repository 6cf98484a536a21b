"""Versioned binary checkpoint container.

Layout (all integers little-endian):

    magic   4 bytes  b"WCEL"
    u32     format version (1)
    str     variant tag           (u16 byte length + utf-8)
    u32     input dim (embedding dim for full models)
    u32     hidden dim
    u32     layer count
    u32     direction count
    u32     number of named blocks
    blocks, each:
        str  name                 (u16 byte length + utf-8)
        u8   ndim
        u32  per-dimension sizes
        f64  row-major data       (length implied by the sizes)

Non-float metadata a full model needs (the vocabulary) rides along as a
block of codepoints.
"""

import struct

import numpy as np

from .cells import CellParams, Variant
from .numerics import FLOAT

MAGIC = b"WCEL"
VERSION = 1


def _write_str(f, s: str):
    raw = s.encode("utf-8")
    f.write(struct.pack("<H", len(raw)))
    f.write(raw)


def _read_str(f) -> str:
    (n,) = struct.unpack("<H", f.read(2))
    return f.read(n).decode("utf-8")


def save_blocks(path, variant, input_dim, hidden_dim, layer_count,
                direction_count, blocks: dict):
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        _write_str(f, Variant(variant).value)
        f.write(struct.pack("<IIII", input_dim, hidden_dim, layer_count,
                            direction_count))
        f.write(struct.pack("<I", len(blocks)))
        for name, arr in blocks.items():
            arr = np.ascontiguousarray(arr, dtype=FLOAT)
            _write_str(f, name)
            f.write(struct.pack("<B", arr.ndim))
            for d in arr.shape:
                f.write(struct.pack("<I", d))
            f.write(arr.astype("<f8").tobytes())


def load_blocks(path):
    """Returns (header dict, blocks dict)."""
    with open(path, "rb") as f:
        if f.read(4) != MAGIC:
            raise ValueError(f"{path} is not a weightcell checkpoint")
        (version,) = struct.unpack("<I", f.read(4))
        if version != VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        variant = Variant(_read_str(f))
        input_dim, hidden_dim, layer_count, direction_count = struct.unpack(
            "<IIII", f.read(16))
        (n_blocks,) = struct.unpack("<I", f.read(4))
        blocks = {}
        for _ in range(n_blocks):
            name = _read_str(f)
            (ndim,) = struct.unpack("<B", f.read(1))
            shape = struct.unpack(f"<{ndim}I", f.read(4 * ndim))
            count = int(np.prod(shape)) if ndim else 1
            data = np.frombuffer(f.read(8 * count), dtype="<f8")
            blocks[name] = data.reshape(shape).astype(FLOAT)
    header = {
        "variant": variant, "input_dim": input_dim, "hidden_dim": hidden_dim,
        "layer_count": layer_count, "direction_count": direction_count,
    }
    return header, blocks


def save_cell(path, params: CellParams):
    save_blocks(path, params.variant, params.input_dim, params.hidden_dim,
                1, 1, params.blocks)


def load_cell(path) -> CellParams:
    header, blocks = load_blocks(path)
    return CellParams(header["variant"], header["input_dim"],
                      header["hidden_dim"], blocks)


def save_model(path, model, vocab_chars: str | None = None):
    """Full sequence model; vocabulary characters stored as codepoints."""
    blocks = dict(model.all_blocks())
    blocks["vocab_size"] = np.array([float(model.vocab_size)])
    if vocab_chars is not None:
        blocks["vocab_codepoints"] = np.array(
            [float(ord(c)) for c in vocab_chars])
    save_blocks(path, model.variant, model.emb_dim, model.hidden_dim,
                model.num_layers, 1, blocks)


def load_model(path):
    """Returns (SequenceModel, vocab_chars or None)."""
    from .model import SequenceModel

    header, blocks = load_blocks(path)
    vocab_size = int(blocks.pop("vocab_size")[0])
    codes = blocks.pop("vocab_codepoints", None)
    vocab_chars = (
        "".join(chr(int(c)) for c in codes) if codes is not None else None)
    variant = header["variant"]
    layer_count = header["layer_count"]
    layers = []
    for l in range(layer_count):
        prefix = f"layer{l}/"
        cell_blocks = {
            name[len(prefix):]: arr for name, arr in blocks.items()
            if name.startswith(prefix)
        }
        in_dim = header["input_dim"] if l == 0 else header["hidden_dim"]
        layers.append(CellParams(variant, in_dim, header["hidden_dim"],
                                 cell_blocks))
    model = SequenceModel(
        variant=variant,
        vocab_size=vocab_size,
        emb_dim=header["input_dim"],
        hidden_dim=header["hidden_dim"],
        layers=layers,
        embedding=blocks["embedding"],
        out_w=blocks["out_w"],
        out_b=blocks["out_b"],
    )
    return model, vocab_chars
