"""Desk-scale data: character-level corpora, contiguous LM batching, and
a synthetic long-range recall task.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .numerics import new_rng


@dataclass
class Corpus:
    """Token-id sequence with vocabulary and contiguous splits.

    Vocabulary is built from the train split only, ordered by first
    occurrence; id `len(char_to_id)` is reserved for unknown characters.
    """

    token_ids: np.ndarray
    char_to_id: dict
    id_to_char: dict
    train_range: tuple
    valid_range: tuple
    test_range: tuple

    @property
    def unk_id(self) -> int:
        return len(self.char_to_id)

    @property
    def vocab_size(self) -> int:
        return len(self.char_to_id) + 1

    def split_ids(self, split: str) -> np.ndarray:
        lo, hi = {"train": self.train_range, "valid": self.valid_range,
                  "test": self.test_range}[split]
        return self.token_ids[lo:hi]


def corpus_from_text(text: str, splits=(0.8, 0.1, 0.1)) -> Corpus:
    if not text:
        raise ValueError("empty corpus text")
    n = len(text)
    n_train = int(n * splits[0])
    n_valid = int(n * splits[1])
    if n_train == 0:
        raise ValueError("corpus too small for the requested train split")
    char_to_id = {}
    for ch in text[:n_train]:
        if ch not in char_to_id:
            char_to_id[ch] = len(char_to_id)
    unk = len(char_to_id)
    ids = np.fromiter((char_to_id.get(ch, unk) for ch in text),
                      dtype=np.int64, count=n)
    id_to_char = {i: ch for ch, i in char_to_id.items()}
    return Corpus(
        token_ids=ids,
        char_to_id=char_to_id,
        id_to_char=id_to_char,
        train_range=(0, n_train),
        valid_range=(n_train, n_train + n_valid),
        test_range=(n_train + n_valid, n),
    )


def load_text_corpus(path, level="char") -> Corpus:
    """Character-level corpus from a UTF-8 text file, 80/10/10 splits."""
    if level != "char":
        raise ValueError("only character-level tokenization is supported")
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise OSError(f"cannot read corpus file {path}: {e}") from None
    if not text:
        raise ValueError(f"empty corpus file: {path}")
    return corpus_from_text(text)


@dataclass
class Batch:
    """Rectangular (batch x time) inputs with aligned targets.

    LM batches have targets shifted one step; recall batches have one
    target symbol per sequence.
    """

    inputs: np.ndarray
    targets: np.ndarray


def batch_streams(ids: np.ndarray, batch_size: int):
    """Split a token stream into batch_size contiguous streams,
    dropping the ragged remainder."""
    stream_len = len(ids) // batch_size
    return ids[: stream_len * batch_size].reshape(batch_size, stream_len)


def batch_iter(ids: np.ndarray, bptt_len: int, batch_size: int):
    """Contiguous LM batches; consecutive batches continue each stream so
    recurrent state can be carried across them."""
    if len(ids) < batch_size * bptt_len + 1:
        raise ValueError(
            f"corpus of {len(ids)} tokens is too small: need at least "
            f"{batch_size * bptt_len + 1} for batch_size={batch_size}, "
            f"bptt_len={bptt_len}"
        )
    streams = batch_streams(ids, batch_size)
    stream_len = streams.shape[1]
    for start in range(0, stream_len - 1, bptt_len):
        stop = min(start + bptt_len, stream_len - 1)
        if stop <= start:
            break
        yield Batch(inputs=streams[:, start:stop],
                    targets=streams[:, start + 1:stop + 1])


def num_lm_batches(n_tokens: int, bptt_len: int, batch_size: int) -> int:
    stream_len = n_tokens // batch_size
    usable = stream_len - 1
    return (usable + bptt_len - 1) // bptt_len if usable > 0 else 0


# ---------------------------------------------------------------------------
# synthetic recall task

@dataclass
class SyntheticSpec:
    kind: str = "recall"
    delay: int = 50
    alphabet_size: int = 8
    count: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.alphabet_size < 2:
            raise ValueError("alphabet_size must be >= 2")
        if self.delay < 0:
            raise ValueError("delay must be nonnegative")

    @property
    def seq_len(self) -> int:
        return self.delay + 2  # symbol, noise, query

    @property
    def vocab_size(self) -> int:
        # alphabet, an equal-sized disjoint noise alphabet, query token
        return 2 * self.alphabet_size + 1


def make_recall(spec: SyntheticSpec, rng=None) -> Batch:
    """Recall sequences: the marked symbol first, `delay` noise tokens,
    then a query token. The symbol is "marked" by being the only
    alphabet token in the sequence; noise comes from a disjoint alphabet
    of the same size. Targets are balanced across the alphabet."""
    if rng is None:
        rng = new_rng(spec.seed)
    a, n = spec.alphabet_size, spec.count
    targets = np.arange(n) % a  # balanced by construction
    rng.shuffle(targets)
    inputs = np.empty((n, spec.seq_len), dtype=np.int64)
    inputs[:, 0] = targets
    if spec.delay:
        inputs[:, 1:-1] = rng.integers(a, 2 * a, size=(n, spec.delay))
    inputs[:, -1] = 2 * a  # query token
    return Batch(inputs=inputs, targets=targets.astype(np.int64))


def save_recall_csv(batch: Batch, path):
    """One row per sequence: the input symbols, then the target."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        for seq, tgt in zip(batch.inputs, batch.targets):
            w.writerow(list(seq) + [int(tgt)])


# ---------------------------------------------------------------------------
# evaluation

def perplexity(model, ids: np.ndarray, max_tokens=None) -> float:
    """exp(mean token cross-entropy) with carried state, batch size 1."""
    from .training import softmax_xent_batch

    if len(ids) < 2:
        raise ValueError("need at least 2 tokens to evaluate")
    if max_tokens is not None:
        ids = ids[: max_tokens + 1]
    total, count = 0.0, 0
    state = None
    chunk = 512
    for start in range(0, len(ids) - 1, chunk):
        stop = min(start + chunk, len(ids) - 1)
        inputs = ids[start:stop][None, :]
        targs = ids[start + 1:stop + 1][None, :]
        logits, _, state = model.forward(inputs, state)
        loss, _ = softmax_xent_batch(logits, targs)
        total += loss
        count += stop - start
    return float(np.exp(min(total / count, 700.0)))  # avoid inf overflow
