"""Deterministic synthetic English-like corpus.

Used when no real text is at hand: a Zipfian vocabulary, templated
sentence structure, and paragraph-level topic coherence. Each paragraph
draws its content words from one small topic vocabulary, so topical
words recur at long range while function words churn locally. All
generated words are short (one syllable), which keeps the per-character
entropy of a word's tail low once its head is seen -- the remaining
long-range signal is topical word recurrence, not within-word spelling.
The generated text is freely usable.
"""

import numpy as np

from .numerics import new_rng

_FUNCTION_WORDS = [
    "the", "of", "and", "to", "a", "in", "that", "it", "was", "for",
    "on", "with", "as", "at", "by", "from", "this", "but", "not", "or",
    "which", "were", "had", "has", "all", "their", "one", "will", "would",
    "there", "been", "when", "who", "more", "no", "its", "some", "into",
]

_ONSETS = ["b", "c", "d", "f", "g", "h", "l", "m", "n", "p", "r", "s",
           "t", "v", "w", "br", "cl", "dr", "gr", "pl", "st", "tr", "sh",
           "th", "qu"]
_VOWELS = ["a", "e", "i", "o", "u", "ai", "ea", "ou", "oo"]
_CODAS = ["", "n", "r", "s", "t", "l", "m", "nd", "st", "ck", "ng", "rt"]

_TEMPLATES = [
    ("T",),
    ("C",),
    ("F", "T"),
    ("T", "F", "C"),
    ("C", "F", "T"),
    ("F", "T", "F", "C"),
    ("T", "F", "C", "F"),
    ("F", "C", "F", "T"),
    ("F", "T", "F", "C", "F", "T"),
    ("T", "F", "C", "F", "F", "C"),
]


def _make_word(rng, syllables):
    parts = []
    for _ in range(syllables):
        parts.append(_ONSETS[rng.integers(len(_ONSETS))])
        parts.append(_VOWELS[rng.integers(len(_VOWELS))])
    parts.append(_CODAS[rng.integers(len(_CODAS))])
    return "".join(parts)


def _zipf_pick(rng, n):
    # unnormalized 1/(k+1) weights via inverse-cdf on a fixed grid
    u = rng.random()
    weights = 1.0 / np.arange(1, n + 1)
    cdf = np.cumsum(weights) / weights.sum()
    return int(np.searchsorted(cdf, u))


def synthetic_text(n_chars: int, seed: int = 0) -> str:
    """English-like text of at least n_chars characters, deterministic in
    the seed. Sentences interleave real English function words with
    invented one-syllable content words; each paragraph sticks to a
    12-word topic vocabulary, so remembering what the paragraph is about
    pays off at a range of tens to hundreds of characters."""
    rng = new_rng(seed)
    n_topics = 40
    words_per_topic = 12
    topics = [
        [_make_word(rng, 1) for _ in range(words_per_topic)]
        for _ in range(n_topics)
    ]
    common = [_make_word(rng, 1) for _ in range(200)]

    out = []
    total = 0
    while total < n_chars:
        topic = topics[rng.integers(n_topics)]
        n_sentences = int(rng.integers(5, 11))
        para = []
        for _ in range(n_sentences):
            template = _TEMPLATES[rng.integers(len(_TEMPLATES))]
            words = []
            for slot in template:
                if slot == "F":
                    words.append(_FUNCTION_WORDS[_zipf_pick(rng, len(_FUNCTION_WORDS))])
                elif slot == "T":
                    words.append(topic[_zipf_pick(rng, words_per_topic)])
                else:
                    words.append(common[_zipf_pick(rng, len(common))])
            para.append(" ".join(words) + ".")
        block = " ".join(para) + "\n\n"
        out.append(block)
        total += len(block)
    return "".join(out)[:n_chars]
