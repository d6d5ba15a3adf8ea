"""Bit-packed genome."""

import numpy as np

from ._kernels import n_words


class Genome:
    """Fixed-length bitstring stored as packed ``uint64`` words.

    Position ``i`` (0-based) is bit ``i & 63`` of word ``i >> 6``.
    """

    __slots__ = ("words", "n")

    def __init__(self, words, n):
        words = np.ascontiguousarray(words, dtype=np.uint64)
        if n < 1:
            raise ValueError("genome length must be at least 1")
        if words.shape != (n_words(n),):
            raise ValueError(f"expected {n_words(n)} words for n={n}, got shape {words.shape}")
        self.words = words
        self.n = int(n)

    @classmethod
    def from_bits(cls, bits):
        bits = np.asarray(bits)
        if bits.ndim != 1 or not np.isin(bits, (0, 1)).all():
            raise ValueError("bits must be a flat sequence of 0/1 values")
        n = bits.shape[0]
        padded = np.zeros(64 * n_words(n), dtype=np.uint8)
        padded[:n] = bits
        packed = np.packbits(padded, bitorder="little")
        return cls(packed.view("<u8").astype(np.uint64), n)

    @classmethod
    def from_string(cls, text):
        return cls.from_bits([int(c) for c in text])

    @classmethod
    def from_int(cls, value, n):
        bits = [(value >> i) & 1 for i in range(n)]
        return cls.from_bits(bits)

    @property
    def bits(self):
        raw = self.words.astype("<u8").view(np.uint8)
        return np.unpackbits(raw, bitorder="little")[: self.n].copy()

    def to_int(self):
        return sum(int(b) << i for i, b in enumerate(self.bits))

    def copy(self):
        return Genome(self.words.copy(), self.n)

    def hamming(self, other):
        return int(np.count_nonzero(self.bits != other.bits))

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, Genome):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self.words, other.words))

    def __hash__(self):
        return hash((self.n, self.words.tobytes()))

    def __str__(self):
        return "".join("1" if b else "0" for b in self.bits)

    def __repr__(self):
        return f"Genome('{self}')"
