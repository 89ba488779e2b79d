"""Word-packed linear algebra over the two-element field.

Vectors and matrices are stored as little-endian machine words: bit b of a
row lives in word b // 64 at position b % 64.  All values are canonical,
meaning bits at positions >= n in the last word are always zero, so equality
and hashing can work directly on the packed words.

The module provides row operations (transvections), Gaussian-elimination
rank, invertibility tests, exact uniform sampling from the invertible group
by rejection, matrix-vector products with an explicit operation-cost model,
canonical integer encodings for exhaustive enumeration, and a binary file
format for matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "WORD_BITS",
    "BitVector",
    "BitMatrix",
    "Transvection",
    "OpCount",
    "apply_transvection",
    "apply_transvection_vec",
    "rank",
    "rank_naive",
    "rank_words_batch",
    "is_invertible",
    "sample_uniform_invertible",
    "sample_uniform_invertible_batch",
    "matvec",
    "matvec_cost",
    "encode_key",
    "decode_key",
    "mat_mul",
    "random_bit_words",
    "derive_rng",
    "save_matrix",
    "load_matrix",
    "invertible_fraction",
]

WORD_BITS = 64
_ONE = np.uint64(1)

# Magic prefix for the matrix file format.
_MATRIX_MAGIC = b"GF2M"
_MATRIX_VERSION = 1

# Rejection sampling accepts with probability > 0.288 for every n, so this
# cap is astronomically unlikely to be reached; it bounds the loop anyway.
_MAX_REJECTION_ATTEMPTS = 10**6


def _n_words(n: int) -> int:
    return (n + WORD_BITS - 1) // WORD_BITS


def _pad_mask(n: int) -> np.uint64:
    """Mask keeping only the valid bits of the last word of an n-bit row."""
    rem = n % WORD_BITS
    if rem == 0:
        return np.uint64(0xFFFFFFFFFFFFFFFF)
    return np.uint64((1 << rem) - 1)


def _check_canonical(n: int, words: np.ndarray) -> None:
    if words.dtype != np.uint64:
        raise ValueError("packed storage must be uint64")
    if words.shape[-1] != _n_words(n):
        raise ValueError("wrong number of words for dimension")
    if (words[..., -1] & ~_pad_mask(n)) .any():
        raise ValueError("padding bits past position n must be zero")


def derive_rng(seed: int, *stream: int) -> np.random.Generator:
    """Deterministic generator for the stream identified by (seed, *stream).

    Every source of randomness in the package is a generator produced here.
    Distinct stream tags give statistically independent streams, so parallel
    workers can each own one without coordination and results do not depend
    on scheduling.
    """
    if seed < 0 or any(s < 0 for s in stream):
        raise ValueError("seed and stream tags must be non-negative")
    return np.random.default_rng([int(seed), *[int(s) for s in stream]])


def random_bit_words(rng: np.random.Generator, shape: tuple[int, ...], n: int) -> np.ndarray:
    """Uniform random packed rows of n bits with canonical padding.

    Returns an array of shape ``shape + (ceil(n/64),)`` of uint64 words.
    """
    w = _n_words(n)
    words = rng.integers(0, 2**64, size=shape + (w,), dtype=np.uint64)
    words[..., -1] &= _pad_mask(n)
    return words


@dataclass(frozen=True)
class Transvection:
    """Ordered row pair (i, j), i != j: left multiplication by I + E_{i,j}.

    The action adds row j to row i modulo 2.  Over Z_2 the map is its own
    inverse because 2 E_{i,j} = 0.
    """

    i: int
    j: int

    def __post_init__(self) -> None:
        if self.i == self.j:
            raise ValueError("transvection requires i != j")
        if self.i < 0 or self.j < 0:
            raise ValueError("row indices must be non-negative")


@dataclass(frozen=True)
class OpCount:
    """Operation-cost record: bit-level and word-level counts."""

    bit_ops: int
    word_ops: int


class BitVector:
    """Packed vector of n bits.

    Parameters
    ----------
    n : int
        Number of bits.
    words : np.ndarray
        uint64 array of length ceil(n/64), little-endian bit order,
        canonical padding (bits >= n are zero).
    """

    __slots__ = ("n", "words")

    def __init__(self, n: int, words: np.ndarray):
        if n < 1:
            raise ValueError("dimension must be positive")
        _check_canonical(n, words)
        self.n = n
        self.words = words

    @classmethod
    def zeros(cls, n: int) -> "BitVector":
        return cls(n, np.zeros(_n_words(n), dtype=np.uint64))

    @classmethod
    def from_bits(cls, bits) -> "BitVector":
        bits = np.asarray(bits, dtype=np.uint8)
        n = bits.shape[0]
        packed = np.packbits(bits, bitorder="little")
        words = np.zeros(_n_words(n), dtype=np.uint64)
        words_view = words.view(np.uint8)
        words_view[: packed.size] = packed
        return cls(n, words)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "BitVector":
        return cls(n, random_bit_words(rng, (), n).reshape(-1))

    def bit(self, b: int) -> int:
        if not 0 <= b < self.n:
            raise IndexError("bit index out of range")
        return int((self.words[b // WORD_BITS] >> np.uint64(b % WORD_BITS)) & _ONE)

    def to_bits(self) -> np.ndarray:
        raw = np.unpackbits(self.words.view(np.uint8), bitorder="little")
        return raw[: self.n]

    def popcount(self) -> int:
        return int(np.bitwise_count(self.words).sum())

    def __xor__(self, other: "BitVector") -> "BitVector":
        if self.n != other.n:
            raise ValueError("dimension mismatch")
        return BitVector(self.n, self.words ^ other.words)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, BitVector)
            and self.n == other.n
            and bool(np.array_equal(self.words, other.words))
        )

    def __hash__(self) -> int:
        return hash((self.n, self.words.tobytes()))

    def __repr__(self) -> str:
        return f"BitVector({''.join(str(b) for b in self.to_bits())})"


class BitMatrix:
    """Packed n x n matrix over Z_2, row-major.

    Parameters
    ----------
    n : int
        Dimension.
    words : np.ndarray
        uint64 array of shape (n, ceil(n/64)); row i is a packed BitVector.
    """

    __slots__ = ("n", "words")

    def __init__(self, n: int, words: np.ndarray):
        if n < 1:
            raise ValueError("dimension must be positive")
        if words.shape[0] != n:
            raise ValueError("need exactly n rows")
        _check_canonical(n, words)
        self.n = n
        self.words = words

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        words = np.zeros((n, _n_words(n)), dtype=np.uint64)
        idx = np.arange(n)
        words[idx, idx // WORD_BITS] = _ONE << (idx % WORD_BITS).astype(np.uint64)
        return cls(n, words)

    @classmethod
    def zeros(cls, n: int) -> "BitMatrix":
        return cls(n, np.zeros((n, _n_words(n)), dtype=np.uint64))

    @classmethod
    def from_bits(cls, bits) -> "BitMatrix":
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.ndim != 2 or bits.shape[0] != bits.shape[1]:
            raise ValueError("need a square 0/1 array")
        n = bits.shape[0]
        words = np.zeros((n, _n_words(n)), dtype=np.uint64)
        packed = np.packbits(bits, axis=1, bitorder="little")
        view = words.view(np.uint8)[:, : packed.shape[1]]
        view[:] = packed
        return cls(n, words)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "BitMatrix":
        return cls(n, random_bit_words(rng, (n,), n))

    @property
    def rows(self) -> tuple[BitVector, ...]:
        return tuple(BitVector(self.n, self.words[i].copy()) for i in range(self.n))

    def row(self, i: int) -> BitVector:
        return BitVector(self.n, self.words[i].copy())

    def bit(self, i: int, j: int) -> int:
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise IndexError("entry index out of range")
        return int((self.words[i, j // WORD_BITS] >> np.uint64(j % WORD_BITS)) & _ONE)

    def to_bits(self) -> np.ndarray:
        raw = np.unpackbits(self.words.view(np.uint8), axis=1, bitorder="little")
        return raw[:, : self.n]

    def popcount(self) -> int:
        return int(np.bitwise_count(self.words).sum())

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, BitMatrix)
            and self.n == other.n
            and bool(np.array_equal(self.words, other.words))
        )

    def __hash__(self) -> int:
        return hash((self.n, self.words.tobytes()))

    def __repr__(self) -> str:
        lines = ["".join(str(b) for b in r) for r in self.to_bits()]
        return "BitMatrix([" + ", ".join(lines) + "])"


def _check_move(n: int, t: Transvection) -> None:
    if t.i >= n or t.j >= n:
        raise ValueError("transvection indices exceed dimension")


def apply_transvection(x: BitMatrix, t: Transvection) -> BitMatrix:
    """Left-multiply x by I + E_{i,j}: row i becomes row i XOR row j.

    The input is unmodified; a fresh matrix is returned.  Applying the same
    move twice returns to the start because the update is an involution.
    """
    _check_move(x.n, t)
    words = x.words.copy()
    words[t.i] ^= words[t.j]
    return BitMatrix(x.n, words)


def apply_transvection_vec(v: BitVector, t: Transvection) -> BitVector:
    """Coordinate update v_i <- v_i XOR v_j; a single bit operation.

    This is how a holder of the move sequence answers challenges: each
    recorded move costs one bit operation on the running vector.
    """
    _check_move(v.n, t)
    words = v.words.copy()
    bit_j = (words[t.j // WORD_BITS] >> np.uint64(t.j % WORD_BITS)) & _ONE
    words[t.i // WORD_BITS] ^= bit_j << np.uint64(t.i % WORD_BITS)
    return BitVector(v.n, words)


def rank(x: BitMatrix) -> int:
    """Row rank over Z_2 by Gaussian elimination on a scratch copy.

    Pivots on the lowest-index nonzero column; no heuristics are needed over
    a two-element field.
    """
    work = x.words.copy()
    n = x.n
    r = 0
    for col in range(n):
        word, bit = col // WORD_BITS, np.uint64(col % WORD_BITS)
        pivot = -1
        for row in range(r, n):
            if (work[row, word] >> bit) & _ONE:
                pivot = row
                break
        if pivot < 0:
            continue
        if pivot != r:
            work[[r, pivot]] = work[[pivot, r]]
        for row in range(r + 1, n):
            if (work[row, word] >> bit) & _ONE:
                work[row] ^= work[r]
        r += 1
        if r == n:
            break
    return r


def rank_naive(x: BitMatrix) -> int:
    """Independent bit-by-bit eliminator used to cross-check rank()."""
    a = x.to_bits().astype(np.uint8)
    n = x.n
    r = 0
    for col in range(n):
        pivot = -1
        for row in range(r, n):
            if a[row, col]:
                pivot = row
                break
        if pivot < 0:
            continue
        a[[r, pivot]] = a[[pivot, r]]
        for row in range(n):
            if row != r and a[row, col]:
                a[row] ^= a[r]
        r += 1
    return r


def rank_words_batch(rows: np.ndarray, ncols: int) -> np.ndarray:
    """Ranks of a batch of packed matrices, vectorized over the batch.

    Parameters
    ----------
    rows : np.ndarray
        uint64 array of shape (B, m, W) or (B, m) for single-word rows;
        sample b is an m x ncols matrix.
    ncols : int
        Number of valid bit columns per row.

    Returns
    -------
    np.ndarray
        int64 array of shape (B,) with the Z_2 rank of each sample.

    Notes
    -----
    Column-wise elimination with per-sample pivot selection via argmax on a
    boolean mask; every pass is O(B * m) so the whole computation is
    O(ncols * B * m) word operations regardless of pivot patterns.
    """
    if rows.ndim == 2:
        rows = rows[:, :, None]
    work = rows.astype(np.uint64, copy=True)
    nb, m, _ = work.shape
    used = np.zeros((nb, m), dtype=bool)
    ranks = np.zeros(nb, dtype=np.int64)
    sample = np.arange(nb)
    for col in range(ncols):
        word, bit = col // WORD_BITS, np.uint64(col % WORD_BITS)
        has = ((work[:, :, word] >> bit) & _ONE).astype(bool) & ~used
        any_pivot = has.any(axis=1)
        pivot = np.argmax(has, axis=1)  # first candidate row, garbage when none
        ranks += any_pivot
        used[sample[any_pivot], pivot[any_pivot]] = True
        elim = has
        elim[sample, pivot] = False
        elim &= any_pivot[:, None]
        pivot_rows = work[sample, pivot]  # (B, W)
        work ^= pivot_rows[:, None, :] * elim[:, :, None].astype(np.uint64)
    return ranks


def is_invertible(x: BitMatrix) -> bool:
    """True iff the matrix has full rank over Z_2."""
    return rank(x) == x.n


def sample_uniform_invertible(n: int, rng: np.random.Generator) -> BitMatrix:
    """Exact uniform sample from the group of invertible matrices.

    Draws all n^2 bits uniformly and rejects until invertible.  Acceptance
    probability is prod_{k=1..n}(1 - 2^-k) > 0.288 for every n, so the
    expected number of draws is below 3.5 at any size.
    """
    if n < 1:
        raise ValueError("dimension must be positive")
    for _ in range(_MAX_REJECTION_ATTEMPTS):
        m = BitMatrix(n, random_bit_words(rng, (n,), n))
        if rank(m) == n:
            return m
    raise RuntimeError("rejection sampling failed to terminate")


def sample_uniform_invertible_batch(
    n: int, count: int, rng: np.random.Generator
) -> np.ndarray:
    """`count` exact uniform invertible matrices as packed words.

    Returns a uint64 array of shape (count, n, ceil(n/64)).  Same rejection
    law as sample_uniform_invertible, vectorized over candidates; the output
    is a deterministic function of the generator state.
    """
    w = _n_words(n)
    out = np.empty((count, n, w), dtype=np.uint64)
    filled = 0
    while filled < count:
        batch = max(1024, 2 * (count - filled))
        cand = random_bit_words(rng, (batch, n), n)
        good = rank_words_batch(cand, n) == n
        take = cand[good][: count - filled]
        out[filled : filled + take.shape[0]] = take
        filled += take.shape[0]
    return out


def matvec(x: BitMatrix, v: BitVector) -> BitVector:
    """Product y = x v over Z_2: y_i is the parity of row_i AND v.

    Word-AND plus population count per row; the cost model for this routine
    is given by matvec_cost.
    """
    if x.n != v.n:
        raise ValueError("dimension mismatch")
    acc = np.bitwise_count(x.words & v.words[None, :]).sum(axis=1) & 1
    bits = acc.astype(np.uint8)
    return BitVector.from_bits(bits)


def matvec_cost(n: int, word_bits: int = WORD_BITS) -> OpCount:
    """Cost of one matrix-vector product: n^2 bit ops, n*ceil(n/w) word ops."""
    return OpCount(bit_ops=n * n, word_ops=n * ((n + word_bits - 1) // word_bits))


def mat_mul(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    """Product a @ b over Z_2 (row i of the result: parity combination)."""
    if a.n != b.n:
        raise ValueError("dimension mismatch")
    a_bits = a.to_bits().astype(np.uint8)
    b_bits = b.to_bits().astype(np.uint8)
    prod = (a_bits.astype(np.int64) @ b_bits.astype(np.int64)) & 1
    return BitMatrix.from_bits(prod.astype(np.uint8))


def encode_key(x: BitMatrix) -> int:
    """Canonical integer key: bit (i*n + j) of the key is entry (i, j).

    Bijective on n x n matrices; arbitrary-precision, although exhaustive
    enumeration only ever uses n <= 5 (25 bits).
    """
    flat = x.to_bits().reshape(-1)
    return int.from_bytes(np.packbits(flat, bitorder="little").tobytes(), "little")


def decode_key(key: int, n: int) -> BitMatrix:
    """Inverse of encode_key for a given dimension."""
    if key < 0 or key >= 1 << (n * n):
        raise ValueError("key out of range for dimension")
    nbytes = (n * n + 7) // 8
    raw = np.frombuffer(key.to_bytes(nbytes, "little"), dtype=np.uint8)
    bits = np.unpackbits(raw, bitorder="little")[: n * n]
    return BitMatrix.from_bits(bits.reshape(n, n))


def invertible_fraction(n: int) -> float:
    """Fraction of invertible matrices among all 2^(n^2): prod(1 - 2^-k).

    Decreases toward 0.288788... as n grows.
    """
    out = 1.0
    for k in range(1, n + 1):
        out *= 1.0 - 0.5**k
    return out


def save_matrix(path, x: BitMatrix) -> None:
    """Write a matrix in the binary format GF2M v1.

    Layout: magic "GF2M", version byte 0x01, n as u32 little-endian, then
    ceil(n/8) bytes per row, row-major, LSB-first within each byte.
    """
    row_bytes = (x.n + 7) // 8
    payload = bytearray()
    payload += _MATRIX_MAGIC
    payload.append(_MATRIX_VERSION)
    payload += x.n.to_bytes(4, "little")
    bits = x.to_bits()
    for i in range(x.n):
        payload += np.packbits(bits[i], bitorder="little").tobytes()[:row_bytes]
    with open(path, "wb") as fh:
        fh.write(bytes(payload))


def load_matrix(path) -> BitMatrix:
    """Read a matrix written by save_matrix; validates magic and version."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != _MATRIX_MAGIC:
        raise ValueError("not a GF2M file")
    if raw[4] != _MATRIX_VERSION:
        raise ValueError(f"unsupported GF2M version {raw[4]}")
    n = int.from_bytes(raw[5:9], "little")
    if n < 1:
        raise ValueError("corrupt GF2M header")
    row_bytes = (n + 7) // 8
    body = raw[9:]
    if len(body) != n * row_bytes:
        raise ValueError("GF2M payload length mismatch")
    rows = np.frombuffer(body, dtype=np.uint8).reshape(n, row_bytes)
    bits = np.unpackbits(rows, axis=1, bitorder="little")[:, :n]
    return BitMatrix.from_bits(bits)
