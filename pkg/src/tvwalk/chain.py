"""The transvection random walk: single steps, recorded runs, projections.

One step picks an ordered pair of distinct rows (i, j) uniformly among the
n(n-1) choices and adds row j to row i modulo 2.  The lazy variant first
flips a fair coin and holds in place with probability 1/2.  A run records
its move sequence as a Trajectory, which replays deterministically; the
trajectory is the secret in the authentication protocol.

The projection onto the first k columns of the state is itself a Markov
chain (the same row operations restricted to a slice); for k = 1 it is the
vector chain used by the cutoff diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gf2core import WORD_BITS, BitMatrix, Transvection, derive_rng

__all__ = [
    "Trajectory",
    "ProjectionState",
    "draw_pair",
    "step",
    "run",
    "replay",
    "step_projection",
    "projection_from_identity",
    "save_trajectory",
    "load_trajectory",
    "STREAM_WALK",
]

# Stream tag for run(); other modules use their own tags so that no two
# consumers ever share a generator.
STREAM_WALK = 1

_TRAJ_MAGIC = b"TVWK"
_TRAJ_VERSION = 1
_HOLD_RECORD = (0xFFFF, 0xFFFF)


@dataclass(frozen=True)
class Trajectory:
    """A recorded run: dimension, master seed, moves, and laziness.

    ``moves`` has one entry per step; held lazy steps are recorded as None.
    Replaying the non-None moves from the identity reproduces the final
    state bit for bit.
    """

    n: int
    seed: int
    moves: tuple[Transvection | None, ...]
    lazy: bool = False

    def __post_init__(self) -> None:
        for mv in self.moves:
            if mv is None:
                if not self.lazy:
                    raise ValueError("held step in a non-lazy trajectory")
            elif mv.i >= self.n or mv.j >= self.n:
                raise ValueError("move indices exceed dimension")

    @property
    def steps(self) -> int:
        return len(self.moves)

    @property
    def work_steps(self) -> int:
        """Number of non-held moves; the honest responder's bit-op cost."""
        return sum(1 for mv in self.moves if mv is not None)


@dataclass
class ProjectionState:
    """First k columns of a walk state: n rows of k bits, word-packed."""

    n: int
    k: int
    cols: np.ndarray = field(repr=False)  # (n, ceil(k/64)) uint64

    def copy(self) -> "ProjectionState":
        return ProjectionState(self.n, self.k, self.cols.copy())

    def to_bits(self) -> np.ndarray:
        raw = np.unpackbits(self.cols.view(np.uint8), axis=1, bitorder="little")
        return raw[:, : self.k]


def draw_pair(rng: np.random.Generator, n: int) -> tuple[int, int]:
    """Uniform ordered pair (i, j), i != j, without rejection.

    A single uniform integer u in [0, n(n-1)) maps to i = u // (n-1) and
    j = u mod (n-1), shifted past the diagonal gap when j >= i.
    """
    if n < 2:
        raise ValueError("need n >= 2 to pick two distinct rows")
    u = int(rng.integers(0, n * (n - 1)))
    i = u // (n - 1)
    j = u % (n - 1)
    if j >= i:
        j += 1
    return i, j


def step(x: BitMatrix, rng: np.random.Generator) -> tuple[BitMatrix, Transvection]:
    """One walk step from x; returns the new state and the move used."""
    i, j = draw_pair(rng, x.n)
    words = x.words.copy()
    words[i] ^= words[j]
    return BitMatrix(x.n, words), Transvection(i, j)


def run(n: int, t: int, seed: int, lazy: bool = False) -> tuple[Trajectory, BitMatrix]:
    """Run the walk for t steps from the identity.

    Fully deterministic in (n, t, seed, lazy).  When lazy, each step first
    flips a fair coin and holds with probability 1/2; a held step records
    None and leaves the state unchanged.
    """
    if t < 0:
        raise ValueError("step count must be non-negative")
    if n < 2 and t > 0:
        raise ValueError("need n >= 2 to pick two distinct rows")
    rng = derive_rng(seed, STREAM_WALK)
    words = BitMatrix.identity(n).words
    moves: list[Transvection | None] = []
    for _ in range(t):
        if lazy and int(rng.integers(0, 2)):
            moves.append(None)
            continue
        i, j = draw_pair(rng, n)
        words[i] ^= words[j]
        moves.append(Transvection(i, j))
    return Trajectory(n, seed, tuple(moves), lazy), BitMatrix(n, words.copy())


def replay(traj: Trajectory) -> BitMatrix:
    """Apply the recorded moves to the identity; held steps are skipped."""
    words = BitMatrix.identity(traj.n).words
    for mv in traj.moves:
        if mv is not None:
            words[mv.i] ^= words[mv.j]
    return BitMatrix(traj.n, words)


def projection_from_identity(n: int, k: int) -> ProjectionState:
    """Projection of the identity start: row i carries bit i when i < k."""
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    w = (k + WORD_BITS - 1) // WORD_BITS
    cols = np.zeros((n, w), dtype=np.uint64)
    idx = np.arange(k)
    cols[idx, idx // WORD_BITS] = np.uint64(1) << (idx % WORD_BITS).astype(np.uint64)
    return ProjectionState(n, k, cols)


def step_projection(s: ProjectionState, rng: np.random.Generator) -> ProjectionState:
    """One walk step on the k-column slice: row_i <- row_i XOR row_j.

    Identical in law to projecting a full-matrix step; with the same
    generator it consumes the same single draw, so k = n reproduces step()
    exactly.
    """
    i, j = draw_pair(rng, s.n)
    cols = s.cols.copy()
    cols[i] ^= cols[j]
    return ProjectionState(s.n, s.k, cols)


def save_trajectory(path, traj: Trajectory) -> None:
    """Write a trajectory in the binary format TVWK v1.

    Layout: magic "TVWK", version 0x01, n (u32 LE), step count (u64 LE),
    laziness flag (u8), then one (i: u16 LE, j: u16 LE) record per step;
    held steps are stored as (0xFFFF, 0xFFFF).
    """
    if traj.n > 0xFFFE:
        raise ValueError("dimension exceeds the u16 move encoding")
    payload = bytearray()
    payload += _TRAJ_MAGIC
    payload.append(_TRAJ_VERSION)
    payload += traj.n.to_bytes(4, "little")
    payload += len(traj.moves).to_bytes(8, "little")
    payload.append(1 if traj.lazy else 0)
    for mv in traj.moves:
        i, j = _HOLD_RECORD if mv is None else (mv.i, mv.j)
        payload += i.to_bytes(2, "little")
        payload += j.to_bytes(2, "little")
    with open(path, "wb") as fh:
        fh.write(bytes(payload))


def load_trajectory(path) -> Trajectory:
    """Read a trajectory written by save_trajectory; validates the header.

    The seed is not stored in the file (the moves alone determine the
    replay); loaded trajectories carry seed 0.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != _TRAJ_MAGIC:
        raise ValueError("not a TVWK file")
    if raw[4] != _TRAJ_VERSION:
        raise ValueError(f"unsupported TVWK version {raw[4]}")
    n = int.from_bytes(raw[5:9], "little")
    t = int.from_bytes(raw[9:17], "little")
    lazy = bool(raw[17])
    body = raw[18:]
    if len(body) != 4 * t:
        raise ValueError("TVWK payload length mismatch")
    moves: list[Transvection | None] = []
    for s in range(t):
        i = int.from_bytes(body[4 * s : 4 * s + 2], "little")
        j = int.from_bytes(body[4 * s + 2 : 4 * s + 4], "little")
        if (i, j) == _HOLD_RECORD:
            moves.append(None)
        else:
            moves.append(Transvection(i, j))
    return Trajectory(n, 0, tuple(moves), lazy)
