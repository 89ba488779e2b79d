"""Large-n empirical mixing diagnostics.

True total-variation distance is out of reach beyond n = 5, but the TV
distance between the laws of any statistic S(X) lower-bounds the TV
distance between the laws of X.  The module tracks integer statistics
(weight, trace, corner rank) over many simulated chains, compares their
histogram against exact stationary draws, and reports a plug-in TV estimate
together with a noise floor obtained by splitting the stationary sample in
half, which quantifies the estimator's inflation at a given trial count.

The cutoff experiment runs the k = 1 projection chain (a vector walk) on a
time grid around (3/2) n log n, where its weight statistic shows the
characteristic fall from near 1 to near 0.  The stationary law of the
nonzero-vector walk has weight Binomial(n, 1/2) conditioned to be at least
1, so the reference sample is drawn directly rather than by long runs.

Trials are split into fixed-size blocks with per-block derived generator
streams: merging is associative over block index, so results are identical
for any thread count.  These statistic distinguishers are also the hook for
probing public keys of the authentication protocol against uniform.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exactgroup import GroupTable
from .gf2core import WORD_BITS, derive_rng, rank_words_batch, sample_uniform_invertible_batch

__all__ = [
    "STATISTICS",
    "StatisticSample",
    "TvEstimate",
    "CutoffPoint",
    "NoBracketError",
    "DEFAULT_CUTOFF_GRID",
    "statistic_tv",
    "cutoff_experiment",
    "crossover_locator",
    "monotone_decreasing_envelope",
    "mc_state_frequencies",
]

STATISTICS = ("weight", "trace", "corner_rank")

# Trials per block; fixed so that per-block generator streams, and hence all
# outputs, are independent of the thread count.
_BLOCK = 2500

_STREAM_MC = 6
_STREAM_STAT_CHAIN = 7
_STREAM_STAT_REF = 8
_STREAM_CUTOFF_CHAIN = 9
_STREAM_CUTOFF_REF = 10

# Cutoff time grid in units of n log n, spanning [0.5, 3] times the
# transition point at 1.5 n log n.
DEFAULT_CUTOFF_GRID = (
    0.75, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 2.0, 2.25, 2.5, 3.0, 3.75, 4.5,
)


class NoBracketError(RuntimeError):
    """Raised when a curve never crosses the 1/2 level."""


@dataclass(frozen=True)
class StatisticSample:
    """Histogram of one integer statistic over a sample of states."""

    name: str
    histogram: np.ndarray = field(repr=False)

    @property
    def count(self) -> int:
        return int(self.histogram.sum())


@dataclass(frozen=True)
class TvEstimate:
    """Plug-in TV lower-bound estimate between chain and stationary laws.

    ``estimate`` is half the l1 distance between normalized histograms of
    the statistic; ``noise_floor`` is the same estimator applied to two
    halves of the stationary sample, i.e. the value a true distance of zero
    would produce at this sample size.
    """

    statistic: str
    n: int
    t: int
    lazy: bool
    trials: int
    estimate: float
    noise_floor: float
    chain_sample: StatisticSample = field(repr=False)
    ref_sample: StatisticSample = field(repr=False)


@dataclass(frozen=True)
class CutoffPoint:
    """One point of the k-column cutoff curve."""

    n: int
    k: int
    t: int
    t_over_nlogn: float
    tv_estimate: float
    noise_floor: float
    trials: int
    seed: int


def _map_blocks(n_blocks: int, worker, threads: int) -> list:
    if threads <= 1 or n_blocks <= 1:
        return [worker(b) for b in range(n_blocks)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, range(n_blocks)))


def _block_sizes(trials: int) -> list[int]:
    sizes = [_BLOCK] * (trials // _BLOCK)
    if trials % _BLOCK:
        sizes.append(trials % _BLOCK)
    return sizes


def _identity_words(n: int, count: int) -> np.ndarray:
    w = (n + WORD_BITS - 1) // WORD_BITS
    state = np.zeros((count, n, w), dtype=np.uint64)
    idx = np.arange(n)
    state[:, idx, idx // WORD_BITS] = np.uint64(1) << (idx % WORD_BITS).astype(np.uint64)
    return state


def _walk_full(n: int, t: int, count: int, rng: np.random.Generator, lazy: bool) -> np.ndarray:
    """`count` independent walks of t steps from the identity, word-packed.

    Per step the generator yields the pair draws first and then, when lazy,
    the hold coins; a held walker XORs a zero row, keeping the update
    branch-free.
    """
    state = _identity_words(n, count)
    npairs = n * (n - 1)
    rows = np.arange(count)
    for _ in range(t):
        u = rng.integers(0, npairs, size=count)
        i = u // (n - 1)
        j = u % (n - 1)
        j += j >= i
        act = np.ones(count, dtype=np.uint64)
        if lazy:
            act = rng.integers(0, 2, size=count).astype(np.uint64)
        delta = state[rows, j] * act[:, None]
        state[rows, i] ^= delta
    return state


def _weight_full(state: np.ndarray) -> np.ndarray:
    return np.bitwise_count(state).sum(axis=(1, 2)).astype(np.int64)


def _trace_full(state: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(state.shape[0], dtype=np.int64)
    for d in range(n):
        out += ((state[:, d, d // WORD_BITS] >> np.uint64(d % WORD_BITS)) & np.uint64(1)).astype(
            np.int64
        )
    return out


def _corner_rank_full(state: np.ndarray, n: int) -> np.ndarray:
    m = (n + 1) // 2
    wm = (m + WORD_BITS - 1) // WORD_BITS
    corner = state[:, :m, :wm].copy()
    rem = m % WORD_BITS
    if rem:
        corner[:, :, -1] &= np.uint64((1 << rem) - 1)
    return rank_words_batch(corner.reshape(-1, m, wm), m)


def _statistic_values(name: str, state: np.ndarray, n: int) -> np.ndarray:
    if name == "weight":
        return _weight_full(state)
    if name == "trace":
        return _trace_full(state, n)
    if name == "corner_rank":
        return _corner_rank_full(state, n)
    raise ValueError(f"unknown statistic {name!r}; choose from {STATISTICS}")


def _statistic_max(name: str, n: int) -> int:
    if name == "weight":
        return n * n
    if name == "trace":
        return n
    return (n + 1) // 2


def _hist_tv(a: np.ndarray, b: np.ndarray) -> float:
    pa = a / a.sum()
    pb = b / b.sum()
    return 0.5 * float(np.abs(pa - pb).sum())


def statistic_tv(
    n: int,
    t: int,
    statistic: str,
    trials: int,
    seed: int,
    lazy: bool = False,
    threads: int = 1,
) -> TvEstimate:
    """TV lower-bound estimate at time t via one integer statistic.

    Runs `trials` chains from the identity, draws `trials` exact uniform
    invertible references by rejection, and compares the statistic's
    histograms.  The noise floor comes from two half-samples of the
    reference draw.  The estimate lower-bounds the true TV distance in
    expectation, up to sampling error of the order of the noise floor.
    """
    if trials < 1000:
        raise ValueError("need at least 1000 trials for a usable histogram")
    if statistic not in STATISTICS:
        raise ValueError(f"unknown statistic {statistic!r}; choose from {STATISTICS}")
    sizes = _block_sizes(trials)
    bins = _statistic_max(statistic, n) + 1

    def chain_block(b: int) -> np.ndarray:
        rng = derive_rng(seed, _STREAM_STAT_CHAIN, b)
        state = _walk_full(n, t, sizes[b], rng, lazy)
        return np.bincount(_statistic_values(statistic, state, n), minlength=bins)

    def ref_block(b: int) -> tuple[np.ndarray, np.ndarray]:
        # Each block contributes a half-sample split so the noise floor is
        # defined even for a single block and is thread-count independent.
        rng = derive_rng(seed, _STREAM_STAT_REF, b)
        words = sample_uniform_invertible_batch(n, sizes[b], rng)
        vals = _statistic_values(statistic, words, n)
        mid = sizes[b] // 2
        return (
            np.bincount(vals[:mid], minlength=bins),
            np.bincount(vals[mid:], minlength=bins),
        )

    chain_hists = _map_blocks(len(sizes), chain_block, threads)
    ref_halves = _map_blocks(len(sizes), ref_block, threads)
    chain_hist = np.sum(chain_hists, axis=0)
    ref_a = np.sum([h[0] for h in ref_halves], axis=0)
    ref_b = np.sum([h[1] for h in ref_halves], axis=0)
    ref_hist = ref_a + ref_b
    floor = _hist_tv(ref_a, ref_b)
    return TvEstimate(
        statistic=statistic,
        n=n,
        t=t,
        lazy=lazy,
        trials=trials,
        estimate=_hist_tv(chain_hist, ref_hist),
        noise_floor=floor,
        chain_sample=StatisticSample(statistic, chain_hist),
        ref_sample=StatisticSample(statistic, ref_hist),
    )


def _stationary_weights_k1(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Weights of uniform nonzero vectors: Binomial(n, 1/2) given >= 1."""
    w = rng.binomial(n, 0.5, size=count)
    while True:
        zero = w == 0
        if not zero.any():
            return w.astype(np.int64)
        w[zero] = rng.binomial(n, 0.5, size=int(zero.sum()))


def _stationary_slice_weights(n: int, k: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Weights of uniform rank-k n x k slices, drawn by rejection."""
    wk = (k + WORD_BITS - 1) // WORD_BITS
    out = np.empty(count, dtype=np.int64)
    filled = 0
    mask = np.uint64((1 << (k % WORD_BITS)) - 1) if k % WORD_BITS else np.uint64(2**64 - 1)
    while filled < count:
        batch = max(1024, 2 * (count - filled))
        cand = rng.integers(0, 2**64, size=(batch, n, wk), dtype=np.uint64)
        cand[:, :, -1] &= mask
        good = rank_words_batch(cand, k) == k
        take = cand[good][: count - filled]
        out[filled : filled + take.shape[0]] = np.bitwise_count(take).sum(axis=(1, 2))
        filled += take.shape[0]
    return out


def cutoff_experiment(
    n: int,
    trials: int,
    seed: int,
    k: int = 1,
    grid: tuple[float, ...] = DEFAULT_CUTOFF_GRID,
    threads: int = 1,
) -> list[CutoffPoint]:
    """Weight-statistic TV curve of the k-column projection chain.

    The time grid is given in units of n log n and spans the fall of the
    curve around the transition at 1.5 n log n.  Each block of trials owns
    derived generator streams (reference draw first, then the walk), so the
    curve is reproducible for any thread count.
    """
    if n < 16:
        raise ValueError("cutoff diagnostics need n >= 16")
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    if trials < 1000:
        raise ValueError("need at least 1000 trials for a usable histogram")
    nlogn = n * math.log(n)
    t_grid = sorted({int(round(s * nlogn)) for s in grid})
    sizes = _block_sizes(trials)
    bins = n * k + 1
    npairs = n * (n - 1)

    def block(b: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        count = sizes[b]
        ref_rng = derive_rng(seed, _STREAM_CUTOFF_REF, b)
        if k == 1:
            ref_w = _stationary_weights_k1(n, count, ref_rng)
        else:
            ref_w = _stationary_slice_weights(n, k, count, ref_rng)
        mid = count // 2
        ref_half_a = np.bincount(ref_w[:mid], minlength=bins)
        ref_half_b = np.bincount(ref_w[mid:], minlength=bins)
        walk_rng = derive_rng(seed, _STREAM_CUTOFF_CHAIN, b)
        # k = 1 slice of the identity start: e_1 as unpacked bits.
        if k == 1:
            state = np.zeros((count, n), dtype=np.uint8)
            state[:, 0] = 1
        else:
            wk = (k + WORD_BITS - 1) // WORD_BITS
            state = np.zeros((count, n, wk), dtype=np.uint64)
            idx = np.arange(k)
            state[:, idx, idx // WORD_BITS] = np.uint64(1) << (idx % WORD_BITS).astype(np.uint64)
        rows = np.arange(count)
        hists = np.zeros((len(t_grid), bins), dtype=np.int64)
        t_now = 0
        for gi, t_target in enumerate(t_grid):
            for _ in range(t_target - t_now):
                u = walk_rng.integers(0, npairs, size=count)
                i = u // (n - 1)
                j = u % (n - 1)
                j += j >= i
                state[rows, i] ^= state[rows, j]
            t_now = t_target
            if k == 1:
                w = state.sum(axis=1).astype(np.int64)
            else:
                w = np.bitwise_count(state).sum(axis=(1, 2)).astype(np.int64)
            hists[gi] = np.bincount(w, minlength=bins)
        return hists, ref_half_a, ref_half_b

    results = _map_blocks(len(sizes), block, threads)
    chain_hists = np.sum([r[0] for r in results], axis=0)
    ref_a = np.sum([r[1] for r in results], axis=0)
    ref_b = np.sum([r[2] for r in results], axis=0)
    ref_total = ref_a + ref_b
    floor = _hist_tv(ref_a, ref_b)
    return [
        CutoffPoint(
            n=n,
            k=k,
            t=t,
            t_over_nlogn=t / nlogn,
            tv_estimate=_hist_tv(chain_hists[gi], ref_total),
            noise_floor=floor,
            trials=trials,
            seed=seed,
        )
        for gi, t in enumerate(t_grid)
    ]


def monotone_decreasing_envelope(values: np.ndarray) -> np.ndarray:
    """Running-minimum regularization; a no-op on nonincreasing input."""
    return np.minimum.accumulate(np.asarray(values, dtype=np.float64))


def crossover_locator(curve) -> float:
    """Time (in n log n units) where the cutoff curve crosses 1/2.

    Accepts a list of CutoffPoint or (time, estimate) pairs.  The curve is
    regularized to be nonincreasing, then the crossing is located by linear
    interpolation; a curve that does not bracket 1/2 is reported as such.
    """
    if curve and isinstance(curve[0], CutoffPoint):
        xs = np.array([p.t_over_nlogn for p in curve])
        ys = np.array([p.tv_estimate for p in curve])
    else:
        xs = np.array([p[0] for p in curve], dtype=np.float64)
        ys = np.array([p[1] for p in curve], dtype=np.float64)
    if xs.size < 2:
        raise NoBracketError("need at least two curve points")
    reg = monotone_decreasing_envelope(ys)
    if reg[0] <= 0.5 or reg[-1] > 0.5:
        raise NoBracketError("curve does not bracket the 1/2 level")
    idx = int(np.argmax(reg <= 0.5))
    x0, x1 = xs[idx - 1], xs[idx]
    y0, y1 = reg[idx - 1], reg[idx]
    if y0 == y1:
        return float(x1)
    return float(x0 + (0.5 - y0) * (x1 - x0) / (y1 - y0))


def mc_state_frequencies(
    n: int,
    t: int,
    trials: int,
    seed: int,
    gt: GroupTable,
    lazy: bool = False,
    threads: int = 1,
) -> np.ndarray:
    """Monte-Carlo counts of final states over the enumerated group.

    Runs `trials` chains to time t from the identity (packed integer keys,
    so n <= 5) and bins final states by group index.  This is the sampling
    route whose frequencies must match the exact distribution within
    binomial tolerance; it shares no code path with the exact iteration.
    """
    if n != gt.n:
        raise ValueError("group table dimension mismatch")
    if n > 5:
        raise ValueError("state keys require n <= 5")
    sizes = _block_sizes(trials)
    npairs = n * (n - 1)
    row_mask = np.uint64((1 << n) - 1)
    identity_key = np.uint64(sum(1 << (i * n + i) for i in range(n)))

    def block(b: int) -> np.ndarray:
        rng = derive_rng(seed, _STREAM_MC, b)
        count = sizes[b]
        keys = np.full(count, identity_key, dtype=np.uint64)
        for _ in range(t):
            u = rng.integers(0, npairs, size=count)
            i = u // (n - 1)
            j = u % (n - 1)
            j += j >= i
            act = np.ones(count, dtype=np.uint64)
            if lazy:
                act = rng.integers(0, 2, size=count).astype(np.uint64)
            row = (keys >> (j * n).astype(np.uint64)) & row_mask
            keys ^= (row << (i * n).astype(np.uint64)) * act
        return np.bincount(gt.index_of(keys), minlength=gt.size)

    counts = _map_blocks(len(sizes), block, threads)
    return np.sum(counts, axis=0)
