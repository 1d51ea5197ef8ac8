"""Counter-based deterministic random streams.

All randomness in this package (synthetic generators, impostor-pair
subsampling) comes from one algorithm, written out here so that any
independent implementation can reproduce the exact same streams.

Output ``i`` of the stream with seed ``s`` is::

    u64(i) = mix64((s + (i + 1) * 0x9E3779B97F4A7C15) mod 2**64)

where ``mix64`` is the SplitMix64 finalizer::

    z = (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9   (mod 2**64)
    z = (z XOR (z >> 27)) * 0x94D049BB133111EB   (mod 2**64)
    mix64(z) = z XOR (z >> 31)

Uniform doubles in [0, 1) take the top 53 bits: ``(u64 >> 11) * 2**-53``.
Phases map u to ``pi - 2*pi*u``, which lands in (-pi, pi].
Normal deviates use Box-Muller on counter pairs (2k, 2k+1) with
``u1 = ((u64 >> 11) + 1) * 2**-53`` so the log argument is never zero.

Because the stream is a pure function of (seed, counter), any slice can be
generated independently and out of order; nothing here carries state.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_U53 = 2.0 ** -53


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a python int (wraps mod 2**64)."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def u64(seed: int, counter: int) -> int:
    """Stream output at one counter position."""
    return mix64(seed + (counter + 1) * _GOLDEN)


def bulk_u64(seed: int, start: int, count: int) -> np.ndarray:
    """Vectorized stream outputs for counters [start, start+count)."""
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    z = np.uint64(seed & _MASK) + idx * np.uint64(_GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def uniform(seed: int, start: int, count: int) -> np.ndarray:
    """Doubles in [0, 1)."""
    return (bulk_u64(seed, start, count) >> np.uint64(11)).astype(np.float64) * _U53


def phases(seed: int, start: int, count: int) -> np.ndarray:
    """Phases uniform on (-pi, pi]."""
    return np.pi - 2.0 * np.pi * uniform(seed, start, count)


def normals(seed: int, start: int, count: int) -> np.ndarray:
    """Standard normal deviates via Box-Muller.

    Deviate k consumes stream counters (2*(start+k), 2*(start+k)+1) so
    disjoint slices never share counters.
    """
    raw = bulk_u64(seed, 2 * start, 2 * count)
    u1 = ((raw[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * _U53
    u2 = (raw[1::2] >> np.uint64(11)).astype(np.float64) * _U53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def derive_seed(seed: int, label: str) -> int:
    """Stable sub-seed for a labelled stream.

    XORs the base seed with the low 64 bits of sha256(label) and mixes, so
    sub-streams for different labels are decorrelated but reproducible.
    """
    tag = int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:8], "little")
    return mix64((seed & _MASK) ^ tag)


def sample_distinct(
    n_total: int,
    count: int,
    seed: int,
    accept=None,
    max_draws: int | None = None,
) -> np.ndarray:
    """Draw ``count`` distinct integers uniformly from [0, n_total).

    Equivalent to sampling without replacement: the stream is drawn i.i.d.
    uniform (with modulo rejection to stay unbiased), values failing the
    optional ``accept`` mask are discarded, and the first ``count`` distinct
    survivors are kept.  Output is sorted ascending.

    Raises if fewer than ``count`` acceptable values exist within the draw
    budget (guards against an ``accept`` that filters almost everything).
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    if count == 0:
        return np.empty(0, dtype=np.int64)
    if n_total <= 0:
        raise ValueError("n_total must be positive")
    if max_draws is None:
        max_draws = max(200 * count, 1 << 20)

    # modulo rejection threshold: accept raw <= limit, limit = n*floor(2^64/n) - 1
    limit = np.uint64((2 ** 64 // n_total) * n_total - 1) if n_total & (n_total - 1) else None

    chosen: list[np.ndarray] = []
    n_chosen = 0
    cursor = 0
    batch = max(4 * count // 3 + 16, 1024)
    while n_chosen < count:
        if cursor >= max_draws:
            raise ValueError(
                f"sample_distinct exhausted draw budget with {n_chosen}/{count} values"
            )
        raw = bulk_u64(seed, cursor, batch)
        cursor += batch
        if limit is not None:
            raw = raw[raw <= limit]
        vals = (raw % np.uint64(n_total)).astype(np.int64)
        if accept is not None:
            vals = vals[accept(vals)]
        chosen.append(vals)
        pool = np.concatenate(chosen)
        uniq, first = np.unique(pool, return_index=True)
        n_chosen = uniq.size
        batch = min(max(batch * 2, 1024), 1 << 24)

    pool = np.concatenate(chosen)
    uniq, first = np.unique(pool, return_index=True)
    # keep the first `count` values in draw order, then sort for canonical output
    order = np.argsort(first, kind="stable")
    picked = uniq[order[:count]]
    picked.sort()
    return picked
