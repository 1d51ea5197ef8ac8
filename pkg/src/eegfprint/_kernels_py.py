"""NumPy implementations of the hot kernels.

Used when the compiled extension is unavailable or disabled via the
``EEGFPRINT_PURE_PYTHON`` environment variable.  Must stay numerically
interchangeable with ``_ckernels`` (agreement to ~1e-12; exact for PLI,
whose per-pair sums are integer-valued).
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "numpy"

# bounds the (pairs x window) temporary in pli_epoch_features
_PAIR_CHUNK = 512
# bounds gather temporaries in pair_similarities (rows per slice)
_SCORE_CHUNK = 16384


def pli_epoch_features(phases: np.ndarray, window: int) -> np.ndarray:
    """Per-epoch phase lag index for every channel pair.

    phases: channels x samples, radians.  Epochs are contiguous
    non-overlapping windows from sample 0; the trailing remainder is
    dropped.  Returns epochs x pairs with pairs in row-major strict
    upper-triangle order.  PLI = |mean sign sin(phi_i - phi_j)| with
    sign(0) = 0.
    """
    phases = np.asarray(phases, dtype=np.float64)
    n_channels, n_samples = phases.shape
    n_epochs = n_samples // window
    iu, ju = np.triu_indices(n_channels, 1)
    n_pairs = iu.size
    out = np.empty((n_epochs, n_pairs), dtype=np.float64)
    trimmed = phases[:, : n_epochs * window].reshape(n_channels, n_epochs, window)
    for lo in range(0, n_pairs, _PAIR_CHUNK):
        hi = min(lo + _PAIR_CHUNK, n_pairs)
        diff = trimmed[iu[lo:hi]] - trimmed[ju[lo:hi]]  # (chunk, E, w)
        sums = np.sign(np.sin(diff)).sum(axis=2)
        out[:, lo:hi] = np.abs(sums).T / window
    return out


def plv_epoch_features(phases: np.ndarray, window: int) -> np.ndarray:
    """Per-epoch phase locking value for every channel pair.

    Same layout as :func:`pli_epoch_features`.
    PLV = |mean exp(i (phi_i - phi_j))|, clamped into [0, 1].
    """
    phases = np.asarray(phases, dtype=np.float64)
    n_channels, n_samples = phases.shape
    n_epochs = n_samples // window
    iu, ju = np.triu_indices(n_channels, 1)
    unit = np.exp(1j * phases[:, : n_epochs * window])
    unit = unit.reshape(n_channels, n_epochs, window).transpose(1, 0, 2)  # (E, C, w)
    gram = unit @ unit.conj().transpose(0, 2, 1)
    values = np.abs(gram[:, iu, ju]) / window
    return np.clip(values, 0.0, 1.0, out=values)


def pair_similarities(features: np.ndarray, idx_a: np.ndarray,
                      idx_b: np.ndarray) -> np.ndarray:
    """Similarity 1 / (1 + Euclidean distance) for selected row pairs."""
    features = np.asarray(features, dtype=np.float64)
    idx_a = np.asarray(idx_a, dtype=np.int64)
    idx_b = np.asarray(idx_b, dtype=np.int64)
    if idx_a.shape != idx_b.shape:
        raise ValueError("index arrays must have equal length")
    norms = np.einsum("nd,nd->n", features, features)
    out = np.empty(idx_a.size, dtype=np.float64)
    for lo in range(0, idx_a.size, _SCORE_CHUNK):
        hi = min(lo + _SCORE_CHUNK, idx_a.size)
        rows_a = features[idx_a[lo:hi]]
        rows_b = features[idx_b[lo:hi]]
        dots = np.einsum("kd,kd->k", rows_a, rows_b)
        d2 = norms[idx_a[lo:hi]] + norms[idx_b[lo:hi]] - 2.0 * dots
        np.maximum(d2, 0.0, out=d2)
        out[lo:hi] = 1.0 / (1.0 + np.sqrt(d2))
    return out
