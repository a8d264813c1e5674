"""Exact enumeration of sample coincidences inside a detection window.

Each received sample inside the window is a sum of delayed copies of the
transmitted stream. Two window samples are correlated when they read the
same underlying data symbol, either through the same path (CP repetition)
or through two different paths. Mapping every (path, window index) to a
canonical data-symbol id turns all second-moment bookkeeping into counting.

The stream is modeled over three consecutive OFDM symbols with the
observed symbol last, so any delay in [0, 2N) is covered without wrap.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .scene import UnifiedChannel, WaveformConfig, WaveformKind

_SYMBOLS = 3


def detection_window(wf: WaveformConfig) -> tuple[int, int]:
    """(start, length) of the energy window within one symbol period.

    ZP integrates [N_f + Delta_s, N); CP integrates the whole symbol.
    """
    if wf.kind is WaveformKind.ZP:
        start = wf.fft_size + wf.sample_shift
        return start, wf.total_size - start
    return 0, wf.total_size


def sample_ids(wf: WaveformConfig, delay: int) -> np.ndarray:
    """Data-symbol id seen through a path of the given delay at each window index.

    Returns -1 where the path contributes a zero sample (ZP guard). Ids are
    unique across the three modeled symbols.
    """
    n_tot = wf.total_size
    if not 0 <= delay < (_SYMBOLS - 1) * n_tot:
        raise ValueError(f"delay {delay} outside the modeled stream [0, {2 * n_tot})")
    start, length = detection_window(wf)
    pos = (_SYMBOLS - 1) * n_tot + np.arange(start, start + length) - delay
    sym, idx = np.divmod(pos, n_tot)
    if wf.kind is WaveformKind.ZP:
        data = np.where(idx < wf.fft_size, idx, -1)
    else:
        # CP position i < N_cp repeats data position i + N_f
        data = np.where(idx < wf.guard_size, idx + wf.fft_size, idx)
    return np.where(data < 0, -1, sym * n_tot + data)


@dataclass(frozen=True)
class CoincidenceCounts:
    """Enumeration results for a set of paths.

    Attributes:
        window_length: Number of samples integrated.
        occupancy: (J, W) bool, path j contributes a nonzero sample at n.
        self_pairs: (J,) pairs n < m where path j reads the same datum twice.
        cross: (J, J) ordered (n, m) pairs, n = m included, where path j at
            n and path j' at m read the same datum.
        same_index: (J, J) indices n where paths j and j' read the same datum.
        double_self: (J, J) pairs n < m that are self pairs of both paths.
    """

    window_length: int
    occupancy: np.ndarray
    self_pairs: np.ndarray
    cross: np.ndarray
    same_index: np.ndarray
    double_self: np.ndarray

    @property
    def mean_counts(self) -> np.ndarray:
        """Number of window samples carrying each path (C_j of the mean)."""
        return self.occupancy.sum(axis=1)

    def covariance_counts(self, convention: str = "exact") -> np.ndarray:
        """Pairwise covariance weights C_{j,j'} (symmetric, zero diagonal).

        ``exact`` is the full second moment under independent uniform path
        phases: cross coincidences, plus same-index terms squared, plus twice
        the pairs that are CP repetitions of both paths. ``pairwise`` keeps
        only the cross coincidences, i.e. the covariance of two samples that
        share one datum through two different paths.
        """
        if convention == "exact":
            c = self.cross + self.same_index ** 2 + 2 * self.double_self
        elif convention == "pairwise":
            c = self.cross.copy()
        else:
            raise ValueError(f"unknown covariance convention {convention!r}")
        np.fill_diagonal(c, 0)
        return c


def _count(wf: WaveformConfig, delays: tuple[int, ...]) -> CoincidenceCounts:
    ids = np.stack([sample_ids(wf, d) for d in delays]) if delays else np.zeros((0, 0), int)
    n_paths, width = ids.shape
    n_ids = _SYMBOLS * wf.total_size
    hist = np.zeros((n_paths, n_ids), dtype=np.int64)
    for j in range(n_paths):
        valid = ids[j] >= 0
        hist[j] = np.bincount(ids[j][valid], minlength=n_ids)
    cross = hist @ hist.T
    self_pairs = (hist * (hist - 1) // 2).sum(axis=1)

    valid = ids >= 0
    same = ((ids[:, None, :] == ids[None, :, :]) & valid[:, None, :]).sum(axis=2)

    # self pairs as keys n * W + m, n < m; each datum appears at most twice per path
    keys = []
    for j in range(n_paths):
        order = np.argsort(ids[j], kind="stable")
        s = ids[j][order]
        dup = np.nonzero((s[1:] == s[:-1]) & (s[1:] >= 0))[0]
        n1, n2 = order[dup], order[dup + 1]
        lo, hi = np.minimum(n1, n2), np.maximum(n1, n2)
        keys.append(np.unique(lo * width + hi))
    double = np.zeros((n_paths, n_paths), dtype=np.int64)
    for j in range(n_paths):
        if keys[j].size == 0:
            continue
        for k in range(j + 1, n_paths):
            if keys[k].size:
                double[j, k] = double[k, j] = np.intersect1d(keys[j], keys[k], assume_unique=True).size
    for arr in (cross, same, double):
        arr.setflags(write=False)
    return CoincidenceCounts(width, valid, self_pairs, cross, same, double)


@lru_cache(maxsize=256)
def _count_cached(wf: WaveformConfig, delays: tuple[int, ...]) -> CoincidenceCounts:
    return _count(wf, delays)


def coincidence_counts(wf: WaveformConfig, delays) -> CoincidenceCounts:
    """Enumerate coincidences for paths with the given delays (cached)."""
    return _count_cached(wf, tuple(int(d) for d in delays))


def window_moments(channel: UnifiedChannel, wf: WaveformConfig, noise_power: float,
                   convention: str = "exact") -> tuple[float, float, CoincidenceCounts]:
    """Mean and variance of the window-averaged energy statistic.

    Data samples are circular Gaussian with power eta (ZP) or 1 (CP), paths
    carry independent uniform phases and the noise is white with power
    sigma^2. With E(z_n) = sigma^2 + s sum_j g_j I_{j,n} and s the data power:

        W^2 Var = sum_n E(z_n)^2 + 2 s^2 sum_j g_j^2 C_j
                  + 2 s^2 sum_{j<j'} g_j g_j' C_{j,j'}

    Returns:
        (mean, variance, counts).
    """
    counts = coincidence_counts(wf, channel.delays)
    s = wf.eta if wf.kind is WaveformKind.ZP else 1.0
    g = np.asarray(channel.gains, dtype=float)
    w = counts.window_length
    ez = noise_power + s * (g @ counts.occupancy)
    mean = float(ez.mean())
    cov = counts.covariance_counts(convention)
    total = float(np.sum(ez * ez))
    total += 2.0 * s * s * float(np.sum(g * g * counts.self_pairs))
    total += s * s * float(g @ cov @ g)  # symmetric matrix: both orders = 2 sum_{j<j'}
    return mean, total / w ** 2, counts
