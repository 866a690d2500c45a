"""Coincidence histograms from photon timestamp streams.

cross_correlate counts all ordered pairs (t_a, t_b) with |t_b - t_a| <=
window using a vectorized sorted-merge sweep over both streams, never the
quadratic all-pairs product.  Delay bins are defined by integer magnitude
boundaries mirrored around zero, with a single merged central bin, so the
+tau/-tau symmetry of swapping the inputs is exact (no half-open boundary
leakage) and a brute-force pair enumeration reproduces the counts
bit-identically.

Normalization divides each bin by r_a * r_b * T * width, with the width
taken as the exact number of integer lags in the bin, so independent
Poisson streams normalize to 1.
"""

import json
from dataclasses import dataclass

import numpy as np

from .streams import PhotonStream

__all__ = [
    "G2Curve",
    "DecayHistogram",
    "cross_correlate",
    "decay_histogram",
    "g2_to_csv",
    "g2_from_csv",
    "g2_to_json",
    "g2_from_json",
    "decay_to_csv",
    "decay_from_csv",
]

_CHUNK = 1 << 18  # photons of `a` per sweep slice
_MAX_PAIRS = 1 << 24  # pair buffer cap per slice


@dataclass(frozen=True)
class G2Curve:
    """Signed coincidence histogram with its normalization.

    tau are bin centers in ps (lag-range midpoints); lag_widths the exact
    number of integer lags per bin; total_pairs_norm the per-bin Poisson
    denominator (zero when either stream was empty).
    """

    tau: np.ndarray
    counts: np.ndarray
    normalized: np.ndarray
    total_pairs_norm: np.ndarray
    lag_widths: np.ndarray
    window: int
    rate_a: float
    rate_b: float
    span: int

    @property
    def bin_edges(self):
        """Signed bin boundaries in ps, length len(tau) + 1."""
        half = self.lag_widths / 2.0
        left = self.tau - half
        return np.append(left, self.tau[-1] + half[-1])

    @property
    def valid(self):
        return bool(np.all(self.total_pairs_norm > 0))


@dataclass(frozen=True)
class DecayHistogram:
    """Pulse-folded delay histogram: counts per delay bin in [0, period)."""

    bin_edges: np.ndarray  # delay bin boundaries, ps
    counts: np.ndarray
    n_pulses: int

    @property
    def centers(self):
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])


def _magnitude_boundaries(window, bin_width=None, log_bins=None):
    """Integer magnitude boundaries B[0]=0 < B[1] < ... covering [0, window].

    Magnitude bin j holds |d| in [B[j], B[j+1]) with the last bin capped
    at window.  Uniform bins are centered on multiples of bin_width; log
    bins use a rounded geometric ladder (exact integer boundaries).
    """
    window = int(window)
    if window <= 0:
        raise ValueError("window must be > 0 ps")
    if (bin_width is None) == (log_bins is None):
        raise ValueError("give exactly one of bin_width or log_bins")
    if bin_width is not None:
        bw = int(bin_width)
        if not 0 < bw < window:
            raise ValueError("need window > bin_width > 0")
        k_max = (2 * window + bw) // (2 * bw)
        bounds = [0] + [j * bw - bw // 2 for j in range(1, k_max + 1)]
    else:
        if log_bins < 1:
            raise ValueError("log_bins must be >= 1")
        ladder = np.rint(np.geomspace(1, window, int(log_bins))).astype(np.int64)
        bounds = [0] + sorted(set(int(x) for x in ladder if 0 < x <= window))
    bounds = np.asarray([b for b in bounds if b <= window], dtype=np.int64)
    return bounds


def _lag_layout(bounds, window):
    """Centers and exact integer-lag widths of the signed bin layout.

    Layout: [-J, ..., -1, 0, +1, ..., +J] where J = len(bounds) - 1; the
    central bin merges magnitudes [0, bounds[1]) of both signs.
    """
    upper = np.append(bounds[1:], window + 1)  # exclusive magnitude uppers
    upper = np.minimum(upper, window + 1)
    m_lo = bounds
    m_hi = upper - 1  # inclusive
    side_widths = m_hi - m_lo + 1
    side_centers = 0.5 * (m_lo + m_hi)
    j = np.arange(1, bounds.size)
    centers = np.concatenate([-side_centers[j][::-1], [0.0], side_centers[j]])
    widths = np.concatenate(
        [side_widths[j][::-1], [2 * side_widths[0] - 1], side_widths[j]]
    )
    return centers, widths.astype(np.int64)


def _concat_ranges(lo, hi):
    """Concatenate arange(lo[i], hi[i]) for all i (vectorized)."""
    n = hi - lo
    keep = n > 0
    lo, n = lo[keep], n[keep]
    total = int(n.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64), keep, n
    out = np.ones(total, dtype=np.int64)
    out[0] = lo[0]
    if lo.size > 1:
        starts = np.cumsum(n[:-1])
        out[starts] = lo[1:] - (lo[:-1] + n[:-1]) + 1
    return np.cumsum(out), keep, n


def cross_correlate(a: PhotonStream, b: PhotonStream, window,
                    bin_width=None, log_bins=None) -> G2Curve:
    """Full cross-correlation histogram of two streams.

    Counts every pair (t_a, t_b) with t_b - t_a in [-window, window].
    Complexity is O((N + C) log M) for N, M input sizes and C coincident
    pairs; memory is bounded by slicing stream a.

    Parameters
    ----------
    a, b : PhotonStream
    window : int
        Maximum |t_b - t_a| in ps.
    bin_width : int, optional
        Uniform bin width in ps (bins centered on multiples of it).
    log_bins : int, optional
        Number of log-spaced magnitude boundaries instead of uniform bins.

    Returns
    -------
    G2Curve
    """
    bounds = _magnitude_boundaries(window, bin_width, log_bins)
    window = int(window)
    ta, tb = a.timestamps, b.timestamps
    span = min(a.duration, b.duration)
    centers, widths = _lag_layout(bounds, window)
    j_max = bounds.size - 1
    nbins = 2 * j_max + 1
    counts = np.zeros(nbins, dtype=np.int64)
    bw = int(bin_width) if bin_width is not None else 0

    start = 0
    while start < ta.size:
        stop = min(start + _CHUNK, ta.size)
        chunk = ta[start:stop]
        lo = np.searchsorted(tb, chunk - window, side="left")
        hi = np.searchsorted(tb, chunk + window, side="right")
        total = int((hi - lo).sum())
        if total > _MAX_PAIRS and stop - start > 1:
            stop = start + max(1, (stop - start) // 4)
            chunk = ta[start:stop]
            lo, hi = lo[: stop - start], hi[: stop - start]
        idx_b, keep, n = _concat_ranges(lo, hi)
        if idx_b.size:
            d = tb[idx_b] - np.repeat(chunk[keep], n)
            mag = np.abs(d)
            if bw:
                # arithmetic form of the magnitude-boundary lookup
                j = (2 * mag + bw) // (2 * bw)
            else:
                j = np.searchsorted(bounds, mag, side="right") - 1
            pos = j_max + np.sign(d) * j
            counts += np.bincount(pos, minlength=nbins)
        start = stop

    denom = np.zeros(nbins)
    if ta.size and tb.size and span > 0:
        denom = ta.size * tb.size * widths / float(span)
    with np.errstate(divide="ignore", invalid="ignore"):
        normalized = np.where(denom > 0, counts / denom, np.nan)
    rate_a = ta.size / (span * 1e-12) if span > 0 else 0.0
    rate_b = tb.size / (span * 1e-12) if span > 0 else 0.0
    return G2Curve(
        tau=centers,
        counts=counts,
        normalized=normalized,
        total_pairs_norm=denom,
        lag_widths=widths,
        window=window,
        rate_a=rate_a,
        rate_b=rate_b,
        span=span,
    )


def decay_histogram(s: PhotonStream, period, bin_width, n_pulses=None
                    ) -> DecayHistogram:
    """Fold timestamps modulo the pulse period into delay bins."""
    period = int(period)
    bin_width = int(bin_width)
    if period <= 0:
        raise ValueError("period must be > 0 ps")
    if not 0 < bin_width < period:
        raise ValueError("need period > bin_width > 0")
    delays = s.timestamps % period
    nbins = -(-period // bin_width)  # ceil
    counts = np.bincount(delays // bin_width, minlength=nbins)
    edges = np.minimum(np.arange(nbins + 1, dtype=np.int64) * bin_width, period)
    if n_pulses is None:
        n_pulses = s.duration // period
    return DecayHistogram(bin_edges=edges, counts=counts.astype(np.int64),
                          n_pulses=int(n_pulses))


# ---------------------------------------------------------------------------
# curve I/O


def g2_to_csv(curve: G2Curve, path):
    """Write (tau_ps, counts, g2) rows; nan g2 for unnormalizable bins."""
    with open(path, "w") as f:
        f.write("tau_ps,counts,g2\n")
        for t, c, g in zip(curve.tau, curve.counts, curve.normalized):
            f.write(f"{t:.1f},{int(c)},{_fmt(g)}\n")


def g2_from_csv(path) -> G2Curve:
    """Reload a CSV curve (lag widths and rates are reconstructed)."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    tau, counts, g2 = data[:, 0], data[:, 1].astype(np.int64), data[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = np.where(g2 > 0, counts / g2, 0.0)
    diffs = np.diff(tau)
    width = int(np.median(diffs)) if diffs.size else 1
    return G2Curve(
        tau=tau, counts=counts, normalized=g2, total_pairs_norm=denom,
        lag_widths=np.full(tau.size, width, dtype=np.int64),
        window=int(abs(tau).max()) if tau.size else 0,
        rate_a=0.0, rate_b=0.0, span=0,
    )


def g2_to_json(curve: G2Curve, path):
    payload = {
        "kind": "g2",
        "window_ps": int(curve.window),
        "span_ps": int(curve.span),
        "rate_a_hz": curve.rate_a,
        "rate_b_hz": curve.rate_b,
        "tau_ps": curve.tau.tolist(),
        "lag_widths_ps": curve.lag_widths.tolist(),
        "counts": curve.counts.tolist(),
        "g2": [None if np.isnan(g) else g for g in curve.normalized],
        "total_pairs_norm": curve.total_pairs_norm.tolist(),
    }
    with open(path, "w") as f:
        json.dump(payload, f, indent=1)
        f.write("\n")


def g2_from_json(path) -> G2Curve:
    with open(path) as f:
        p = json.load(f)
    if p.get("kind") != "g2":
        raise ValueError(f"{path}: not a g2 curve file")
    g2 = np.array([np.nan if g is None else g for g in p["g2"]])
    return G2Curve(
        tau=np.asarray(p["tau_ps"], dtype=float),
        counts=np.asarray(p["counts"], dtype=np.int64),
        normalized=g2,
        total_pairs_norm=np.asarray(p["total_pairs_norm"], dtype=float),
        lag_widths=np.asarray(p["lag_widths_ps"], dtype=np.int64),
        window=int(p["window_ps"]),
        rate_a=float(p["rate_a_hz"]),
        rate_b=float(p["rate_b_hz"]),
        span=int(p["span_ps"]),
    )


def decay_to_csv(hist: DecayHistogram, path):
    with open(path, "w") as f:
        f.write("delay_ps,counts\n")
        for t, c in zip(hist.centers, hist.counts):
            f.write(f"{t:.1f},{int(c)}\n")


def decay_from_csv(path, n_pulses=0) -> DecayHistogram:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    centers, counts = data[:, 0], data[:, 1].astype(np.int64)
    if centers.size > 1:
        width = centers[1] - centers[0]
    else:
        width = 2 * centers[0] if centers.size else 1.0
    edges = np.append(centers - width / 2.0, centers[-1] + width / 2.0)
    return DecayHistogram(bin_edges=edges, counts=counts,
                          n_pulses=int(n_pulses))


def _fmt(x):
    return "nan" if np.isnan(x) else f"{x:.8g}"
