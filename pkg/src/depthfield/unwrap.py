"""Single-frequency phase unwrapping driven by a coarse, wrap-free
correspondence depth map.

The line method follows a user-selected calibration path of monotonically
varying depth (e.g. along a side wall): wrap events show up as jumps in
wrapped depth larger than half the unambiguous range running against the
correspondence trend.  Walking the line yields a piecewise mapping from
correspondence depth to wrap count, which is then applied to every pixel.
A per-pixel baseline (round the count from the correspondence value
directly) is provided for comparison.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import DepthMap


@dataclass(frozen=True)
class CalibrationLine:
    """Ordered 8-connected path of center-view pixel coordinates."""

    points: np.ndarray  # (n, 2) int, columns (x, y)

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.int64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ValueError("calibration line needs >= 2 (x, y) points")
        steps = np.abs(np.diff(pts, axis=0)).max(axis=1)
        if np.any(steps != 1):
            raise ValueError("calibration line must be an 8-connected path "
                             "without repeats")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]

    @classmethod
    def from_endpoints(cls, x0, y0, x1, y1):
        """Rasterize the segment (x0, y0) -> (x1, y1) with Bresenham."""
        if (x0, y0) == (x1, y1):
            raise ValueError("line endpoints must differ")
        pts = []
        dx = abs(x1 - x0)
        sx = 1 if x0 < x1 else -1
        dy = -abs(y1 - y0)
        sy = 1 if y0 < y1 else -1
        err = dx + dy
        x, y = x0, y0
        while True:
            pts.append((x, y))
            if x == x1 and y == y1:
                break
            e2 = 2 * err
            if e2 >= dy:
                err += dy
                x += sx
            if e2 <= dx:
                err += dx
                y += sy
        return cls(points=np.array(pts, dtype=np.int64))


@dataclass(frozen=True)
class UnwrapResult:
    depth_map: DepthMap
    wrap_count: np.ndarray  # int per pixel
    low_confidence: np.ndarray  # bool per pixel
    n_wrap_events: int = 0
    intervals: tuple = ()  # (corr_lo, corr_hi, count) per line run


def median_filter_map(dmap, radius):
    """Invalid-aware median filter over a (2r+1)^2 window."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius == 0:
        return dmap
    w = 2 * radius + 1
    vals = np.where(dmap.valid, dmap.depth, np.nan)
    padded = np.pad(vals, radius, mode="constant", constant_values=np.nan)
    windows = np.lib.stride_tricks.sliding_window_view(padded, (w, w))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        med = np.nanmedian(windows, axis=(2, 3))
    valid = dmap.valid & np.isfinite(med)
    return DepthMap(depth=np.where(valid, med, 0.0), albedo=dmap.albedo,
                    valid=valid, wrapped=dmap.wrapped)


def _check_pair(wrapped, corr):
    if not wrapped.wrapped:
        raise ValueError("input map must be flagged wrapped")
    if corr.wrapped:
        raise ValueError("correspondence map must be unwrapped")
    if wrapped.shape != corr.shape:
        raise ValueError(f"map shapes differ: {wrapped.shape} vs {corr.shape}")


def _isotonic(y, increasing=True):
    """Pool-adjacent-violators fit, uniform weights."""
    sgn = 1.0 if increasing else -1.0
    vals = []
    counts = []
    for v in sgn * np.asarray(y, dtype=np.float64):
        vals.append(v)
        counts.append(1)
        while len(vals) > 1 and vals[-2] > vals[-1]:
            v2, c2 = vals.pop(), counts.pop()
            v1, c1 = vals.pop(), counts.pop()
            vals.append((v1 * c1 + v2 * c2) / (c1 + c2))
            counts.append(c1 + c2)
    return sgn * np.concatenate(
        [np.full(c, v) for v, c in zip(vals, counts)])


def unwrap_per_pixel(wrapped, corr, unambiguous_range):
    """Baseline: per-pixel wrap count n = round((d_corr - d_wrapped) / R).

    Exact whenever the correspondence error is below R/2; an error above
    that produces an off-by-one count at that pixel.
    """
    _check_pair(wrapped, corr)
    r = float(unambiguous_range)
    n = np.rint((corr.depth - wrapped.depth) / r).astype(np.int64)
    n = np.maximum(n, 0)  # depth cannot be negative
    valid = wrapped.valid & corr.valid
    depth = np.where(valid, wrapped.depth + n * r, 0.0)
    n = np.where(valid, n, 0)
    dmap = DepthMap(depth=depth, albedo=wrapped.albedo, valid=valid,
                    wrapped=False)
    return UnwrapResult(depth_map=dmap, wrap_count=n,
                        low_confidence=~corr.valid)


def unwrap_with_line(wrapped, corr, line, unambiguous_range,
                     median_radius=2):
    """Unwrap using wrap events detected along a calibration line.

    Steps: median-filter the correspondence map; walk the line
    accumulating a wrap count (anchored at the line start by the
    correspondence value there); build half-open correspondence-depth
    intervals per count; look every pixel's count up from its filtered
    correspondence depth.  Pixels outside all calibrated intervals take
    the nearest interval's count and are flagged low-confidence, as are
    pixels with no correspondence value.
    """
    _check_pair(wrapped, corr)
    r = float(unambiguous_range)
    pts = line.points
    nx, ny = wrapped.shape
    if pts[:, 0].min() < 0 or pts[:, 0].max() >= nx \
            or pts[:, 1].min() < 0 or pts[:, 1].max() >= ny:
        raise ValueError("calibration line leaves the image bounds")

    corr_f = median_filter_map(corr, median_radius)
    lx, ly = pts[:, 0], pts[:, 1]
    w_line = wrapped.depth[lx, ly]
    c_line = corr_f.depth[lx, ly]
    ok_line = wrapped.valid[lx, ly] & corr_f.valid[lx, ly]
    if ok_line.mean() < 0.5:
        raise ValueError("correspondence invalid along more than half of "
                         "the calibration line")

    w_seq = w_line[ok_line]
    c_seq = c_line[ok_line]
    increasing = c_seq[-1] >= c_seq[0]
    c_fit = _isotonic(c_seq, increasing=increasing)
    drift = float(np.abs(c_fit - c_seq).max())
    if drift > 0.02 * max(np.ptp(c_seq), r):
        warnings.warn(
            f"correspondence depth is not monotone along the calibration "
            f"line (max deviation {drift:.3g} m); using monotone regression",
            stacklevel=2)

    # walk the line: accumulate wrap count, anchored near the line start
    # (median over a few samples rides out correspondence quantization)
    trend = 1.0 if increasing else -1.0
    head = min(5, len(w_seq))
    n = int(max(np.median(np.rint((c_fit[:head] - w_seq[:head]) / r)), 0))
    counts = np.empty(len(w_seq), dtype=np.int64)
    counts[0] = n
    n_events = 0
    for i in range(1, len(w_seq)):
        dw = w_seq[i] - w_seq[i - 1]
        dc = c_fit[i] - c_fit[i - 1]
        step_trend = dc if dc != 0.0 else trend
        if abs(dw) > 0.5 * r and np.sign(dw) != np.sign(step_trend):
            n += 1 if dw < 0 else -1
            n_events += 1
        counts[i] = n

    # runs of constant count -> half-open intervals over corr depth
    if not increasing:
        c_fit = c_fit[::-1]
        counts = counts[::-1]
    intervals = []
    start = 0
    for i in range(1, len(counts) + 1):
        if i == len(counts) or counts[i] != counts[start]:
            intervals.append((float(c_fit[start]), float(c_fit[i - 1]),
                              int(counts[start])))
            start = i
    run_counts = np.array([iv[2] for iv in intervals], dtype=np.int64)
    boundaries = np.array([(intervals[j][1] + intervals[j + 1][0]) / 2.0
                           for j in range(len(intervals) - 1)])

    cvals = corr_f.depth
    idx = np.searchsorted(boundaries, cvals, side="left")
    if boundaries.size:
        # a value exactly on a boundary belongs to the lower count
        exact = (idx < boundaries.size) & (boundaries[np.minimum(
            idx, boundaries.size - 1)] == cvals)
        right = np.minimum(idx + 1, len(run_counts) - 1)
        take_right = exact & (run_counts[right] < run_counts[idx])
        idx = np.where(take_right, right, idx)
    n_pix = run_counts[idx]
    n_pix = np.where(corr_f.valid, n_pix, 0)
    n_pix = np.maximum(n_pix, 0)

    c_lo = intervals[0][0]
    c_hi = intervals[-1][1]
    low_conf = (~corr_f.valid) | (cvals < c_lo) | (cvals > c_hi)

    valid = wrapped.valid
    depth = np.where(valid, wrapped.depth + n_pix * r, 0.0)
    n_pix = np.where(valid, n_pix, 0)
    dmap = DepthMap(depth=depth, albedo=wrapped.albedo, valid=valid,
                    wrapped=False)
    return UnwrapResult(depth_map=dmap, wrap_count=n_pix,
                        low_confidence=low_conf, n_wrap_events=n_events,
                        intervals=tuple(intervals))
