"""4D operators over depth fields: shearing, synthetic-aperture refocus,
and coarse depth from cross-view correspondence.

A Shear slope is the per-view-step pixel displacement used to align
content at one depth across all views (disparity law:
slope = baseline * focal_length / (depth * pixel_pitch)).  Refocusing is
"shear, then average over views".  Phase averaging defaults to phasor
space (mean of albedo * exp(i*phase)), since the raw frames are linear in
that quantity; arithmetic phase averaging is kept as a `naive` mode but is
wrong near the wrap seam.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CameraArrayConfig, DepthField, DepthMap, phase_to_depth, wrap_phase


@dataclass(frozen=True)
class Shear:
    """Pixel displacement per unit view-index step (same on both axes)."""

    slope: float

    def __post_init__(self):
        if not np.isfinite(self.slope):
            raise ValueError("shear slope must be finite")
        object.__setattr__(self, "slope", float(self.slope))

    @classmethod
    def from_depth(cls, depth, config):
        if depth <= 0:
            raise ValueError("focal depth must be > 0")
        return cls(config.baseline_u * config.focal_length
                   / (depth * config.pixel_pitch))

    def to_depth(self, config):
        if self.slope == 0:
            return np.inf
        return (config.baseline_u * config.focal_length
                / (self.slope * config.pixel_pitch))


def _integer_shift(arr, tx, ty, fill):
    """out[x, y] = arr[x + tx, y + ty], `fill` outside."""
    nx, ny = arr.shape
    out = np.full(arr.shape, fill, dtype=arr.dtype)
    x0, x1 = max(0, -tx), min(nx, nx - tx)
    y0, y1 = max(0, -ty), min(ny, ny - ty)
    if x0 < x1 and y0 < y1:
        out[x0:x1, y0:y1] = arr[x0 + tx:x1 + tx, y0 + ty:y1 + ty]
    return out


def _shift_bilinear(values, valid, dx, dy):
    """Sample `values` at (x + dx, y + dy) with bilinear weights.

    Invalid-aware: any tap with nonzero weight that is out of bounds or
    invalid invalidates the output sample.  Exact integer offsets touch a
    single tap.  Works for real and complex arrays.
    """
    x0 = int(np.floor(dx))
    y0 = int(np.floor(dy))
    fx = dx - x0
    fy = dy - y0
    taps = (
        (x0, y0, (1.0 - fx) * (1.0 - fy)),
        (x0 + 1, y0, fx * (1.0 - fy)),
        (x0, y0 + 1, (1.0 - fx) * fy),
        (x0 + 1, y0 + 1, fx * fy),
    )
    out = np.zeros(values.shape, dtype=values.dtype)
    ok = np.ones(values.shape, dtype=bool)
    for tx, ty, w in taps:
        if w == 0.0:
            continue
        m = _integer_shift(valid, tx, ty, False)
        v = _integer_shift(values, tx, ty, 0)
        out += w * np.where(m, v, 0)
        ok &= m
    return np.where(ok, out, 0), ok


def _check_shear(field, shear):
    cfg = field.config
    reach = max((cfg.nu - 1) / 2.0, (cfg.nv - 1) / 2.0)
    if abs(shear.slope) * reach >= min(cfg.nx, cfg.ny):
        raise ValueError(
            f"shear slope {shear.slope} displaces views beyond the "
            f"{cfg.nx}x{cfg.ny} pixel grid")


def _view_offsets(config):
    u0 = (config.nu - 1) / 2.0
    v0 = (config.nv - 1) / 2.0
    return [(iu, iv, iu - u0, iv - v0)
            for iu in range(config.nu) for iv in range(config.nv)]


def shift_mask_nearest(mask, dx, dy):
    """Nearest-neighbour shift of a boolean mask; out-of-bounds samples
    come back True (masked).  Alternative to the conservative bilinear
    validity handling when shearing exclusion masks."""
    tx = int(np.rint(dx))
    ty = int(np.rint(dy))
    return _integer_shift(np.asarray(mask, dtype=bool), tx, ty, True)


def shear_field(field, shear):
    """Resample every view at (x + (u-u0)*s, y + (v-v0)*s).

    Albedo and phase grids are interpolated independently; for wrapped
    phase prefer refocus() in phasor mode, which interpolates phasors.
    """
    _check_shear(field, shear)
    albedo = np.zeros(field.shape)
    phase = np.zeros(field.shape)
    valid = np.zeros(field.shape, dtype=bool)
    for iu, iv, du, dv in _view_offsets(field.config):
        dx = du * shear.slope
        dy = dv * shear.slope
        a, ok = _shift_bilinear(field.albedo[iu, iv], field.valid[iu, iv],
                                dx, dy)
        p, _ = _shift_bilinear(field.phase[iu, iv], field.valid[iu, iv],
                               dx, dy)
        albedo[iu, iv] = a
        phase[iu, iv] = np.where(ok, p, 0.0)
        valid[iu, iv] = ok
    return DepthField(config=field.config, albedo=albedo, phase=phase,
                      valid=valid, wrapped=field.wrapped)


@dataclass(frozen=True)
class RefocusResult:
    """Synthetic-aperture images refocused at one shear."""

    albedo: np.ndarray  # (nx, ny)
    phase: np.ndarray
    depth: np.ndarray  # meters; modulo unambiguous range when wrapped
    valid: np.ndarray
    n_rays: np.ndarray  # contributing rays per pixel
    n_fully_masked: int  # pixels that lost every ray to the mask alone
    wrapped: bool
    config: CameraArrayConfig

    def depth_map(self):
        return DepthMap(depth=np.where(self.valid, self.depth, 0.0),
                        albedo=self.albedo, valid=self.valid,
                        wrapped=self.wrapped)


def refocus(field, shear, mode="phasor", mask=None):
    """Shear by `shear`, then average each pixel over all valid, unmasked
    rays.

    mode="phasor" averages complex albedo*exp(i*phase) and returns
    (|mean|, arg(mean)); mode="naive" averages albedo and phase
    independently.  `mask` is an optional (nu, nv, nx, ny) boolean with
    True marking rays to exclude.  Pixels with zero contributing rays are
    invalid; pixels that had valid rays but lost all of them to the mask
    are additionally counted in n_fully_masked.
    """
    if mode not in ("phasor", "naive"):
        raise ValueError(f"mode must be 'phasor' or 'naive', got {mode!r}")
    _check_shear(field, shear)
    cfg = field.config
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != cfg.grid_shape:
            raise ValueError(f"mask shape {mask.shape} != {cfg.grid_shape}")

    img_shape = (cfg.nx, cfg.ny)
    count = np.zeros(img_shape, dtype=np.int32)
    count_unmasked = np.zeros(img_shape, dtype=np.int32)
    if mode == "phasor":
        acc = np.zeros(img_shape, dtype=np.complex128)
    else:
        acc_a = np.zeros(img_shape)
        acc_p = np.zeros(img_shape)

    for iu, iv, du, dv in _view_offsets(cfg):
        dx = du * shear.slope
        dy = dv * shear.slope
        keep = field.valid[iu, iv]
        if mask is not None:
            keep = keep & ~mask[iu, iv]
        if mode == "phasor":
            z = field.albedo[iu, iv] * np.exp(1j * field.phase[iu, iv])
            zs, ok = _shift_bilinear(z, keep, dx, dy)
            acc += zs
        else:
            a, ok = _shift_bilinear(field.albedo[iu, iv], keep, dx, dy)
            p, _ = _shift_bilinear(field.phase[iu, iv], keep, dx, dy)
            acc_a += np.where(ok, a, 0.0)
            acc_p += np.where(ok, p, 0.0)
        count += ok
        if mask is not None:
            _, ok_nomask = _shift_bilinear(field.albedo[iu, iv],
                                           field.valid[iu, iv], dx, dy)
            count_unmasked += ok_nomask

    valid = count > 0
    denom = np.maximum(count, 1)
    if mode == "phasor":
        mean = acc / denom
        albedo = np.abs(mean)
        phase = wrap_phase(np.angle(mean))
        wrapped = True
    else:
        albedo = acc_a / denom
        phase = acc_p / denom
        wrapped = field.wrapped
    albedo = np.where(valid, albedo, 0.0)
    phase = np.where(valid, phase, 0.0)
    depth = phase_to_depth(phase, cfg)
    n_fully_masked = 0
    if mask is not None:
        n_fully_masked = int(np.count_nonzero((count_unmasked > 0)
                                              & (count == 0)))
    return RefocusResult(albedo=albedo, phase=phase, depth=depth,
                         valid=valid, n_rays=count,
                         n_fully_masked=n_fully_masked, wrapped=wrapped,
                         config=cfg)


def candidates_for_depth_range(config, dmin, dmax, n=64):
    """n candidate shears uniformly spaced in disparity over [dmin, dmax]."""
    if not (0 < dmin < dmax):
        raise ValueError("need 0 < dmin < dmax")
    if n < 2:
        raise ValueError("need at least 2 candidates")
    s_far = Shear.from_depth(dmax, config).slope
    s_near = Shear.from_depth(dmin, config).slope
    return [Shear(s) for s in np.linspace(s_far, s_near, n)]


def _box_sum_1d(a, radius, axis):
    """Sliding-window sum over 2*radius+1 samples, zero-padded."""
    pad = [(0, 0), (0, 0)]
    pad[axis] = (radius + 1, radius)
    cs = np.cumsum(np.pad(a, pad), axis=axis)
    n = a.shape[axis]
    hi = np.take(cs, np.arange(2 * radius + 1, 2 * radius + 1 + n), axis=axis)
    lo = np.take(cs, np.arange(0, n), axis=axis)
    return hi - lo


def _box_mean(values, valid, radius):
    """Mean over a (2r+1)^2 window counting only valid samples."""
    if radius == 0:
        return np.where(valid, values, 0.0), valid.copy()
    v = np.where(valid, values, 0.0)
    c = valid.astype(np.float64)
    for axis in (0, 1):
        v = _box_sum_1d(v, radius, axis)
        c = _box_sum_1d(c, radius, axis)
    has = c > 0.5
    return np.where(has, v / np.maximum(c, 1.0), 0.0), has


@dataclass(frozen=True)
class CorrespondenceResult:
    depth_map: DepthMap
    confidence: np.ndarray  # variance contrast ratio in [0, 1]


def depth_from_correspondence(field, candidate_shears, window=5):
    """Coarse, wrap-free depth: per pixel, pick the candidate shear that
    minimizes cross-view albedo variance averaged over a window.

    Ties break toward the smallest candidate depth.  Pixels with fewer
    than 2 contributing rays at the winning candidate are invalid.  The
    confidence channel is 1 - v_min / v_mean over candidates (0 for flat,
    textureless ties).
    """
    cfg = field.config
    if cfg.nu * cfg.nv < 2:
        raise ValueError("correspondence needs at least 2 views")
    cands = list(candidate_shears)
    if len(cands) < 2:
        raise ValueError("need at least 2 candidate shears")
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be odd and >= 1")
    radius = window // 2

    depths = np.array([s.to_depth(cfg) for s in cands])
    order = np.argsort(depths)  # ascending depth; ties break to nearest
    img_shape = (cfg.nx, cfg.ny)

    best_score = np.full(img_shape, np.inf)
    best_depth = np.zeros(img_shape)
    best_valid = np.zeros(img_shape, dtype=bool)
    score_sum = np.zeros(img_shape)
    score_cnt = np.zeros(img_shape)

    for idx in order:
        shear = cands[idx]
        _check_shear(field, shear)
        s1 = np.zeros(img_shape)
        s2 = np.zeros(img_shape)
        cnt = np.zeros(img_shape)
        for iu, iv, du, dv in _view_offsets(cfg):
            a, ok = _shift_bilinear(field.albedo[iu, iv],
                                    field.valid[iu, iv],
                                    du * shear.slope, dv * shear.slope)
            a = np.where(ok, a, 0.0)
            s1 += a
            s2 += a * a
            cnt += ok
        enough = cnt >= 2
        mean = s1 / np.maximum(cnt, 1)
        var = np.maximum(s2 / np.maximum(cnt, 1) - mean * mean, 0.0)
        score, has = _box_mean(var, enough, radius)
        usable = enough & has
        score = np.where(usable, score, np.inf)

        score_sum += np.where(usable, score, 0.0)
        score_cnt += usable
        better = score < best_score  # strict: earlier (nearer) wins ties
        best_depth = np.where(better, depths[idx], best_depth)
        best_valid |= usable
        best_score = np.where(better, score, best_score)

    mean_score = score_sum / np.maximum(score_cnt, 1)
    ratio_ok = best_valid & (mean_score > 0)
    confidence = np.zeros(img_shape)
    confidence[ratio_ok] = 1.0 - best_score[ratio_ok] / mean_score[ratio_ok]
    confidence = np.clip(confidence, 0.0, 1.0)

    u0 = (cfg.nu - 1) // 2
    v0 = (cfg.nv - 1) // 2
    dmap = DepthMap(depth=np.where(best_valid, best_depth, 0.0),
                    albedo=field.albedo[u0, v0],
                    valid=best_valid, wrapped=False)
    return CorrespondenceResult(depth_map=dmap, confidence=confidence)
