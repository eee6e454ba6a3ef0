"""Core container types and phase/depth conversions.

Conventions used throughout the package:

* 4D grids are indexed ``(u, v, x, y)``: two view indices into the camera
  array, then two pixel indices.  Raw sensor stacks add a leading axis for
  the four correlation offsets, ``(k, u, v, x, y)``.
* Phase is in radians.  A grid flagged ``wrapped`` stores values in
  ``[0, 2*pi)``; an unwrapped grid stores full accumulated phase.
* Invalid samples carry phase exactly 0.0 and must never be consumed by
  downstream math; use the boolean mask.
* All containers are immutable after construction (arrays are marked
  read-only), so they can be shared freely across parallel workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

SPEED_OF_LIGHT = 299792458.0  # m/s, CODATA; tests may override with 3e8
TWO_PI = 2.0 * math.pi


class DepthFieldError(Exception):
    """Base for errors raised by this package."""


class DataFormatError(DepthFieldError):
    """Malformed file, header, or on-disk payload."""


class NumericalError(DepthFieldError):
    """A solve failed for numerical reasons (e.g. rank deficiency)."""


def _freeze(arr):
    arr.flags.writeable = False
    return arr


def _as_grid(a, dtype=np.float64):
    out = np.ascontiguousarray(a, dtype=dtype)
    return _freeze(out)


@dataclass(frozen=True)
class PhaseOffsets:
    """The four correlation phase offsets, stored as f_mod * tau in radians."""

    values: tuple = (0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi)

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) != 4:
            raise ValueError("exactly four phase offsets required")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("phase offsets must be strictly increasing")
        canonical = (0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi)
        for got, want in zip(vals, canonical):
            if abs(got - want) > 1e-12:
                raise ValueError(
                    f"offsets must be (0, pi/2, pi, 3pi/2); got {got!r}"
                )
        object.__setattr__(self, "values", vals)

    @property
    def array(self):
        return np.array(self.values)


QUADRATURE_OFFSETS = PhaseOffsets()


@dataclass(frozen=True)
class CameraArrayConfig:
    """Geometry and modulation parameters of the (virtual) TOF camera array.

    Views sit on a regular grid in the z=0 plane: view (iu, iv) at
    (iu*baseline_u, iv*baseline_v, 0), all looking down +z.  The pixel axes
    are oriented so that scene content moves by +disparity pixels per +1
    view step, which keeps refocus slopes positive for positive depths.
    """

    nu: int = 5
    nv: int = 5
    baseline_u: float = 0.0254  # meters between adjacent views along u
    baseline_v: float = 0.0254
    nx: int = 160
    ny: int = 120
    focal_length: float = 0.02  # meters
    pixel_pitch: float = 1e-4  # meters
    f_mod: float = 30e6  # Hz
    c: float = SPEED_OF_LIGHT

    def __post_init__(self):
        for name in ("nu", "nv", "nx", "ny"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {v!r}")
            object.__setattr__(self, name, int(v))
        for name in ("baseline_u", "baseline_v", "focal_length",
                     "pixel_pitch", "f_mod", "c"):
            v = float(getattr(self, name))
            if not (v > 0.0) or not math.isfinite(v):
                raise ValueError(f"{name} must be finite and > 0, got {v!r}")
            object.__setattr__(self, name, v)

    def unambiguous_range(self):
        """Depth period of a single-frequency measurement, c / (2 f_mod)."""
        return self.c / (2.0 * self.f_mod)

    @property
    def view_shape(self):
        return (self.nu, self.nv)

    @property
    def grid_shape(self):
        return (self.nu, self.nv, self.nx, self.ny)

    def with_f_mod(self, f_mod):
        return replace(self, f_mod=float(f_mod))

    def to_dict(self):
        return {
            "nu": self.nu, "nv": self.nv,
            "baseline_u": self.baseline_u, "baseline_v": self.baseline_v,
            "nx": self.nx, "ny": self.ny,
            "focal_length": self.focal_length,
            "pixel_pitch": self.pixel_pitch,
            "f_mod": self.f_mod, "c": self.c,
        }

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in cls.__dataclass_fields__.values()}
        extra = set(d) - known
        if extra:
            raise DataFormatError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)


@dataclass(frozen=True)
class DepthField:
    """Per-ray (albedo, phase) over the full (u, v, x, y) grid."""

    config: CameraArrayConfig
    albedo: np.ndarray  # (nu, nv, nx, ny), dimensionless reflectance >= 0
    phase: np.ndarray  # (nu, nv, nx, ny), radians
    valid: np.ndarray  # (nu, nv, nx, ny), bool
    wrapped: bool = False

    def __post_init__(self):
        shape = self.config.grid_shape
        albedo = _as_grid(self.albedo)
        valid = _as_grid(self.valid, dtype=bool)
        phase = np.ascontiguousarray(self.phase, dtype=np.float64)
        for name, arr in (("albedo", albedo), ("phase", phase),
                          ("valid", valid)):
            if arr.shape != shape:
                raise ValueError(
                    f"{name} shape {arr.shape} != config grid {shape}")
        if np.any(albedo < 0.0):
            raise ValueError("albedo must be >= 0 everywhere")
        phase[~valid] = 0.0  # enforce the invalid-pixel sentinel
        object.__setattr__(self, "albedo", albedo)
        object.__setattr__(self, "phase", _freeze(phase))
        object.__setattr__(self, "valid", valid)
        object.__setattr__(self, "wrapped", bool(self.wrapped))

    @property
    def shape(self):
        return self.albedo.shape

    def view(self, iu, iv):
        """(albedo, phase, valid) slices of one view."""
        nu, nv = self.config.nu, self.config.nv
        if not (0 <= iu < nu and 0 <= iv < nv):
            raise ValueError(f"view ({iu},{iv}) outside {nu}x{nv} grid")
        return self.albedo[iu, iv], self.phase[iu, iv], self.valid[iu, iv]


@dataclass(frozen=True)
class QuadratureStack:
    """Raw correlation frames i(k, u, v, x, y) at the four phase offsets."""

    config: CameraArrayConfig
    frames: np.ndarray  # (4, nu, nv, nx, ny), linear sensor units
    offsets: PhaseOffsets = field(default_factory=PhaseOffsets)

    def __post_init__(self):
        frames = _as_grid(self.frames)
        want = (4,) + self.config.grid_shape
        if frames.shape != want:
            raise ValueError(f"frames shape {frames.shape} != {want}")
        object.__setattr__(self, "frames", frames)


@dataclass(frozen=True)
class DepthMap:
    """Single-view depth/albedo image with a validity mask."""

    depth: np.ndarray  # (nx, ny), meters
    albedo: np.ndarray  # (nx, ny)
    valid: np.ndarray  # (nx, ny), bool
    wrapped: bool = False

    def __post_init__(self):
        depth = _as_grid(self.depth)
        albedo = _as_grid(self.albedo)
        valid = _as_grid(self.valid, dtype=bool)
        if depth.ndim != 2 or albedo.shape != depth.shape \
                or valid.shape != depth.shape:
            raise ValueError("depth/albedo/valid must share a 2D shape")
        if np.any(depth[valid] < 0.0):
            raise ValueError("depth must be >= 0 where valid")
        object.__setattr__(self, "depth", depth)
        object.__setattr__(self, "albedo", albedo)
        object.__setattr__(self, "valid", valid)
        object.__setattr__(self, "wrapped", bool(self.wrapped))

    @property
    def shape(self):
        return self.depth.shape


def phase_to_depth(phase, config):
    """Depth in meters from phase: c * phi / (4 pi f_mod).

    No wrapping is applied; the caller owns wrap semantics.
    """
    return np.asarray(phase) * (config.c / (4.0 * math.pi * config.f_mod))


def depth_to_phase(depth, config):
    """Phase in radians from depth: 4 pi f_mod d / c.  Not wrapped."""
    depth = np.asarray(depth)
    if np.any(depth < 0.0):
        raise ValueError("depth must be >= 0")
    return depth * (4.0 * math.pi * config.f_mod / config.c)


def wrap_phase(phase):
    """Wrap phase to [0, 2*pi).  Exact 2*pi results from tiny negative
    inputs are folded back to 0."""
    out = np.mod(np.asarray(phase, dtype=np.float64), TWO_PI)
    return np.where(out >= TWO_PI, 0.0, out)


def phase_distance(a, b):
    """Shortest angular distance |a - b| on the circle, in [0, pi]."""
    d = np.mod(np.asarray(a, dtype=np.float64) - np.asarray(b), TWO_PI)
    return np.minimum(d, TWO_PI - d)
