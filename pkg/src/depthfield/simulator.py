"""Virtual TOF camera array: renders ground-truth fields and raw
quadrature frames for synthetic scenes.

Each view carries its own colocated illumination, so the optical path to a
surface point is twice its z-depth and the per-ray phase is simply
depth_to_phase(z).  One primary ray is cast through each pixel center (an
optional 2x2 supersampling flag refines albedo only).

Noise is drawn from a counter-based Philox stream keyed on the seed and
generated for the whole frame stack at once, so results do not depend on
evaluation order or worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import DepthField, QuadratureStack, QUADRATURE_OFFSETS


@dataclass(frozen=True)
class NoiseModel:
    """Additive zero-mean gaussian noise per raw frame sample."""

    gaussian_sigma: float = 0.0  # sensor units
    seed: int = 0

    def __post_init__(self):
        if self.gaussian_sigma < 0:
            raise ValueError("gaussian_sigma must be >= 0")
        object.__setattr__(self, "seed", int(self.seed))


NO_NOISE = NoiseModel()


def _pixel_dirs(config, offset_x=0.0, offset_y=0.0):
    """Ray direction components (dx, dy) per pixel; dz is 1 by construction.

    The pixel axes are oriented so scene content shifts by +disparity per
    +1 view step (see CameraArrayConfig).
    """
    cx = (config.nx - 1) / 2.0
    cy = (config.ny - 1) / 2.0
    scale = config.pixel_pitch / config.focal_length
    ix = np.arange(config.nx)[:, None]
    iy = np.arange(config.ny)[None, :]
    dx = (cx - (ix + offset_x)) * scale
    dy = (cy - (iy + offset_y)) * scale
    return dx, dy


def view_position(config, iu, iv):
    """World (x, y) position of view (iu, iv) on the array plane."""
    return iu * config.baseline_u, iv * config.baseline_v


def _render_view(scene, config, iu, iv, supersample):
    ox, oy = view_position(config, iu, iv)
    dx, dy = _pixel_dirs(config)
    z, alb, hit = scene.cast(ox, oy, dx, dy)
    if supersample:
        acc = np.zeros_like(alb)
        n_hit = np.zeros_like(alb)
        for sx in (-0.25, 0.25):
            for sy in (-0.25, 0.25):
                sdx, sdy = _pixel_dirs(config, sx, sy)
                _, a_s, h_s = scene.cast(ox, oy, sdx, sdy)
                acc += np.where(h_s, a_s, 0.0)
                n_hit += h_s
        alb = np.where(n_hit > 0, acc / np.maximum(n_hit, 1), alb)
    phase = np.where(hit, z, 0.0) * (4.0 * np.pi * config.f_mod / config.c)
    return np.where(hit, alb, 0.0), phase, hit


def render_ground_truth(scene, config, supersample=False, threads=1):
    """Render the scene into an unwrapped ground-truth DepthField.

    Misses get valid=False with the phase sentinel 0.  Per-view depth maps
    come out of tof.to_depth_map on the result.
    """
    views = [(iu, iv) for iu in range(config.nu) for iv in range(config.nv)]
    albedo = np.zeros(config.grid_shape)
    phase = np.zeros(config.grid_shape)
    valid = np.zeros(config.grid_shape, dtype=bool)

    def run(view):
        return _render_view(scene, config, view[0], view[1], supersample)

    if threads > 1 and len(views) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, views))
    else:
        results = [run(v) for v in views]
    for (iu, iv), (a, p, h) in zip(views, results):
        albedo[iu, iv] = a
        phase[iu, iv] = p
        valid[iu, iv] = h
    return DepthField(config=config, albedo=albedo, phase=phase,
                      valid=valid, wrapped=False)


def quadrature_from_field(field, noise=NO_NOISE):
    """Synthesize the four correlation frames from a depth field.

    Per ray: i_k = (albedo / 2) * cos(offset_k + phase); invalid rays
    contribute zero signal.  Gaussian noise is added to every sample.
    """
    cfg = field.config
    amp = np.where(field.valid, 0.5 * field.albedo, 0.0)
    frames = np.empty((4,) + cfg.grid_shape)
    for k, off in enumerate(QUADRATURE_OFFSETS.values):
        frames[k] = amp * np.cos(off + field.phase)
    if noise.gaussian_sigma > 0:
        rng = np.random.Generator(np.random.Philox(noise.seed))
        frames += rng.normal(0.0, noise.gaussian_sigma, size=frames.shape)
    return QuadratureStack(config=cfg, frames=frames)


def render_quadrature(scene, config, noise=NO_NOISE, supersample=False,
                      threads=1):
    """Render raw sensor frames for the scene (forward model end to end)."""
    field = render_ground_truth(scene, config, supersample=supersample,
                                threads=threads)
    return quadrature_from_field(field, noise)
