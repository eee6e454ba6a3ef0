"""End-to-end demo pipelines on canonical synthetic scenes.

Each demo builds a scene, runs the full capture/recovery chain, writes its
artifacts (DFZ files, PNGs, CSVs) into an output directory, and returns a
manifest dict (also written as manifest.json) listing artifacts and the
headline metric values.  Everything is seeded; reruns are byte-identical.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .core import (CameraArrayConfig, QuadratureStack, phase_distance,
                   phase_to_depth, wrap_phase)
from .dfz import (depth_map_to_field, export_csv, export_png, write_dfz)
from .lightfield import (Shear, candidates_for_depth_range,
                         depth_from_correspondence, refocus)
from .multiplex import (forward_multiplex, invert_multiplex,
                        random_binary_matrix, write_matrix)
from .occlusion import (cluster_depths, depth_histogram,
                        refocus_without_foreground, write_histogram_csv)
from .scenes import (CheckerTexture, ConstantTexture, FrontoRect, Plane,
                     RasterTexture, Scene, multiscale_raster)
from .simulator import (NoiseModel, quadrature_from_field,
                        render_ground_truth, view_position)
from .tof import invert_quadrature, simulate_wrapping, to_depth_map
from .unwrap import CalibrationLine, unwrap_per_pixel, unwrap_with_line


def default_config(**overrides):
    return CameraArrayConfig(**overrides)


def _center_view(config):
    return (config.nu - 1) // 2, (config.nv - 1) // 2


def _fov_center(config):
    """World (x, y) of the central view axis."""
    u0, v0 = _center_view(config)
    return view_position(config, u0, v0)


def _half_fov(config):
    """Half field of view (radians-ish slope units) per axis."""
    ax = (config.nx - 1) / 2.0 * config.pixel_pitch / config.focal_length
    ay = (config.ny - 1) / 2.0 * config.pixel_pitch / config.focal_length
    return ax, ay


def tilted_plane(config, depth_at_left_px, depth_at_right_px, texture):
    """Plane whose center-view depth ramps linearly in 1/z across the
    x pixel axis, from `depth_at_left_px` at ix=0 to `depth_at_right_px`
    at ix=nx-1."""
    ax, _ = _half_fov(config)
    xc, _ = _fov_center(config)
    # pixel ix=0 has ray slope a=+ax, ix=nx-1 has a=-ax (flipped axis)
    a1, d1 = +ax, float(depth_at_left_px)
    a2, d2 = -ax, float(depth_at_right_px)
    beta = (1.0 / d1 - 1.0 / d2) / (a2 - a1)
    z0 = 1.0 / (1.0 / d1 + beta * a1)
    g = beta * z0
    return Plane(point=(xc, 0.0, z0), normal=(g, 0.0, -1.0), texture=texture)


def two_plane_scene(config, seed=0, fg_depth=1.0, bg_center=3.0,
                    bg_spread=0.2):
    """Foreground rectangle partially occluding a gently tilted, textured
    background plane (the refocus benchmark scene)."""
    rng = np.random.Generator(np.random.Philox(seed))
    bg_tex = RasterTexture(values=multiscale_raster(rng, lo=0.3),
                           scale=0.05)
    fg_tex = RasterTexture(values=multiscale_raster(rng, lo=0.3),
                           scale=0.02)
    xc, yc = _fov_center(config)
    ax, ay = _half_fov(config)
    bg = tilted_plane(config, bg_center - bg_spread, bg_center + bg_spread,
                      bg_tex)
    # occluder covers roughly the left 45% of the center view
    fg = FrontoRect(center=(xc + 0.7 * ax * fg_depth, yc, fg_depth),
                    size=(1.2 * ax * fg_depth, 4 * ay * fg_depth),
                    texture=fg_tex)
    return Scene(objects=(fg, bg))


def ramp_scene(config, seed=0, dmin=0.5, dmax=6.0):
    """Single textured plane ramping from dmin to dmax across the image."""
    rng = np.random.Generator(np.random.Philox(seed))
    tex = RasterTexture(values=multiscale_raster(rng, shape=(96, 96),
                                                 octaves=(2, 8, 24, 48),
                                                 lo=0.25),
                        scale=0.035)
    return Scene(objects=(tilted_plane(config, dmax, dmin, tex),))


def plant_scene(config, seed=0, n_leaves=42, fg_depth=1.0, bg_depth=3.0):
    """Scattered small occluders ("leaves") in front of a textured
    backdrop (the see-through-foreground benchmark scene)."""
    rng = np.random.Generator(np.random.Philox(seed))
    xc, yc = _fov_center(config)
    ax, ay = _half_fov(config)
    bg_tex = RasterTexture(values=multiscale_raster(rng, lo=0.35),
                           scale=0.06)
    objects = [FrontoRect(center=(xc, yc, bg_depth),
                          size=(2.6 * ax * bg_depth, 2.6 * ay * bg_depth),
                          texture=bg_tex)]
    span_x = 2.0 * ax * fg_depth
    span_y = 2.0 * ay * fg_depth
    for _ in range(n_leaves):
        w = rng.uniform(0.03, 0.07)
        h = rng.uniform(0.03, 0.07)
        px = xc + (rng.random() - 0.5) * span_x
        py = yc + (rng.random() - 0.5) * span_y
        alb = rng.uniform(0.4, 1.0)
        objects.append(FrontoRect(center=(px, py, fg_depth), size=(w, h),
                                  texture=ConstantTexture(alb)))
    return Scene(objects=tuple(objects))


def random_scene(config, rng):
    """Random backdrop plus 1-3 floating primitives, textured; every ray
    hits something.  Used for round-trip exercises."""
    from .scenes import Sphere

    xc, yc = _fov_center(config)
    ax, ay = _half_fov(config)
    back_d = rng.uniform(3.0, 4.5)
    objects = [FrontoRect(
        center=(xc, yc, back_d),
        size=(3.0 * ax * back_d, 3.0 * ay * back_d),
        texture=_random_texture(rng))]
    for _ in range(rng.integers(1, 4)):
        d = rng.uniform(0.8, 2.8)
        px = xc + (rng.random() - 0.5) * 1.2 * ax * d
        py = yc + (rng.random() - 0.5) * 1.2 * ay * d
        if rng.random() < 0.5:
            objects.append(FrontoRect(
                center=(px, py, d),
                size=(rng.uniform(0.1, 0.5) * ax * d,
                      rng.uniform(0.1, 0.5) * ay * d),
                texture=_random_texture(rng)))
        else:
            objects.append(Sphere(
                center=(px, py, d + 0.3),
                radius=rng.uniform(0.05, 0.25),
                texture=_random_texture(rng)))
    return Scene(objects=tuple(objects))


def _random_texture(rng):
    kind = rng.integers(0, 4)
    if kind == 0:
        return ConstantTexture(rng.uniform(0.1, 1.0))
    if kind == 1:
        return CheckerTexture(pitch=rng.uniform(0.02, 0.2),
                              values=(rng.uniform(0.1, 0.5),
                                      rng.uniform(0.5, 1.0)))
    if kind == 2:
        from .scenes import GradientTexture
        return GradientTexture(axis="s" if rng.random() < 0.5 else "t",
                               start=rng.uniform(0.1, 0.4),
                               stop=rng.uniform(0.5, 1.0),
                               extent=(0.0, rng.uniform(0.5, 2.0)))
    return RasterTexture(values=multiscale_raster(rng, lo=0.15),
                         scale=rng.uniform(0.02, 0.08))


def background_region(truth_map, boundary_margin, depth_split=2.0):
    """Background pixels (truth deeper than depth_split) eroded away from
    any foreground/invalid pixel by `boundary_margin` pixels."""
    from .lightfield import _box_sum_1d

    bg = truth_map.valid & (truth_map.depth > depth_split)
    notbg = (~bg).astype(np.float64)
    for axis in (0, 1):
        notbg = _box_sum_1d(notbg, boundary_margin, axis)
    return bg & (notbg == 0)


def _write_manifest(out_dir, manifest):
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def _save_images(out_dir, prefix, result):
    """PNG + CSV exports for a RefocusResult."""
    arts = []
    for channel in ("albedo", "depth"):
        png = os.path.join(out_dir, f"{prefix}_{channel}.png")
        export_png(getattr(result, channel), png, valid=result.valid)
        arts += [f"{prefix}_{channel}.png", f"{prefix}_{channel}.png.json"]
    csv = os.path.join(out_dir, f"{prefix}_depth.csv")
    export_csv(result.depth, csv, valid=result.valid)
    arts.append(f"{prefix}_depth.csv")
    return arts


def demo_refocus(out_dir, seed=0, config=None, threads=1):
    """Refocus the two-plane scene at the background and at the wrong
    plane; report background-region depth RMSE for both."""
    os.makedirs(out_dir, exist_ok=True)
    cfg = config or default_config()
    scene = two_plane_scene(cfg, seed=seed)
    gt = render_ground_truth(scene, cfg, threads=threads)
    field = invert_quadrature(quadrature_from_field(gt))
    u0, v0 = _center_view(cfg)
    truth = to_depth_map(gt, (u0, v0))

    s_bg = Shear.from_depth(3.0, cfg)
    s_fg = Shear.from_depth(1.0, cfg)
    margin = int(np.ceil(abs(s_fg.slope - s_bg.slope)
                         * max(cfg.nu - 1, cfg.nv - 1) / 2.0)) + 3
    region = background_region(truth, margin)

    artifacts = []
    metrics = {}
    for tag, shear in (("background", s_bg), ("wrong_plane", s_fg)):
        res = refocus(field, shear, mode="phasor")
        sel = region & res.valid
        err = res.depth[sel] - truth.depth[sel]
        metrics[f"rmse_{tag}_m"] = float(np.sqrt(np.mean(err ** 2)))
        artifacts += _save_images(out_dir, f"refocus_{tag}", res)
    metrics["rmse_ratio"] = (metrics["rmse_wrong_plane_m"]
                             / metrics["rmse_background_m"])

    scene.save(os.path.join(out_dir, "scene.json"))
    write_dfz(gt, os.path.join(out_dir, "ground_truth.dfz"))
    write_dfz(field, os.path.join(out_dir, "field.dfz"))
    artifacts += ["scene.json", "ground_truth.dfz", "field.dfz"]
    manifest = {"command": "demo refocus", "seed": seed,
                "artifacts": sorted(artifacts), "metrics": metrics}
    _write_manifest(out_dir, manifest)
    return manifest


def demo_unwrap(out_dir, seed=0, config=None, threads=1, candidates=128):
    """Ramp scene with doubled-frequency wrapping, unwrapped via the
    calibration-line method and the per-pixel baseline."""
    os.makedirs(out_dir, exist_ok=True)
    cfg = config or default_config()
    scene = ramp_scene(cfg, seed=seed)
    gt = render_ground_truth(scene, cfg, threads=threads)
    field = invert_quadrature(quadrature_from_field(gt))
    wrapped_field = simulate_wrapping(field, 2)
    u0, v0 = _center_view(cfg)
    truth = to_depth_map(gt, (u0, v0))
    wmap = to_depth_map(wrapped_field, (u0, v0))

    cands = candidates_for_depth_range(cfg, 0.4, 6.5, candidates)
    corr = depth_from_correspondence(field, cands, window=5).depth_map

    line = CalibrationLine.from_endpoints(0, cfg.ny // 2,
                                          cfg.nx - 1, cfg.ny // 2)
    rng_m = wrapped_field.config.unambiguous_range()
    res_line = unwrap_with_line(wmap, corr, line, rng_m, median_radius=2)
    res_px = unwrap_per_pixel(wmap, corr, rng_m)

    span = truth.depth[truth.valid].max() - truth.depth[truth.valid].min()
    metrics = {"depth_span_m": float(span),
               "unambiguous_range_m": float(rng_m),
               "wrap_events_on_line": res_line.n_wrap_events}
    for tag, res in (("line", res_line), ("perpixel", res_px)):
        sel = res.depth_map.valid & truth.valid
        err = np.abs(res.depth_map.depth[sel] - truth.depth[sel])
        metrics[f"{tag}_fraction_within_2pct"] = float(
            np.mean(err < 0.02 * span))
        metrics[f"{tag}_rmse_m"] = float(np.sqrt(np.mean(err ** 2)))

    artifacts = ["scene.json", "wrapped.dfz", "corr.dfz", "unwrapped.dfz"]
    scene.save(os.path.join(out_dir, "scene.json"))
    write_dfz(depth_map_to_field(wmap, cfg),
              os.path.join(out_dir, "wrapped.dfz"))
    write_dfz(depth_map_to_field(corr, cfg), os.path.join(out_dir, "corr.dfz"))
    write_dfz(depth_map_to_field(res_line.depth_map, cfg),
              os.path.join(out_dir, "unwrapped.dfz"))
    for tag, dmap in (("truth", truth), ("wrapped", wmap), ("corr", corr),
                      ("unwrapped", res_line.depth_map)):
        png = os.path.join(out_dir, f"{tag}_depth.png")
        export_png(dmap.depth, png, valid=dmap.valid)
        artifacts += [f"{tag}_depth.png", f"{tag}_depth.png.json"]
    manifest = {"command": "demo unwrap", "seed": seed,
                "artifacts": sorted(artifacts), "metrics": metrics}
    _write_manifest(out_dir, manifest)
    return manifest


def demo_occlusion(out_dir, seed=0, config=None, threads=1, sigma=0.005):
    """Plant scene: depth histogram, k-means foreground split, and
    masked vs unmasked refocus on the backdrop, with a scan-line CSV."""
    os.makedirs(out_dir, exist_ok=True)
    cfg = config or default_config()
    scene = plant_scene(cfg, seed=seed)
    gt = render_ground_truth(scene, cfg, threads=threads)
    stack = quadrature_from_field(gt, NoiseModel(gaussian_sigma=sigma,
                                                 seed=seed))
    field = invert_quadrature(stack, validity_threshold=0.05)
    u0, v0 = _center_view(cfg)
    truth = to_depth_map(gt, (u0, v0))

    counts, edges = depth_histogram(field, bins=100, allow_wrapped=True)
    hist_csv = os.path.join(out_dir, "histogram.csv")
    write_histogram_csv(counts, edges, hist_csv)

    clusters = cluster_depths(field, k=2, seed=seed, allow_wrapped=True)
    s_bg = Shear.from_depth(3.0, cfg)
    masked = refocus_without_foreground(field, clusters, s_bg)
    unmasked = refocus(field, s_bg, mode="phasor")

    region = truth.valid & (truth.depth > 2.0)
    metrics = {"centroids_m": [float(c) for c in clusters.centroids],
               "fully_occluded_pixels": masked.n_fully_masked}
    for tag, res in (("masked", masked), ("unmasked", unmasked)):
        ok = region & res.valid
        err = np.abs(np.where(ok, res.depth - truth.depth, np.inf))
        within = (err < 0.01) & region
        metrics[f"{tag}_fraction_within_1cm"] = float(
            within[region].mean())

    row = cfg.ny // 2
    xs = np.arange(cfg.nx)
    scan = np.column_stack([
        xs, truth.depth[:, row],
        np.where(unmasked.valid[:, row], unmasked.depth[:, row], np.nan),
        np.where(masked.valid[:, row], masked.depth[:, row], np.nan)])
    scan_csv = os.path.join(out_dir, "scanline.csv")
    np.savetxt(scan_csv, scan, fmt="%.9g", delimiter=",",
               header="x,truth_m,unmasked_m,masked_m", comments="")

    artifacts = ["scene.json", "field.dfz", "histogram.csv", "scanline.csv"]
    scene.save(os.path.join(out_dir, "scene.json"))
    write_dfz(field, os.path.join(out_dir, "field.dfz"))
    artifacts += _save_images(out_dir, "occlusion_masked", masked)
    artifacts += _save_images(out_dir, "occlusion_unmasked", unmasked)
    manifest = {"command": "demo occlusion", "seed": seed,
                "artifacts": sorted(artifacts), "metrics": metrics}
    _write_manifest(out_dir, manifest)
    return manifest


def demo_multiplex(out_dir, seed=0, config=None, threads=1):
    """Multiplexed capture through a random binary mask and its inversion,
    noiseless and with noise + regularization."""
    os.makedirs(out_dir, exist_ok=True)
    cfg = config or default_config(nx=48, ny=36)
    rng = np.random.Generator(np.random.Philox(seed))
    scene = random_scene(cfg, rng)
    gt = render_ground_truth(scene, cfg, threads=threads)
    m = random_binary_matrix(cfg.nu, cfg.nv, seed=seed, max_cond=50.0)

    stack = forward_multiplex(gt, m)
    clean = invert_multiplex(stack, m, lam=0.0)
    sel = gt.valid & clean.field.valid
    metrics = {
        "condition_number": clean.condition_number,
        "noiseless_max_albedo_err": float(
            np.abs(clean.field.albedo[sel] - gt.albedo[sel]).max()),
        "noiseless_max_phase_err": float(phase_distance(
            clean.field.phase[sel], wrap_phase(gt.phase)[sel]).max()),
    }

    sigma, lam = 1e-3, 1e-3
    noisy_frames = stack.frames + np.random.Generator(
        np.random.Philox(seed + 1)).normal(0, sigma, stack.frames.shape)
    noisy = QuadratureStack(config=stack.config, frames=noisy_frames)
    reg = invert_multiplex(noisy, m, lam=lam)
    sel = gt.valid & reg.field.valid
    metrics["noisy_rms_albedo_err"] = float(np.sqrt(np.mean(
        (reg.field.albedo[sel] - gt.albedo[sel]) ** 2)))
    metrics["noisy_sigma"] = sigma
    metrics["lambda"] = lam

    artifacts = ["scene.json", "matrix.dmx", "multiplexed.dfz",
                 "recovered.dfz"]
    scene.save(os.path.join(out_dir, "scene.json"))
    write_matrix(m, os.path.join(out_dir, "matrix.dmx"))
    write_dfz(stack, os.path.join(out_dir, "multiplexed.dfz"))
    write_dfz(reg.field, os.path.join(out_dir, "recovered.dfz"))
    u0, v0 = _center_view(cfg)
    png = os.path.join(out_dir, "recovered_depth.png")
    export_png(phase_to_depth(reg.field.phase[u0, v0], cfg), png,
               valid=reg.field.valid[u0, v0])
    artifacts += ["recovered_depth.png", "recovered_depth.png.json"]
    manifest = {"command": "demo multiplex", "seed": seed,
                "artifacts": sorted(artifacts), "metrics": metrics}
    _write_manifest(out_dir, manifest)
    return manifest


DEMOS = {"refocus": demo_refocus, "unwrap": demo_unwrap,
         "occlusion": demo_occlusion, "multiplex": demo_multiplex}
