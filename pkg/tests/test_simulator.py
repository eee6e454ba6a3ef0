import math

import numpy as np
import pytest

from depthfield import (CameraArrayConfig, DepthField, invert_quadrature,
                        phase_distance, quadrature_from_field,
                        render_ground_truth, render_quadrature, to_depth_map,
                        wrap_phase)
from depthfield.demos import random_scene, _fov_center
from depthfield.scenes import (CheckerTexture, ConstantTexture, FrontoRect,
                               Plane, Scene, SceneError, Sphere)
from depthfield.simulator import NoiseModel


def _full_plane_scene(depth, albedo=1.0):
    return Scene(objects=(Plane(point=(0.0, 0.0, depth),
                                normal=(0.0, 0.0, -1.0),
                                texture=ConstantTexture(albedo)),))


def test_constant_plane_gives_uniform_phase(cfg_small):
    # plane at 2.5 m, 30 MHz, c=3e8: every valid phase is exactly pi
    field = render_ground_truth(_full_plane_scene(2.5), cfg_small)
    assert field.valid.all()
    assert np.allclose(field.phase, math.pi, atol=1e-12)
    assert np.allclose(field.albedo, 1.0)
    assert not field.wrapped


def test_misses_are_invalid_with_sentinel(cfg_small):
    xc, yc = _fov_center(cfg_small)
    scene = Scene(objects=(FrontoRect(center=(xc, yc, 2.0), size=(0.1, 0.1),
                                      texture=ConstantTexture(0.8)),))
    field = render_ground_truth(scene, cfg_small)
    assert field.valid.any() and not field.valid.all()
    assert np.all(field.phase[~field.valid] == 0.0)
    assert np.all(field.albedo[~field.valid] == 0.0)


def test_occluder_edge_matches_pinhole_projection():
    """Analytic oracle: the occluder edge column in view iu is
    floor(cx - (X_e - iu*b) * f / (d * pitch)); corner views checked by
    the hand formula."""
    cfg = CameraArrayConfig(nu=3, nv=3, nx=64, ny=48, baseline_u=0.02,
                            baseline_v=0.02, focal_length=0.02,
                            pixel_pitch=1e-4, c=3e8)
    d_occ = 1.0
    x_edge = 0.0157  # chosen so no projection lands on a pixel center
    occ = FrontoRect(center=(x_edge + 0.5, 0.02, d_occ), size=(1.0, 2.0),
                     texture=ConstantTexture(0.9))
    bg = _full_plane_scene(3.0).objects[0]
    field = render_ground_truth(Scene(objects=(occ, bg)), cfg)

    cx = (cfg.nx - 1) / 2.0
    for iu in (0, 2):
        dmap = to_depth_map(field, (iu, 1))
        near = dmap.depth < 2.0
        observed_last = int(np.max(np.where(near[:, cfg.ny // 2])[0]))
        t_u = cx - (x_edge - iu * cfg.baseline_u) \
            * cfg.focal_length / (d_occ * cfg.pixel_pitch)
        assert observed_last == math.floor(t_u)
    # disparity between the corner views equals b*f/(d*pitch) per step
    slope = cfg.baseline_u * cfg.focal_length / (d_occ * cfg.pixel_pitch)
    d0 = to_depth_map(field, (0, 1)).depth[:, cfg.ny // 2] < 2.0
    d2 = to_depth_map(field, (2, 1)).depth[:, cfg.ny // 2] < 2.0
    shift = int(np.max(np.where(d2)[0])) - int(np.max(np.where(d0)[0]))
    assert abs(shift - 2 * slope) <= 0.5


def test_disparity_law_fractional_slope():
    """Half-integer per-view disparity: edge positions stay within 0.5 px
    of the projection, so two-step displacement is exact."""
    cfg = CameraArrayConfig(nu=3, nv=1, nx=64, ny=8, baseline_u=0.0125,
                            focal_length=0.02, pixel_pitch=1e-4, c=3e8)
    # slope = 0.0125 * 0.02 / (1.0 * 1e-4) = 2.5 px per view step
    occ = FrontoRect(center=(0.5031, 0.0, 1.0), size=(1.0, 2.0),
                     texture=ConstantTexture(0.9))
    scene = Scene(objects=(occ, _full_plane_scene(3.0).objects[0]))
    field = render_ground_truth(scene, cfg)
    edges = []
    for iu in range(3):
        near = to_depth_map(field, (iu, 0)).depth[:, 4] < 2.0
        edges.append(int(np.max(np.where(near)[0])))
    assert edges[2] - edges[0] == 5  # 2 * 2.5 exactly
    assert abs((edges[1] - edges[0]) - 2.5) <= 0.5


@pytest.mark.parametrize("phi,expected", [
    (0.0, (0.5, 0.0, -0.5, 0.0)),
    (math.pi / 2, (0.0, -0.5, 0.0, 0.5)),
])
def test_quadrature_frame_values(cfg_tiny, phi, expected):
    shape = cfg_tiny.grid_shape
    field = DepthField(config=cfg_tiny, albedo=np.ones(shape),
                       phase=np.full(shape, phi),
                       valid=np.ones(shape, dtype=bool))
    stack = quadrature_from_field(field)
    for k, want in enumerate(expected):
        assert np.allclose(stack.frames[k], want, atol=1e-12)


def test_render_invert_round_trip_random_scenes(cfg_small):
    """Forward -> inverse recovers albedo and wrapped phase to 1e-9."""
    for seed in range(3):
        rng = np.random.Generator(np.random.Philox(seed))
        scene = random_scene(cfg_small, rng)
        gt = render_ground_truth(scene, cfg_small)
        rec = invert_quadrature(quadrature_from_field(gt))
        assert np.array_equal(rec.valid, gt.valid)
        sel = gt.valid
        assert np.abs(rec.albedo[sel] - gt.albedo[sel]).max() < 1e-9
        assert phase_distance(rec.phase[sel],
                              wrap_phase(gt.phase[sel])).max() < 1e-9


def test_noise_determinism(cfg_tiny):
    scene = _full_plane_scene(2.0)
    a = render_quadrature(scene, cfg_tiny, NoiseModel(0.01, seed=42))
    b = render_quadrature(scene, cfg_tiny, NoiseModel(0.01, seed=42))
    c = render_quadrature(scene, cfg_tiny, NoiseModel(0.01, seed=43))
    assert np.array_equal(a.frames, b.frames)
    assert not np.array_equal(a.frames, c.frames)


def test_threads_do_not_change_output(cfg_small):
    rng = np.random.Generator(np.random.Philox(5))
    scene = random_scene(cfg_small, rng)
    f1 = render_ground_truth(scene, cfg_small, threads=1)
    f4 = render_ground_truth(scene, cfg_small, threads=4)
    assert np.array_equal(f1.albedo, f4.albedo)
    assert np.array_equal(f1.phase, f4.phase)
    assert np.array_equal(f1.valid, f4.valid)


def test_energy_bound(cfg_small):
    sigma = 0.01
    scene = _full_plane_scene(2.0, albedo=0.8)
    stack = render_quadrature(scene, cfg_small, NoiseModel(sigma, seed=0))
    assert np.abs(stack.frames).max() <= 0.8 / 2 + 5 * sigma


def test_supersampling_smooths_albedo_only(cfg_small):
    xc, yc = _fov_center(cfg_small)
    scene = Scene(objects=(
        FrontoRect(center=(xc, yc, 2.0), size=(0.4, 0.4),
                   texture=CheckerTexture(pitch=0.03,
                                          values=(0.2, 1.0))),))
    plain = render_ground_truth(scene, cfg_small)
    ss = render_ground_truth(scene, cfg_small, supersample=True)
    assert np.array_equal(plain.phase, ss.phase)
    assert np.array_equal(plain.valid, ss.valid)
    sel = plain.valid
    # supersampled albedo has intermediate (averaged) values at edges
    assert np.unique(plain.albedo[sel]).size < np.unique(ss.albedo[sel]).size


def test_sphere_depth_profile(cfg_small):
    xc, yc = _fov_center(cfg_small)
    scene = Scene(objects=(Sphere(center=(xc, yc, 3.0), radius=0.5,
                                  texture=ConstantTexture(1.0)),))
    field = render_ground_truth(scene, cfg_small)
    u0, v0 = 1, 1
    dmap = to_depth_map(field, (u0, v0))
    ix, iy = cfg_small.nx // 2, cfg_small.ny // 2
    # on-axis ray hits the near pole at
    assert dmap.depth[ix, iy] == pytest.approx(2.5, abs=2e-3)
    assert dmap.depth[dmap.valid].min() >= 2.5 - 1e-9
    assert dmap.depth[dmap.valid].max() <= 3.0 + 1e-9


def test_scene_json_round_trip(tmp_path, rng):
    from depthfield.scenes import GradientTexture, RasterTexture

    scene = Scene(objects=(
        FrontoRect(center=(0.0, 0.0, 1.5), size=(0.5, 0.4),
                   texture=CheckerTexture(pitch=0.05, values=(0.3, 0.9))),
        Plane(point=(0.0, 0.0, 4.0), normal=(0.1, 0.0, -1.0),
              texture=GradientTexture(axis="t", start=0.2, stop=0.8,
                                      extent=(-1.0, 1.0))),
        Sphere(center=(0.2, -0.1, 2.5), radius=0.3,
               texture=RasterTexture(values=rng.random((4, 4)),
                                     scale=0.1)),
    ))
    path = tmp_path / "scene.json"
    scene.save(path)
    loaded = Scene.load(path)
    assert len(loaded.objects) == 3
    # same geometry -> same render
    cfg = CameraArrayConfig(nu=2, nv=2, nx=16, ny=12)
    a = render_ground_truth(scene, cfg)
    b = render_ground_truth(loaded, cfg)
    assert np.array_equal(a.phase, b.phase)
    assert np.array_equal(a.albedo, b.albedo)


@pytest.mark.parametrize("bad", [
    {},  # no objects key
    {"objects": [{"type": "wedge"}]},
    {"objects": [{"type": "sphere", "center": [0, 0, 1]}]},  # no radius
    {"objects": [{"type": "rect", "center": [0, 0, 200],
                  "size": [1, 1]}]},  # depth out of band
    {"objects": [{"type": "rect", "center": [0, 0, 1], "size": [1, 1],
                  "texture": {"kind": "plasma"}}]},
])
def test_scene_validation_errors(bad):
    with pytest.raises(SceneError):
        Scene.from_json(bad)


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel(gaussian_sigma=-0.1)
