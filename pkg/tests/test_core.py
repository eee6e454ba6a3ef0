import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from depthfield import (CameraArrayConfig, DepthField, DepthMap,
                        PhaseOffsets, QuadratureStack, depth_to_phase,
                        phase_to_depth, wrap_phase)
from depthfield.core import SPEED_OF_LIGHT


def test_phase_to_depth_pi_30mhz():
    cfg = CameraArrayConfig(f_mod=30e6, c=3e8)
    assert phase_to_depth(math.pi, cfg) == pytest.approx(2.5, abs=0)
    cfg_codata = CameraArrayConfig(f_mod=30e6)
    assert phase_to_depth(math.pi, cfg_codata) == pytest.approx(2.4983,
                                                                abs=5e-5)


def test_phase_to_depth_edge_values():
    cfg = CameraArrayConfig(f_mod=30e6)
    assert phase_to_depth(0.0, cfg) == 0.0
    assert phase_to_depth(2 * math.pi, cfg) == pytest.approx(
        cfg.unambiguous_range(), rel=1e-15)
    assert phase_to_depth(2 * math.pi, cfg) == pytest.approx(4.9965, abs=5e-5)


def test_depth_to_phase_trivial():
    cfg = CameraArrayConfig(f_mod=30e6, c=3e8)
    assert depth_to_phase(2.5, cfg) == pytest.approx(math.pi, rel=1e-15)
    assert depth_to_phase(0.0, cfg) == 0.0
    assert depth_to_phase(cfg.unambiguous_range(), cfg) == pytest.approx(
        2 * math.pi, rel=1e-15)


def test_depth_to_phase_rejects_negative():
    cfg = CameraArrayConfig()
    with pytest.raises(ValueError):
        depth_to_phase(-0.1, cfg)
    with pytest.raises(ValueError):
        depth_to_phase(np.array([1.0, -2.0]), cfg)


@given(st.floats(min_value=1e-30, max_value=100.0))
def test_phase_depth_round_trip(phi):
    cfg = CameraArrayConfig(f_mod=30e6)
    back = depth_to_phase(phase_to_depth(phi, cfg), cfg)
    assert back == pytest.approx(phi, rel=1e-12)


@pytest.mark.parametrize("phi,expected", [
    (3 * math.pi, math.pi),
    (-math.pi / 2, 3 * math.pi / 2),
    (0.1, 0.1),
])
def test_wrap_phase_values(phi, expected):
    assert wrap_phase(phi) == pytest.approx(expected, abs=1e-12)


@given(st.floats(min_value=-50.0, max_value=50.0),
       st.integers(min_value=-5, max_value=5))
@settings(max_examples=200)
def test_wrap_phase_periodicity(phi, k):
    a = wrap_phase(phi + 2 * math.pi * k)
    b = wrap_phase(phi)
    delta = abs(float(a) - float(b))
    assert min(delta, 2 * math.pi - delta) < 1e-9
    assert 0.0 <= a < 2 * math.pi


def test_wrap_phase_tiny_negative_folds_to_zero():
    assert wrap_phase(-1e-20) == 0.0


def test_phase_offsets_default_and_validation():
    off = PhaseOffsets()
    assert off.values == (0.0, math.pi / 2, math.pi, 3 * math.pi / 2)
    with pytest.raises(ValueError):
        PhaseOffsets(values=(0.0, 1.0, 2.0))
    with pytest.raises(ValueError):
        PhaseOffsets(values=(0.0, math.pi, math.pi / 2, 3 * math.pi / 2))
    with pytest.raises(ValueError):
        PhaseOffsets(values=(0.0, math.pi / 2 + 1e-6, math.pi,
                             3 * math.pi / 2))


def test_config_validation():
    assert CameraArrayConfig().c == SPEED_OF_LIGHT
    with pytest.raises(ValueError):
        CameraArrayConfig(nu=0)
    with pytest.raises(ValueError):
        CameraArrayConfig(baseline_u=0.0)
    with pytest.raises(ValueError):
        CameraArrayConfig(f_mod=-1.0)
    assert CameraArrayConfig(f_mod=30e6).unambiguous_range() > 0


def test_depth_field_invariants(cfg_tiny):
    shape = cfg_tiny.grid_shape
    albedo = np.ones(shape)
    phase = np.full(shape, 1.5)
    valid = np.ones(shape, dtype=bool)
    valid[0, 0, 0, 0] = False
    f = DepthField(config=cfg_tiny, albedo=albedo, phase=phase, valid=valid)
    assert f.phase[0, 0, 0, 0] == 0.0  # sentinel enforced
    assert f.phase[1, 1, 1, 1] == 1.5
    assert not f.albedo.flags.writeable
    with pytest.raises(ValueError):
        DepthField(config=cfg_tiny, albedo=-albedo, phase=phase, valid=valid)
    with pytest.raises(ValueError):
        DepthField(config=cfg_tiny, albedo=albedo[:-1], phase=phase,
                   valid=valid)


def test_quadrature_stack_needs_four_frames(cfg_tiny):
    good = np.zeros((4,) + cfg_tiny.grid_shape)
    QuadratureStack(config=cfg_tiny, frames=good)
    with pytest.raises(ValueError):
        QuadratureStack(config=cfg_tiny,
                        frames=np.zeros((3,) + cfg_tiny.grid_shape))


def test_depth_map_invariants():
    depth = np.ones((4, 3))
    ok = np.ones((4, 3), dtype=bool)
    DepthMap(depth=depth, albedo=depth, valid=ok)
    bad = depth.copy()
    bad[0, 0] = -1.0
    with pytest.raises(ValueError):
        DepthMap(depth=bad, albedo=depth, valid=ok)
    # negative depth at an invalid pixel is tolerated
    ok2 = ok.copy()
    ok2[0, 0] = False
    DepthMap(depth=bad, albedo=depth, valid=ok2)


def test_view_accessor_bounds(cfg_tiny):
    f = DepthField(config=cfg_tiny,
                   albedo=np.ones(cfg_tiny.grid_shape),
                   phase=np.zeros(cfg_tiny.grid_shape),
                   valid=np.ones(cfg_tiny.grid_shape, dtype=bool))
    f.view(1, 1)
    with pytest.raises(ValueError):
        f.view(2, 0)
