import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from depthfield import (CalibrationLine, DepthMap, median_filter_map,
                        unwrap_per_pixel, unwrap_with_line)

RANGE = 2.5  # unambiguous range used throughout (60 MHz at c=3e8)


def _maps_from_truth(truth, corr_err=None, valid=None):
    """Build (wrapped, corr) DepthMaps from a ground-truth depth array."""
    truth = np.asarray(truth, dtype=np.float64)
    if valid is None:
        valid = np.ones(truth.shape, dtype=bool)
    wrapped = DepthMap(depth=np.where(valid, np.mod(truth, RANGE), 0.0),
                       albedo=np.ones_like(truth), valid=valid, wrapped=True)
    corr_depth = truth if corr_err is None else truth + corr_err
    corr = DepthMap(depth=np.where(valid, np.maximum(corr_depth, 0.0), 0.0),
                    albedo=np.ones_like(truth), valid=valid, wrapped=False)
    return wrapped, corr


def _ramp(nx=80, ny=24, lo=0.5, hi=6.0):
    col = np.linspace(lo, hi, nx)
    return np.repeat(col[:, None], ny, axis=1)


def test_no_wrapping_is_identity():
    truth = _ramp(hi=2.0)  # shallower than the range
    wrapped, corr = _maps_from_truth(truth)
    line = CalibrationLine.from_endpoints(0, 12, 79, 12)
    res = unwrap_with_line(wrapped, corr, line, RANGE)
    assert np.array_equal(res.wrap_count, np.zeros_like(res.wrap_count))
    assert np.allclose(res.depth_map.depth, wrapped.depth, atol=0)
    assert res.n_wrap_events == 0
    assert not res.depth_map.wrapped


def test_line_method_recovers_ramp_with_noisy_corr():
    truth = _ramp()
    rng = np.random.Generator(np.random.Philox(0))
    corr_err = 0.25 * RANGE * np.sin(
        np.linspace(0, 7, truth.shape[0]))[:, None] \
        + rng.uniform(-0.05, 0.05, truth.shape)
    wrapped, corr = _maps_from_truth(truth, corr_err)
    line = CalibrationLine.from_endpoints(0, 12, 79, 12)
    res = unwrap_with_line(wrapped, corr, line, RANGE, median_radius=2)
    n_true = np.floor(truth / RANGE).astype(int)
    assert res.n_wrap_events == 2  # crossings at 2.5 m and 5.0 m
    match = res.wrap_count == n_true
    assert match.mean() > 0.97  # quantized corr may flip edge pixels
    err = np.abs(res.depth_map.depth - truth)
    assert np.mean(err < 0.02 * 5.5) > 0.95


def test_line_method_wrap_counts_exact_with_good_corr():
    truth = _ramp()
    wrapped, corr = _maps_from_truth(truth, corr_err=0.1)  # constant bias
    line = CalibrationLine.from_endpoints(0, 0, 79, 0)
    res = unwrap_with_line(wrapped, corr, line, RANGE, median_radius=0)
    n_true = np.floor(truth / RANGE).astype(int)
    assert np.array_equal(res.wrap_count, n_true)
    assert np.allclose(res.depth_map.depth, truth, atol=1e-9)


def test_output_congruent_with_input_mod_range():
    truth = _ramp()
    wrapped, corr = _maps_from_truth(truth, corr_err=0.05)
    line = CalibrationLine.from_endpoints(0, 5, 79, 5)
    res = unwrap_with_line(wrapped, corr, line, RANGE)
    resid = res.depth_map.depth - wrapped.depth
    n = np.rint(resid / RANGE)
    assert np.abs(resid - n * RANGE).max() < 1e-9


def test_monotone_along_line_when_corr_monotone():
    truth = _ramp()
    wrapped, corr = _maps_from_truth(truth)
    line = CalibrationLine.from_endpoints(0, 12, 79, 12)
    res = unwrap_with_line(wrapped, corr, line, RANGE)
    along = res.depth_map.depth[line.points[:, 0], line.points[:, 1]]
    assert np.all(np.diff(along) >= -1e-12)


def test_uncovered_region_flagged_low_confidence():
    """A patch whose depth never appears on the calibration line keeps a
    borrowed wrap count but is flagged (checked inside the patch, past the
    median filter's reach)."""
    truth = _ramp(hi=4.0)
    truth[60:70, 2:8] = 5.7  # far patch, beyond anything on the line
    wrapped, corr = _maps_from_truth(truth)
    line = CalibrationLine.from_endpoints(0, 16, 79, 16)
    res = unwrap_with_line(wrapped, corr, line, RANGE, median_radius=2)
    core = np.zeros(truth.shape, dtype=bool)
    core[62:68, 4:6] = True  # patch eroded by the filter radius
    halo = np.zeros(truth.shape, dtype=bool)
    halo[58:72, 0:10] = True  # patch dilated by the filter radius
    assert res.low_confidence[core].all()
    assert not res.low_confidence[~halo].any()
    # the rest of the scene is still unwrapped correctly
    assert np.allclose(res.depth_map.depth[~halo], truth[~halo], atol=1e-9)


def test_per_pixel_exact_with_ground_truth_corr():
    truth = _ramp()
    wrapped, corr = _maps_from_truth(truth)
    res = unwrap_per_pixel(wrapped, corr, RANGE)
    assert np.allclose(res.depth_map.depth, truth, atol=1e-12)
    assert np.array_equal(res.wrap_count,
                          np.floor(truth / RANGE).astype(int))


@given(st.integers(min_value=0, max_value=10 ** 6))
@settings(max_examples=30, deadline=None)
def test_per_pixel_exact_counts_with_bounded_corr_noise(seed):
    """Interval oracle: any corr error below range/2 leaves every wrap
    count intact."""
    rng = np.random.Generator(np.random.Philox(seed))
    truth = rng.uniform(0.1, 9.5, (12, 9))
    margin = np.minimum(np.mod(truth, RANGE),
                        RANGE - np.mod(truth, RANGE))
    err = rng.uniform(-0.49, 0.49, truth.shape) * RANGE
    # keep each pixel's corr strictly inside its own wrap interval
    err = np.clip(err, -(RANGE / 2 - 1e-6), RANGE / 2 - 1e-6)
    wrapped, corr = _maps_from_truth(truth, corr_err=err)
    res = unwrap_per_pixel(wrapped, corr, RANGE)
    n_true = np.floor(truth / RANGE).astype(int)
    assert np.array_equal(res.wrap_count, n_true)
    assert np.allclose(res.depth_map.depth, truth, atol=1e-9)


def test_per_pixel_off_by_one_beyond_half_range():
    truth = np.full((4, 4), 3.0)
    err = np.zeros_like(truth)
    err[1, 1] = 0.6 * RANGE  # past the midpoint -> off by one wrap
    wrapped, corr = _maps_from_truth(truth, corr_err=err)
    res = unwrap_per_pixel(wrapped, corr, RANGE)
    n_true = int(3.0 // RANGE)
    assert res.wrap_count[0, 0] == n_true
    assert res.wrap_count[1, 1] == n_true + 1
    assert res.depth_map.depth[1, 1] == pytest.approx(3.0 + RANGE)


def test_flag_validation():
    truth = _ramp(hi=2.0)
    wrapped, corr = _maps_from_truth(truth)
    with pytest.raises(ValueError):
        unwrap_per_pixel(corr, corr, RANGE)  # first map not wrapped
    with pytest.raises(ValueError):
        unwrap_per_pixel(wrapped, wrapped, RANGE)  # corr must be unwrapped
    small = DepthMap(depth=np.ones((2, 2)), albedo=np.ones((2, 2)),
                     valid=np.ones((2, 2), dtype=bool), wrapped=False)
    with pytest.raises(ValueError):
        unwrap_per_pixel(wrapped, small, RANGE)


def test_line_validation_errors():
    truth = _ramp()
    wrapped, corr = _maps_from_truth(truth)
    with pytest.raises(ValueError):
        CalibrationLine(points=np.array([[0, 0]]))  # too short
    with pytest.raises(ValueError):
        CalibrationLine(points=np.array([[0, 0], [3, 0]]))  # not adjacent
    with pytest.raises(ValueError):
        CalibrationLine(points=np.array([[0, 0], [0, 0]]))  # repeat
    line_oob = CalibrationLine.from_endpoints(0, 0, 200, 0)
    with pytest.raises(ValueError):
        unwrap_with_line(wrapped, corr, line_oob, RANGE)


def test_line_mostly_invalid_corr_rejected():
    truth = _ramp()
    valid = np.ones(truth.shape, dtype=bool)
    valid[:, 12] = False  # kill the whole line row
    wrapped, corr = _maps_from_truth(truth, valid=valid)
    line = CalibrationLine.from_endpoints(0, 12, 79, 12)
    with pytest.raises(ValueError):
        unwrap_with_line(wrapped, corr, line, RANGE, median_radius=0)


def test_non_monotone_corr_warns_and_proceeds():
    truth = _ramp()
    err = np.zeros_like(truth)
    err[30:45, :] = -1.2  # big dip against the trend
    wrapped, corr = _maps_from_truth(truth, corr_err=err)
    line = CalibrationLine.from_endpoints(0, 12, 79, 12)
    with pytest.warns(UserWarning, match="not monotone"):
        res = unwrap_with_line(wrapped, corr, line, RANGE, median_radius=0)
    assert res.depth_map.valid.all()


@given(st.integers(0, 60), st.integers(0, 40),
       st.integers(0, 60), st.integers(0, 40))
@settings(max_examples=80)
def test_bresenham_is_8_connected(x0, y0, x1, y1):
    if (x0, y0) == (x1, y1):
        with pytest.raises(ValueError):
            CalibrationLine.from_endpoints(x0, y0, x1, y1)
        return
    line = CalibrationLine.from_endpoints(x0, y0, x1, y1)
    pts = line.points
    assert tuple(pts[0]) == (x0, y0)
    assert tuple(pts[-1]) == (x1, y1)
    steps = np.abs(np.diff(pts, axis=0))
    assert steps.max() == 1


def test_median_filter_invalid_aware():
    depth = np.array([[1.0, 9.0, 1.0],
                      [1.0, 1.0, 1.0],
                      [1.0, 1.0, 1.0]])
    valid = np.ones((3, 3), dtype=bool)
    valid[0, 1] = False  # the outlier is invalid; must not leak in
    dmap = DepthMap(depth=np.where(valid, depth, 0.0),
                    albedo=np.ones_like(depth), valid=valid, wrapped=False)
    out = median_filter_map(dmap, radius=1)
    assert np.allclose(out.depth[out.valid], 1.0)
    assert not out.valid[0, 1]
    # radius 0 is a no-op
    same = median_filter_map(dmap, radius=0)
    assert np.array_equal(same.depth, dmap.depth)
