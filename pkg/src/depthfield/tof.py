"""Quadrature inversion: recover (albedo, wrapped phase) per ray from the
four correlation frames, plus per-view depth maps and synthetic wrapping.

With frames i_k = (a/2) cos(offset_k + phi) at offsets 0, pi/2, pi, 3pi/2:
i3 - i1 = a sin(phi) and i0 - i2 = a cos(phi), so

    a   = sqrt((i3 - i1)^2 + (i2 - i0)^2)
    phi = atan2(i3 - i1, i0 - i2)        shifted into [0, 2*pi)

The atan2 argument order differs from a literal reading of the printed
arctangent formula for this model; this form is the one that round-trips
the forward model exactly (the literal form returns pi - phi).
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .core import DepthField, DepthMap, phase_to_depth, wrap_phase

DEFAULT_VALIDITY_THRESHOLD = 1e-6


def invert_quadrature(stack, validity_threshold=DEFAULT_VALIDITY_THRESHOLD):
    """Invert a QuadratureStack into a wrapped DepthField.

    Rays whose recovered amplitude falls below `validity_threshold` times
    the per-stack maximum amplitude are marked invalid (phase sentinel 0).
    An all-zero stack yields an entirely invalid field, not an error.
    """
    i0, i1, i2, i3 = stack.frames
    sin_term = i3 - i1
    cos_term = i0 - i2
    albedo = np.hypot(sin_term, cos_term)
    phase = wrap_phase(np.arctan2(sin_term, cos_term))
    peak = albedo.max()
    if peak > 0:
        valid = albedo >= validity_threshold * peak
    else:
        valid = np.zeros_like(albedo, dtype=bool)
    return DepthField(config=stack.config, albedo=albedo, phase=phase,
                      valid=valid, wrapped=True)


def to_depth_map(field, view):
    """Per-view DepthMap via d = c*phi / (4 pi f_mod).

    The wrapped flag propagates: depths from a wrapped field are modulo
    the unambiguous range.
    """
    iu, iv = view
    albedo, phase, valid = field.view(iu, iv)
    depth = phase_to_depth(phase, field.config)
    return DepthMap(depth=np.where(valid, depth, 0.0), albedo=albedo,
                    valid=valid, wrapped=field.wrapped)


def simulate_wrapping(field, factor):
    """Re-wrap a field as if captured at `factor` times the modulation
    frequency (same effect as dropping sensor bits on real hardware).

    Phases become wrap(factor * phi) and config.f_mod is scaled to match.
    Integer factors keep this consistent for already-wrapped inputs.
    """
    if not float(factor).is_integer() or factor < 1:
        raise ValueError(f"wrapping factor must be an integer >= 1, "
                         f"got {factor!r}")
    factor = int(factor)
    cfg = replace(field.config, f_mod=field.config.f_mod * factor)
    phase = wrap_phase(field.phase * factor)
    return DepthField(config=cfg, albedo=field.albedo, phase=phase,
                      valid=field.valid, wrapped=True)
