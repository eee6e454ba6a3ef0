"""DFZ container format plus PNG/CSV exports.

Layout (little-endian): magic ``DPFL``, u32 version (=1), u32 JSON header
byte length, the UTF-8 JSON header, then each array named in the header's
``arrays`` list as raw bytes in row-major (u, v, x, y) order
((k, u, v, x, y) for quadrature stacks).  Float grids are stored as
float32, boolean masks as uint8.

Writing quantizes float64 grids to float32; a write -> read cycle is
bit-exact whenever the in-memory values are float32-representable (always
true for anything previously read from a DFZ file).
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .core import (CameraArrayConfig, DataFormatError, DepthField, DepthMap,
                   QuadratureStack, depth_to_phase, phase_to_depth)

MAGIC = b"DPFL"
VERSION = 1
_MAX_HEADER = 1 << 20


class BadMagicError(DataFormatError):
    pass


class VersionError(DataFormatError):
    pass


class TruncatedError(DataFormatError):
    pass


class HeaderError(DataFormatError):
    """Header inconsistent with itself or with the payload."""


def _header_dict(kind, config, wrapped, arrays):
    return {
        "kind": kind,
        "nu": config.nu, "nv": config.nv,
        "nx": config.nx, "ny": config.ny,
        "f_mod_hz": config.f_mod,
        "baseline_u_m": config.baseline_u,
        "baseline_v_m": config.baseline_v,
        "focal_length_m": config.focal_length,
        "pixel_pitch_m": config.pixel_pitch,
        "c_mps": config.c,
        "wrapped": bool(wrapped),
        "arrays": list(arrays),
    }


def _config_from_header(h):
    try:
        return CameraArrayConfig(
            nu=h["nu"], nv=h["nv"], nx=h["nx"], ny=h["ny"],
            f_mod=h["f_mod_hz"],
            baseline_u=h["baseline_u_m"], baseline_v=h["baseline_v_m"],
            focal_length=h["focal_length_m"],
            pixel_pitch=h["pixel_pitch_m"], c=h["c_mps"],
        )
    except (KeyError, TypeError, ValueError) as e:
        raise HeaderError(f"bad config in header: {e}") from e


def write_dfz(obj, path):
    """Write a DepthField or QuadratureStack to `path`."""
    if isinstance(obj, DepthField):
        header = _header_dict("depthfield", obj.config, obj.wrapped,
                             ["albedo", "phase", "valid"])
        payload = [obj.albedo.astype("<f4"), obj.phase.astype("<f4"),
                   obj.valid.astype(np.uint8)]
    elif isinstance(obj, QuadratureStack):
        header = _header_dict("quadrature", obj.config, False, ["frames"])
        payload = [obj.frames.astype("<f4")]
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__} as DFZ")
    hjson = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(hjson)))
        f.write(hjson)
        for arr in payload:
            f.write(np.ascontiguousarray(arr).tobytes())


def read_header(path):
    """Return the parsed JSON header of a DFZ file."""
    with open(path, "rb") as f:
        magic = f.read(4)
        if len(magic) < 4:
            raise TruncatedError(f"{path}: file shorter than magic")
        if magic != MAGIC:
            raise BadMagicError(f"{path}: bad magic {magic!r}")
        raw = f.read(8)
        if len(raw) < 8:
            raise TruncatedError(f"{path}: truncated length fields")
        version, hlen = struct.unpack("<II", raw)
        if version != VERSION:
            raise VersionError(f"{path}: unsupported version {version}")
        if hlen > _MAX_HEADER:
            raise HeaderError(f"{path}: implausible header length {hlen}")
        hjson = f.read(hlen)
        if len(hjson) < hlen:
            raise TruncatedError(f"{path}: truncated header")
    try:
        header = json.loads(hjson.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise HeaderError(f"{path}: header is not valid JSON: {e}") from e
    if not isinstance(header, dict):
        raise HeaderError(f"{path}: header must be a JSON object")
    return header


def read_dfz(path):
    """Read a DFZ file; returns a DepthField or QuadratureStack."""
    header = read_header(path)
    config = _config_from_header(header)
    kind = header.get("kind")
    grid = config.grid_shape
    if kind == "depthfield":
        specs = [("albedo", "<f4", grid), ("phase", "<f4", grid),
                 ("valid", np.uint8, grid)]
    elif kind == "quadrature":
        specs = [("frames", "<f4", (4,) + grid)]
    else:
        raise HeaderError(f"{path}: unknown kind {kind!r}")
    if header.get("arrays") != [name for name, _, _ in specs]:
        raise HeaderError(
            f"{path}: arrays {header.get('arrays')!r} do not match kind")

    arrays = {}
    with open(path, "rb") as f:
        f.read(4)
        _, hlen = struct.unpack("<II", f.read(8))
        f.read(hlen)
        for name, dtype, shape in specs:
            nbytes = int(np.prod(shape)) * np.dtype(dtype).itemsize
            raw = f.read(nbytes)
            if len(raw) < nbytes:
                raise TruncatedError(
                    f"{path}: array {name!r} truncated "
                    f"({len(raw)} of {nbytes} bytes)")
            arrays[name] = np.frombuffer(raw, dtype=dtype).reshape(shape)
        if f.read(1):
            raise HeaderError(f"{path}: trailing bytes after payload")

    wrapped = bool(header.get("wrapped", False))
    if kind == "depthfield":
        return DepthField(
            config=config,
            albedo=arrays["albedo"].astype(np.float64),
            phase=arrays["phase"].astype(np.float64),
            valid=arrays["valid"].astype(bool),
            wrapped=wrapped,
        )
    return QuadratureStack(
        config=config, frames=arrays["frames"].astype(np.float64))


# A 2D DepthMap travels as a 1x1-view DepthField with phase encoding depth.

def depth_map_to_field(dmap, config):
    """Pack a DepthMap into a 1x1-view DepthField for DFZ transport."""
    cfg = CameraArrayConfig(
        nu=1, nv=1, nx=dmap.shape[0], ny=dmap.shape[1],
        baseline_u=config.baseline_u, baseline_v=config.baseline_v,
        focal_length=config.focal_length, pixel_pitch=config.pixel_pitch,
        f_mod=config.f_mod, c=config.c)
    phase = depth_to_phase(np.where(dmap.valid, dmap.depth, 0.0), cfg)
    return DepthField(config=cfg,
                      albedo=dmap.albedo[None, None],
                      phase=phase[None, None],
                      valid=dmap.valid[None, None],
                      wrapped=dmap.wrapped)


def field_to_depth_map(fld):
    """Inverse of depth_map_to_field."""
    if fld.config.view_shape != (1, 1):
        raise HeaderError("expected a 1x1-view field holding a depth map")
    depth = phase_to_depth(fld.phase[0, 0], fld.config)
    return DepthMap(depth=depth, albedo=fld.albedo[0, 0],
                    valid=fld.valid[0, 0], wrapped=fld.wrapped)


def export_png(image, path, valid=None):
    """8-bit grayscale PNG with linear min-max normalization.

    The normalization bounds (and how invalid pixels were rendered) go to a
    `<path>.json` sidecar so values stay recoverable.
    """
    from PIL import Image

    img = np.asarray(image, dtype=np.float64)
    if valid is None:
        valid = np.isfinite(img)
    else:
        valid = np.asarray(valid, dtype=bool) & np.isfinite(img)
    if valid.any():
        lo = float(img[valid].min())
        hi = float(img[valid].max())
    else:
        lo, hi = 0.0, 0.0
    span = hi - lo
    if span > 0:
        norm = np.clip((img - lo) / span, 0.0, 1.0)
    else:
        norm = np.zeros_like(img)
    out = np.round(norm * 255.0).astype(np.uint8)
    out[~valid] = 0
    Image.fromarray(out, mode="L").save(path, format="PNG")
    sidecar = {"min": lo, "max": hi, "invalid_value": 0,
               "shape": list(img.shape)}
    with open(str(path) + ".json", "w") as f:
        json.dump(sidecar, f, sort_keys=True)
        f.write("\n")


def export_csv(image, path, valid=None):
    """Plain CSV dump of a 2D grid; invalid pixels written as nan."""
    img = np.asarray(image, dtype=np.float64)
    if valid is not None:
        img = np.where(np.asarray(valid, dtype=bool), img, np.nan)
    np.savetxt(path, img, fmt="%.9g", delimiter=",")
