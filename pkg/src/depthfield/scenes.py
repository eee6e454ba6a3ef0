"""Synthetic scene description: opaque Lambertian primitives with
procedural or raster albedo textures.

Geometry lives in the world frame of the camera array: views sit in the
z=0 plane and look down +z.  All object depths must stay inside
(0, 100) m; ray hits outside that band count as misses.

Scene JSON schema::

    {"objects": [
        {"type": "rect",   "center": [x, y, z], "size": [w, h],
         "texture": {...}},
        {"type": "plane",  "point": [x, y, z], "normal": [nx, ny, nz],
         "texture": {...}},
        {"type": "sphere", "center": [x, y, z], "radius": r,
         "texture": {...}}
    ]}

Texture specs (sampled at the hit point's surface coordinates (s, t),
meters; rects use corner-relative coordinates, planes and spheres use
world (x, y))::

    {"kind": "constant", "value": a}
    {"kind": "checker",  "pitch": p, "values": [a0, a1]}
    {"kind": "gradient", "axis": "s"|"t", "start": a0, "stop": a1,
     "extent": [lo, hi]}
    {"kind": "raster",   "values": [[...], ...], "scale": m_per_texel,
     "origin": [s0, t0]}
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import DataFormatError

DEPTH_MIN = 1e-6
DEPTH_MAX = 100.0


class SceneError(DataFormatError):
    """Malformed scene description."""


# --------------------------------------------------------------------------
# textures
# --------------------------------------------------------------------------

class Texture:
    def sample(self, s, t):
        raise NotImplementedError

    @staticmethod
    def from_spec(spec):
        if not isinstance(spec, dict) or "kind" not in spec:
            raise SceneError(f"texture spec must be a dict with 'kind': {spec!r}")
        kind = spec["kind"]
        cls = _TEXTURES.get(kind)
        if cls is None:
            raise SceneError(f"unknown texture kind {kind!r}")
        return cls._parse(spec)


@dataclass(frozen=True)
class ConstantTexture(Texture):
    value: float = 1.0

    def sample(self, s, t):
        return np.full(np.shape(s), float(self.value))

    def to_spec(self):
        return {"kind": "constant", "value": self.value}

    @classmethod
    def _parse(cls, spec):
        return cls(value=float(spec.get("value", 1.0)))


@dataclass(frozen=True)
class CheckerTexture(Texture):
    pitch: float = 0.1  # meters per square
    values: tuple = (0.25, 1.0)

    def sample(self, s, t):
        parity = (np.floor(s / self.pitch) + np.floor(t / self.pitch)) % 2
        return np.where(parity < 0.5, self.values[0], self.values[1])

    def to_spec(self):
        return {"kind": "checker", "pitch": self.pitch,
                "values": list(self.values)}

    @classmethod
    def _parse(cls, spec):
        vals = spec.get("values", (0.25, 1.0))
        if len(vals) != 2:
            raise SceneError("checker needs exactly two values")
        return cls(pitch=float(spec.get("pitch", 0.1)),
                   values=(float(vals[0]), float(vals[1])))


@dataclass(frozen=True)
class GradientTexture(Texture):
    axis: str = "s"
    start: float = 0.2
    stop: float = 1.0
    extent: tuple = (0.0, 1.0)

    def sample(self, s, t):
        coord = s if self.axis == "s" else t
        lo, hi = self.extent
        frac = np.clip((coord - lo) / (hi - lo), 0.0, 1.0)
        return self.start + (self.stop - self.start) * frac

    def to_spec(self):
        return {"kind": "gradient", "axis": self.axis, "start": self.start,
                "stop": self.stop, "extent": list(self.extent)}

    @classmethod
    def _parse(cls, spec):
        axis = spec.get("axis", "s")
        if axis not in ("s", "t"):
            raise SceneError(f"gradient axis must be 's' or 't', got {axis!r}")
        extent = spec.get("extent", (0.0, 1.0))
        if len(extent) != 2 or float(extent[1]) == float(extent[0]):
            raise SceneError("gradient extent must be [lo, hi] with lo != hi")
        return cls(axis=axis, start=float(spec.get("start", 0.2)),
                   stop=float(spec.get("stop", 1.0)),
                   extent=(float(extent[0]), float(extent[1])))


@dataclass(frozen=True)
class RasterTexture(Texture):
    """Nearest-neighbour lookup into a tiled 2D value array."""

    values: np.ndarray = None
    scale: float = 0.02  # meters per texel
    origin: tuple = (0.0, 0.0)

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if vals.ndim != 2 or vals.size == 0:
            raise SceneError("raster values must be a non-empty 2D array")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def sample(self, s, t):
        i = np.floor((np.asarray(s) - self.origin[0]) / self.scale).astype(int)
        j = np.floor((np.asarray(t) - self.origin[1]) / self.scale).astype(int)
        ni, nj = self.values.shape
        return self.values[i % ni, j % nj]

    def to_spec(self):
        return {"kind": "raster", "values": self.values.tolist(),
                "scale": self.scale, "origin": list(self.origin)}

    @classmethod
    def _parse(cls, spec):
        if "values" not in spec:
            raise SceneError("raster texture needs 'values'")
        origin = spec.get("origin", (0.0, 0.0))
        return cls(values=np.asarray(spec["values"], dtype=np.float64),
                   scale=float(spec.get("scale", 0.02)),
                   origin=(float(origin[0]), float(origin[1])))


_TEXTURES = {
    "constant": ConstantTexture,
    "checker": CheckerTexture,
    "gradient": GradientTexture,
    "raster": RasterTexture,
}


def multiscale_raster(rng, shape=(64, 64), octaves=(1, 4, 16),
                      lo=0.2, hi=1.0):
    """Blocky value-noise raster with structure at several scales.

    Useful for correspondence tests: every matching window sees contrast
    at some scale regardless of viewing distance.
    """
    acc = np.zeros(shape)
    for k, cells in enumerate(octaves):
        coarse = rng.random((cells, cells))
        reps = (int(np.ceil(shape[0] / cells)), int(np.ceil(shape[1] / cells)))
        up = np.kron(coarse, np.ones(reps))[: shape[0], : shape[1]]
        acc += up / (2.0 ** k)
    acc -= acc.min()
    if acc.max() > 0:
        acc /= acc.max()
    return lo + (hi - lo) * acc


# --------------------------------------------------------------------------
# primitives
# --------------------------------------------------------------------------

class Primitive:
    """Interface: intersect a bundle of rays from origins (ox, oy, 0) with
    directions (dx, dy, 1); the ray parameter equals the z-depth."""

    def intersect(self, ox, oy, dx, dy):
        """Return (z, albedo, hit) arrays broadcast to the ray shape."""
        raise NotImplementedError

    @staticmethod
    def from_spec(spec):
        if not isinstance(spec, dict) or "type" not in spec:
            raise SceneError(f"object spec must be a dict with 'type': {spec!r}")
        cls = _PRIMITIVES.get(spec["type"])
        if cls is None:
            raise SceneError(f"unknown primitive type {spec['type']!r}")
        return cls._parse(spec)


def _vec(spec, name, n):
    try:
        v = tuple(float(x) for x in spec[name])
    except (KeyError, TypeError, ValueError) as e:
        raise SceneError(f"{spec.get('type')}: bad {name!r}: {e}") from e
    if len(v) != n:
        raise SceneError(f"{spec.get('type')}: {name!r} needs {n} numbers")
    return v


def _check_anchor_depth(z, what):
    if not (0.0 < z < DEPTH_MAX):
        raise SceneError(f"{what} depth {z} outside (0, {DEPTH_MAX}) m")


@dataclass(frozen=True)
class FrontoRect(Primitive):
    """Fronto-parallel textured rectangle."""

    center: tuple  # (x, y, z) meters
    size: tuple  # (w, h) meters
    texture: Texture = ConstantTexture()

    def __post_init__(self):
        _check_anchor_depth(self.center[2], "rect")
        if self.size[0] <= 0 or self.size[1] <= 0:
            raise SceneError("rect size must be positive")

    def intersect(self, ox, oy, dx, dy):
        cx, cy, z0 = self.center
        w, h = self.size
        X = ox + dx * z0
        Y = oy + dy * z0
        hit = (np.abs(X - cx) <= w / 2) & (np.abs(Y - cy) <= h / 2)
        z = np.where(hit, z0, np.inf)
        alb = self.texture.sample(X - (cx - w / 2), Y - (cy - h / 2))
        return z, alb, hit

    def to_spec(self):
        return {"type": "rect", "center": list(self.center),
                "size": list(self.size), "texture": self.texture.to_spec()}

    @classmethod
    def _parse(cls, spec):
        return cls(center=_vec(spec, "center", 3), size=_vec(spec, "size", 2),
                   texture=Texture.from_spec(spec.get(
                       "texture", {"kind": "constant"})))


@dataclass(frozen=True)
class Plane(Primitive):
    """Infinite plane through `point` with the given normal (may be tilted)."""

    point: tuple  # (x, y, z)
    normal: tuple  # need not be unit length; must not be parallel to rays
    texture: Texture = ConstantTexture()

    def __post_init__(self):
        _check_anchor_depth(self.point[2], "plane")
        if all(abs(c) < 1e-12 for c in self.normal):
            raise SceneError("plane normal must be nonzero")

    def intersect(self, ox, oy, dx, dy):
        nx_, ny_, nz = self.normal
        px, py, pz = self.point
        denom = nx_ * dx + ny_ * dy + nz
        num = nx_ * (px - ox) + ny_ * (py - oy) + nz * pz
        with np.errstate(divide="ignore", invalid="ignore"):
            z = num / denom
        hit = np.isfinite(z) & (z > DEPTH_MIN) & (z < DEPTH_MAX)
        z = np.where(hit, z, np.inf)
        X = ox + dx * np.where(hit, z, 0.0)
        Y = oy + dy * np.where(hit, z, 0.0)
        return z, self.texture.sample(X, Y), hit

    def to_spec(self):
        return {"type": "plane", "point": list(self.point),
                "normal": list(self.normal),
                "texture": self.texture.to_spec()}

    @classmethod
    def _parse(cls, spec):
        return cls(point=_vec(spec, "point", 3),
                   normal=_vec(spec, "normal", 3),
                   texture=Texture.from_spec(spec.get(
                       "texture", {"kind": "constant"})))


@dataclass(frozen=True)
class Sphere(Primitive):
    center: tuple  # (x, y, z)
    radius: float
    texture: Texture = ConstantTexture()

    def __post_init__(self):
        if self.radius <= 0:
            raise SceneError("sphere radius must be positive")
        _check_anchor_depth(self.center[2] - self.radius, "sphere near side")
        _check_anchor_depth(self.center[2] + self.radius, "sphere far side")

    def intersect(self, ox, oy, dx, dy):
        cx, cy, cz = self.center
        # |o + z*d - c|^2 = r^2 with d = (dx, dy, 1)
        a = dx * dx + dy * dy + 1.0
        mx = ox - cx
        my = oy - cy
        b = 2.0 * (mx * dx + my * dy - cz)
        c0 = mx * mx + my * my + cz * cz - self.radius ** 2
        disc = b * b - 4.0 * a * c0
        hit = disc >= 0.0
        sq = np.sqrt(np.where(hit, disc, 0.0))
        z = (-b - sq) / (2.0 * a)  # nearer root
        hit = hit & (z > DEPTH_MIN) & (z < DEPTH_MAX)
        z = np.where(hit, z, np.inf)
        X = ox + dx * np.where(np.isfinite(z), z, 0.0)
        Y = oy + dy * np.where(np.isfinite(z), z, 0.0)
        return z, self.texture.sample(X, Y), hit

    def to_spec(self):
        return {"type": "sphere", "center": list(self.center),
                "radius": self.radius, "texture": self.texture.to_spec()}

    @classmethod
    def _parse(cls, spec):
        if "radius" not in spec:
            raise SceneError("sphere needs 'radius'")
        return cls(center=_vec(spec, "center", 3),
                   radius=float(spec["radius"]),
                   texture=Texture.from_spec(spec.get(
                       "texture", {"kind": "constant"})))


_PRIMITIVES = {"rect": FrontoRect, "plane": Plane, "sphere": Sphere}


@dataclass(frozen=True)
class Scene:
    objects: tuple

    def __post_init__(self):
        objs = tuple(self.objects)
        if not objs:
            raise SceneError("scene must contain at least one object")
        for o in objs:
            if not isinstance(o, Primitive):
                raise SceneError(f"not a primitive: {o!r}")
        object.__setattr__(self, "objects", objs)

    def cast(self, ox, oy, dx, dy):
        """Nearest-hit query for a bundle of rays.

        Returns (z, albedo, hit); z is inf and albedo 0 where nothing is hit.
        """
        shape = np.broadcast_shapes(np.shape(ox), np.shape(oy),
                                    np.shape(dx), np.shape(dy))
        best_z = np.full(shape, np.inf)
        best_a = np.zeros(shape)
        for obj in self.objects:
            z, alb, hit = obj.intersect(ox, oy, dx, dy)
            closer = hit & (z < best_z)
            best_z = np.where(closer, z, best_z)
            best_a = np.where(closer, alb, best_a)
        hit = np.isfinite(best_z)
        return best_z, best_a, hit

    def to_json(self):
        return {"objects": [o.to_spec() for o in self.objects]}

    @classmethod
    def from_json(cls, data):
        if not isinstance(data, dict) or "objects" not in data:
            raise SceneError("scene JSON must be an object with 'objects'")
        return cls(objects=tuple(Primitive.from_spec(s)
                                 for s in data["objects"]))

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_json(), f, indent=2, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, path):
        try:
            with open(path) as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise SceneError(f"{path}: not valid JSON: {e}") from e
        return cls.from_json(data)
