"""Single-shot multiplexed capture: mix the angular samples of each
spatial location onto a block of sensor pixels through a non-negative
modulation matrix, and recover the depth field by linear inversion.

The sensor image tiles one (bu x bv) pixel block per field location, so a
(nu, nv, nx, ny) field becomes a 4-frame stack of (nx*bu, ny*bv) images
with the view axes collapsed.  Inversion solves one (optionally Tikhonov
regularized) least-squares system per block and per correlation offset,
then runs plain quadrature inversion on the recovered per-ray mixtures.

Choosing bu*bv larger than nu*nv trades spatial resolution for a better
conditioned (overdetermined) block solve.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, replace

import numpy as np

from .core import (DepthField, NumericalError, QuadratureStack,
                   QUADRATURE_OFFSETS)
from .dfz import (BadMagicError, HeaderError, TruncatedError, VersionError)
from . import tof

MATRIX_MAGIC = b"DMMX"
MATRIX_VERSION = 1


@dataclass(frozen=True)
class ModulationMatrix:
    """Per-block mixing of nu*nv angular samples onto bu*bv sensor pixels.

    Weights are non-negative (transmissive optics); the same block matrix
    repeats at every spatial location.
    """

    weights: np.ndarray  # (bu*bv, nu*nv)
    nu: int
    nv: int
    block_shape: tuple  # (bu, bv)
    generator: str = "user"

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        bu, bv = self.block_shape
        k = self.nu * self.nv
        if w.ndim != 2 or w.shape != (bu * bv, k):
            raise ValueError(f"weights shape {w.shape} != ({bu * bv}, {k})")
        if np.any(w < 0):
            raise ValueError("modulation weights must be >= 0")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "block_shape", (int(bu), int(bv)))

    @property
    def n_angular(self):
        return self.nu * self.nv

    def condition_number(self):
        return float(np.linalg.cond(self.weights))

    def effective_condition_number(self, lam):
        s = np.linalg.svd(self.weights, compute_uv=False)
        lam2 = float(lam) ** 2
        return float(np.sqrt((s[0] ** 2 + lam2)
                             / (s[-1] ** 2 + lam2))) if s[-1] ** 2 + lam2 > 0 \
            else np.inf


def pinhole_matrix(nu, nv):
    """Identity selection: each sensor pixel sees exactly one ray."""
    k = nu * nv
    return ModulationMatrix(weights=np.eye(k), nu=nu, nv=nv,
                            block_shape=(nu, nv), generator="pinhole")


def random_binary_matrix(nu, nv, seed, density=0.5, max_cond=None,
                         max_tries=1000):
    """Random 0/1 mask pattern; optionally resampled (deterministically)
    until its condition number is below max_cond."""
    k = nu * nv
    rng = np.random.Generator(np.random.Philox(seed))
    for _ in range(max_tries):
        w = (rng.random((k, k)) < density).astype(np.float64)
        cond = np.linalg.cond(w)
        if np.isfinite(cond) and (max_cond is None or cond < max_cond):
            return ModulationMatrix(weights=w, nu=nu, nv=nv,
                                    block_shape=(nu, nv),
                                    generator="random-binary")
    raise NumericalError(
        f"no binary matrix with condition < {max_cond} in {max_tries} draws")


def random_gaussian_matrix(nu, nv, seed, max_cond=None, max_tries=1000):
    """Folded-gaussian weights (absolute values keep them physical)."""
    k = nu * nv
    rng = np.random.Generator(np.random.Philox(seed))
    for _ in range(max_tries):
        w = np.abs(rng.normal(size=(k, k)))
        cond = np.linalg.cond(w)
        if np.isfinite(cond) and (max_cond is None or cond < max_cond):
            return ModulationMatrix(weights=w, nu=nu, nv=nv,
                                    block_shape=(nu, nv),
                                    generator="random-gaussian")
    raise NumericalError(
        f"no gaussian matrix with condition < {max_cond} in {max_tries} draws")


def write_matrix(m, path):
    header = {
        "kind": "modmatrix", "nu": m.nu, "nv": m.nv,
        "bu": m.block_shape[0], "bv": m.block_shape[1],
        "generator": m.generator, "arrays": ["weights"],
    }
    hjson = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MATRIX_MAGIC)
        f.write(struct.pack("<II", MATRIX_VERSION, len(hjson)))
        f.write(hjson)
        f.write(np.ascontiguousarray(m.weights.astype("<f4")).tobytes())


def read_matrix(path):
    with open(path, "rb") as f:
        magic = f.read(4)
        if len(magic) < 4:
            raise TruncatedError(f"{path}: file shorter than magic")
        if magic != MATRIX_MAGIC:
            raise BadMagicError(f"{path}: bad matrix magic {magic!r}")
        version, hlen = struct.unpack("<II", f.read(8))
        if version != MATRIX_VERSION:
            raise VersionError(f"{path}: unsupported matrix version {version}")
        try:
            header = json.loads(f.read(hlen).decode("utf-8"))
            nu, nv = int(header["nu"]), int(header["nv"])
            bu, bv = int(header["bu"]), int(header["bv"])
        except (KeyError, ValueError, json.JSONDecodeError) as e:
            raise HeaderError(f"{path}: bad matrix header: {e}") from e
        nbytes = bu * bv * nu * nv * 4
        raw = f.read(nbytes)
        if len(raw) < nbytes:
            raise TruncatedError(f"{path}: matrix payload truncated")
        w = np.frombuffer(raw, dtype="<f4").reshape(bu * bv, nu * nv)
    return ModulationMatrix(weights=w.astype(np.float64), nu=nu, nv=nv,
                            block_shape=(bu, bv),
                            generator=header.get("generator", "user"))


def _ray_mixtures(field):
    """D(k, u, v, x, y) = (albedo/2) cos(offset_k + phase), 0 when invalid."""
    amp = np.where(field.valid, 0.5 * field.albedo, 0.0)
    out = np.empty((4,) + field.shape)
    for k, off in enumerate(QUADRATURE_OFFSETS.values):
        out[k] = amp * np.cos(off + field.phase)
    return out


def forward_multiplex(field, m):
    """Collapse the view axes through the modulation matrix.

    Returns a 4-frame QuadratureStack with nu=nv=1 at sensor resolution
    (nx*bu, ny*bv); all other config fields carry over so the inverse can
    rebuild the original geometry.
    """
    cfg = field.config
    if (m.nu, m.nv) != (cfg.nu, cfg.nv):
        raise ValueError(f"matrix is for {m.nu}x{m.nv} views, "
                         f"field has {cfg.nu}x{cfg.nv}")
    bu, bv = m.block_shape
    d = _ray_mixtures(field)  # (4, nu, nv, nx, ny)
    # angular axis flattened as u*nv + v, matching weights columns
    d = d.reshape(4, cfg.nu * cfg.nv, cfg.nx, cfg.ny)
    meas = np.einsum("mk,tkxy->tmxy", m.weights, d)
    meas = meas.reshape(4, bu, bv, cfg.nx, cfg.ny)
    sensor = meas.transpose(0, 3, 1, 4, 2).reshape(
        4, 1, 1, cfg.nx * bu, cfg.ny * bv)
    sensor_cfg = replace(cfg, nu=1, nv=1, nx=cfg.nx * bu, ny=cfg.ny * bv)
    return QuadratureStack(config=sensor_cfg, frames=sensor)


@dataclass(frozen=True)
class MultiplexInversion:
    field: DepthField  # recovered (albedo, wrapped phase) per ray
    mixtures: np.ndarray  # recovered D' grids, (4, nu, nv, nx, ny)
    condition_number: float
    effective_condition_number: float


def invert_multiplex(stack, m, lam=0.0,
                     validity_threshold=tof.DEFAULT_VALIDITY_THRESHOLD):
    """Recover per-ray mixtures by (regularized) least squares, then unmix
    albedo and phase by quadrature inversion.

    lam=0 requires the block matrix to have full column rank; lam>0 solves
    the Tikhonov-regularized normal equations instead.
    """
    if lam < 0:
        raise ValueError("regularization lambda must be >= 0")
    cfg = stack.config
    if (cfg.nu, cfg.nv) != (1, 1):
        raise ValueError("expected a view-collapsed (nu=nv=1) sensor stack")
    bu, bv = m.block_shape
    if cfg.nx % bu or cfg.ny % bv:
        raise ValueError(f"sensor {cfg.nx}x{cfg.ny} is not tiled by "
                         f"{bu}x{bv} blocks")
    nx, ny = cfg.nx // bu, cfg.ny // bv
    k = m.n_angular

    w = m.weights
    s = np.linalg.svd(w, compute_uv=False)
    cond = float(s[0] / s[-1]) if s[-1] > 0 else np.inf
    if lam == 0.0 and (s[-1] <= s[0] * np.finfo(float).eps * max(w.shape)):
        raise NumericalError(
            f"modulation matrix rank-deficient in its {bu}x{bv} block "
            f"(singular values {s[0]:.3g} .. {s[-1]:.3g}); "
            f"pass lam > 0 to regularize")

    frames = stack.frames.reshape(4, nx, bu, ny, bv)
    meas = frames.transpose(0, 2, 4, 1, 3).reshape(4, bu * bv, nx * ny)
    rhs = meas.reshape(4 * 1, bu * bv, nx * ny).transpose(
        1, 0, 2).reshape(bu * bv, 4 * nx * ny)
    if lam == 0.0:
        sol, *_ = np.linalg.lstsq(w, rhs, rcond=None)
    else:
        a = w.T @ w + (lam ** 2) * np.eye(k)
        sol = np.linalg.solve(a, w.T @ rhs)
    mixtures = sol.reshape(k, 4, nx * ny).transpose(1, 0, 2).reshape(
        4, m.nu, m.nv, nx, ny)

    field_cfg = replace(cfg, nu=m.nu, nv=m.nv, nx=nx, ny=ny)
    ray_stack = QuadratureStack(config=field_cfg, frames=mixtures)
    field = tof.invert_quadrature(ray_stack,
                                  validity_threshold=validity_threshold)
    return MultiplexInversion(
        field=field, mixtures=mixtures, condition_number=cond,
        effective_condition_number=m.effective_condition_number(lam))
