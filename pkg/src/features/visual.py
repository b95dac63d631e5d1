"""
Geometry-aligned visual features: pinhole projection and bilinear sampling.

Grid cell (i, j) of an H x W feature grid covers the image region whose center
sits at pixel ((j + 0.5) * width / W, (i + 0.5) * height / H). Queries outside
the span of cell centers clamp to the border centers.

Public API:
- Camera (fx, fy, cx, cy, width, height), load_camera(path), save_camera(cam, path)
- FeatureGrid (H x W x d values), load_feature_grid(path), save_feature_grid(grid, path)
- project_point(cam, x) -> (u, v)
- sample_bilinear(grid, u, v, cam) -> (d,)
- visual_features(points, grid, cam, mode, to_camera=None) -> (N, d)
  "v1": global feature, the grid averaged over all cells, one row per point
  "v2": geometry-aligned feature, the grid sampled at each point's projection
- VisualSource (grid, camera, mode, to_camera) bundling the above per scene
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import numpy as np

from src.errors import BehindCameraError, ConfigError, DimensionMismatchError, InputParseError
from src.geomcore.transforms import RigidTransform

GRID_MAGIC = b"GSDG"
GRID_VERSION = 1
DEFAULT_GRID_SIZE = 16
DEFAULT_CHANNELS = 256
MIN_DEPTH = 1e-9
VISUAL_MODES = ("v1", "v2")


@dataclass(frozen=True)
class Camera:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ConfigError(f"camera focal lengths must be positive, got fx={self.fx}, fy={self.fy}", field="fx")
        if self.width <= 0 or self.height <= 0:
            raise ConfigError("camera image size must be positive", field="width")


@dataclass(frozen=True, eq=False)
class FeatureGrid:
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 3 or values.shape[0] < 2 or values.shape[1] < 2:
            raise InputParseError(f"feature grid must be H x W x d with H, W >= 2, got {values.shape}", field="values")
        if not np.all(np.isfinite(values)):
            raise InputParseError("feature grid contains non-finite values", field="values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.values.shape[2]


def project_point(cam: Camera, x) -> Tuple[float, float]:
    x = np.asarray(x, dtype=np.float64).reshape(3)
    if x[2] <= MIN_DEPTH:
        raise BehindCameraError(f"point depth {x[2]:.3g} is at or behind the image plane", field="z")
    return cam.fx * x[0] / x[2] + cam.cx, cam.fy * x[1] / x[2] + cam.cy


def sample_bilinear(grid: FeatureGrid, u: float, v: float, cam: Camera) -> np.ndarray:
    # continuous grid coordinates with cell centers at integers
    gx = u * grid.width / cam.width - 0.5
    gy = v * grid.height / cam.height - 0.5
    gx = min(max(gx, 0.0), grid.width - 1.0)
    gy = min(max(gy, 0.0), grid.height - 1.0)

    x0 = min(int(np.floor(gx)), grid.width - 2)
    y0 = min(int(np.floor(gy)), grid.height - 2)
    ax = gx - x0
    ay = gy - y0
    g = grid.values
    return ((1 - ay) * (1 - ax) * g[y0, x0] + (1 - ay) * ax * g[y0, x0 + 1]
            + ay * (1 - ax) * g[y0 + 1, x0] + ay * ax * g[y0 + 1, x0 + 1])


def _bilinear_many(grid: FeatureGrid, u: np.ndarray, v: np.ndarray, cam: Camera) -> np.ndarray:
    """Vectorized sample_bilinear over arrays of pixel coordinates."""
    gx = np.clip(u * grid.width / cam.width - 0.5, 0.0, grid.width - 1.0)
    gy = np.clip(v * grid.height / cam.height - 0.5, 0.0, grid.height - 1.0)
    x0 = np.minimum(np.floor(gx).astype(np.int64), grid.width - 2)
    y0 = np.minimum(np.floor(gy).astype(np.int64), grid.height - 2)
    ax = (gx - x0)[:, None]
    ay = (gy - y0)[:, None]
    g = grid.values
    return ((1 - ay) * (1 - ax) * g[y0, x0] + (1 - ay) * ax * g[y0, x0 + 1]
            + ay * (1 - ax) * g[y0 + 1, x0] + ay * ax * g[y0 + 1, x0 + 1])


def visual_features(points, grid: FeatureGrid, cam: Camera, mode: str = "v2",
                    to_camera: Optional[RigidTransform] = None) -> np.ndarray:
    """
    Visual feature rows e_v for a batch of query points.

    Args:
        points: (N, 3) query points, in camera coordinates unless to_camera is given.
        grid: image feature grid of the view.
        cam: pinhole intrinsics the grid was computed for.
        mode: "v1" pools the whole grid into one global vector; "v2" projects
            every point and samples the grid there.
        to_camera: rigid map from the points' frame into the camera frame.

    Returns:
        (N, d) array, d = grid.channels.

    Raises:
        BehindCameraError: a point lies at or behind the image plane ("v2" only).
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise DimensionMismatchError(f"points must be (N, 3), got {pts.shape}", field="points")
    if mode not in VISUAL_MODES:
        raise ConfigError(f"unknown visual mode '{mode}', expected one of {VISUAL_MODES}", field="visual_mode")
    if mode == "v1":
        return np.broadcast_to(grid.values.mean(axis=(0, 1)), (len(pts), grid.channels)).copy()
    if to_camera is not None:
        pts = to_camera.apply(pts)
    if len(pts) and pts[:, 2].min() <= MIN_DEPTH:
        raise BehindCameraError(f"point depth {pts[:, 2].min():.3g} is at or behind the image plane", field="z")
    u = cam.fx * pts[:, 0] / pts[:, 2] + cam.cx
    v = cam.fy * pts[:, 1] / pts[:, 2] + cam.cy
    return _bilinear_many(grid, u, v, cam)


@dataclass(frozen=True, eq=False)
class VisualSource:
    """One view's grid and camera; `features(points)` is the e_v provider."""

    grid: FeatureGrid
    camera: Camera
    mode: str = "v2"
    to_camera: Optional[RigidTransform] = None

    @property
    def channels(self) -> int:
        return self.grid.channels

    def features(self, points) -> np.ndarray:
        return visual_features(points, self.grid, self.camera, self.mode, self.to_camera)


def save_feature_grid(grid: FeatureGrid, path: str):
    h, w, d = grid.values.shape
    with open(path, "wb") as f:
        f.write(GRID_MAGIC)
        f.write(struct.pack("<IIII", GRID_VERSION, h, w, d))
        f.write(grid.values.astype("<f4").tobytes(order="C"))


def load_feature_grid(path: str) -> FeatureGrid:
    try:
        with open(path, "rb") as f:
            data = f.read()
    except FileNotFoundError:
        raise ConfigError(f"file not found: {path}", file=path)
    if len(data) < 20 or data[:4] != GRID_MAGIC:
        raise InputParseError("not a feature grid file (bad magic)", file=path, field="magic")
    version, h, w, d = struct.unpack_from("<IIII", data, 4)
    if version != GRID_VERSION:
        raise InputParseError(f"unsupported feature grid version {version}", file=path, field="version")
    expected = 20 + 4 * h * w * d
    if len(data) != expected:
        raise InputParseError(f"feature grid payload is {len(data)} bytes, expected {expected}", file=path)
    values = np.frombuffer(data, dtype="<f4", offset=20).reshape(h, w, d).astype(np.float64)
    try:
        return FeatureGrid(values)
    except InputParseError as e:
        e.file = path
        raise


def load_camera(path: str) -> Camera:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"file not found: {path}", file=path)
    except json.JSONDecodeError as e:
        raise InputParseError(f"invalid JSON: {e}", file=path)
    for key in ("fx", "fy", "cx", "cy", "width", "height"):
        if key not in data:
            raise InputParseError(f"camera JSON is missing '{key}'", file=path, field=key)
    return Camera(float(data["fx"]), float(data["fy"]), float(data["cx"]), float(data["cy"]),
                  int(data["width"]), int(data["height"]))


def save_camera(cam: Camera, path: str):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(asdict(cam), f, indent=2)
