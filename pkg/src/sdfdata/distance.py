"""
Point-to-mesh signed distance.

Magnitude: exact point-to-triangle distance (closest-point region tests on
the triangle's Voronoi regions), minimized over triangles.
Sign: negative inside. Three axis-aligned ray-parity votes, majority wins.
A ray that grazes an edge or vertex (barycentric within BARY_TOL of zero)
is retried from a deterministically perturbed origin.

Two candidate generators feed the same per-pair kernels:
- brute force: every (point, triangle) pair, the reference path
- MeshQuery index: k-d trees over triangle centroids (3D for distance,
  2D per ray axis for parity), pruning pairs that cannot change the result

Public API:
- closest_point_on_triangles(a, b, c, q) -> (K, 3)
- MeshQuery(mesh, brute=False) with .unsigned(points), .inside(points), .signed(points)
- signed_distance(mesh, p) -> float
- signed_distances(mesh, points, threads=1, brute=False) -> (N,)
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Tuple

import numpy as np
from scipy.spatial import cKDTree

from src.errors import DegenerateInputError
from src.sdfdata import config
from src.sdfdata.mesh import TriMesh

# fixed, non-axis-aligned retry direction
_PERTURB_DIR = np.array([0.5773502691896258, 0.3090169943749474, 0.7557613140761707])


def _dot(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return (u * v).sum(axis=1)


def closest_point_on_triangles(a: np.ndarray, b: np.ndarray, c: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Closest point on triangle (a_k, b_k, c_k) to q_k for K pairs, all (K, 3)."""
    result = np.empty_like(q)
    remain = np.ones(len(q), dtype=bool)

    ab = b - a
    ac = c - a
    ap = q - a
    d1 = _dot(ab, ap)
    d2 = _dot(ac, ap)
    is_a = (d1 <= 0) & (d2 <= 0)
    result[is_a] = a[is_a]
    remain &= ~is_a

    bp = q - b
    d3 = _dot(ab, bp)
    d4 = _dot(ac, bp)
    is_b = remain & (d3 >= 0) & (d4 <= d3)
    result[is_b] = b[is_b]
    remain &= ~is_b

    vc = d1 * d4 - d3 * d2
    is_ab = remain & (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    if np.any(is_ab):
        v = d1[is_ab] / (d1[is_ab] - d3[is_ab])
        result[is_ab] = a[is_ab] + v[:, None] * ab[is_ab]
    remain &= ~is_ab

    cp = q - c
    d5 = _dot(ab, cp)
    d6 = _dot(ac, cp)
    is_c = remain & (d6 >= 0) & (d5 <= d6)
    result[is_c] = c[is_c]
    remain &= ~is_c

    vb = d5 * d2 - d1 * d6
    is_ac = remain & (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    if np.any(is_ac):
        w = d2[is_ac] / (d2[is_ac] - d6[is_ac])
        result[is_ac] = a[is_ac] + w[:, None] * ac[is_ac]
    remain &= ~is_ac

    va = d3 * d6 - d5 * d4
    is_bc = remain & (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0)
    if np.any(is_bc):
        d43 = d4[is_bc] - d3[is_bc]
        w = d43 / (d43 + (d5[is_bc] - d6[is_bc]))
        result[is_bc] = b[is_bc] + w[:, None] * (c[is_bc] - b[is_bc])
    remain &= ~is_bc

    if np.any(remain):
        denom = 1.0 / (va[remain] + vb[remain] + vc[remain])
        v = vb[remain] * denom
        w = vc[remain] * denom
        result[remain] = a[remain] + ab[remain] * v[:, None] + ac[remain] * w[:, None]
    return result


def _pair_distances(tri: np.ndarray, q: np.ndarray) -> np.ndarray:
    cp = closest_point_on_triangles(tri[:, 0], tri[:, 1], tri[:, 2], q)
    return np.sqrt(((q - cp) ** 2).sum(axis=1))


def _flatten(candidates) -> Tuple[np.ndarray, np.ndarray]:
    lengths = np.fromiter((len(c) for c in candidates), dtype=np.int64, count=len(candidates))
    pi = np.repeat(np.arange(len(candidates)), lengths)
    ti = np.concatenate([np.asarray(c, dtype=np.int64) for c in candidates]) if lengths.sum() else np.zeros(0, np.int64)
    return pi, ti


class MeshQuery:
    """Reusable distance / inside queries against one mesh. Read-only after construction."""

    def __init__(self, mesh: TriMesh, brute: bool = False):
        if mesh.is_empty:
            raise DegenerateInputError("signed distance needs a non-empty mesh", field="triangles")
        self.mesh = mesh
        self.brute = brute
        self.tri = mesh.triangle_corners()
        self.extent = max(mesh.extent(), np.finfo(float).tiny)
        self._slack = 1e-9 * self.extent
        if not brute:
            centroids = self.tri.mean(axis=1)
            self._tree = cKDTree(centroids)
            self._r_max = float(np.max(np.linalg.norm(self.tri - centroids[:, None, :], axis=2)))
            self._trees_2d = []
            for axis in range(3):
                keep = [i for i in range(3) if i != axis]
                c2 = centroids[:, keep]
                r2 = float(np.max(np.linalg.norm(self.tri[:, :, keep] - c2[:, None, :], axis=2)))
                self._trees_2d.append((cKDTree(c2), r2))

    @property
    def sign_reliable(self) -> bool:
        return self.mesh.watertight

    # -- candidate pairs -------------------------------------------------

    def _all_pairs(self, n: int):
        m = len(self.tri)
        return np.repeat(np.arange(n), m), np.tile(np.arange(m), n)

    def _distance_pairs(self, pts: np.ndarray):
        if self.brute:
            return self._all_pairs(len(pts))
        k = min(config.NEAREST_CENTROIDS, len(self.tri))
        _, idx = self._tree.query(pts, k=k)
        idx = np.asarray(idx).reshape(len(pts), k)
        upper = _pair_distances(self.tri[idx.ravel()], np.repeat(pts, k, axis=0)).reshape(len(pts), k).min(axis=1)
        cand = self._tree.query_ball_point(pts, upper + self._r_max + self._slack)
        return _flatten(cand)

    def _ray_pairs(self, pts: np.ndarray, axis: int):
        if self.brute:
            return self._all_pairs(len(pts))
        tree, r2 = self._trees_2d[axis]
        keep = [i for i in range(3) if i != axis]
        return _flatten(tree.query_ball_point(pts[:, keep], r2 + self._slack))

    def _blocks(self, n: int):
        step = config.INDEX_BLOCK if not self.brute else max(1, config.BRUTE_PAIR_BUDGET // len(self.tri))
        for s in range(0, n, step):
            yield s, min(n, s + step)

    # -- queries ---------------------------------------------------------

    def unsigned(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        out = np.full(len(pts), np.inf)
        for s, e in self._blocks(len(pts)):
            block = pts[s:e]
            pi, ti = self._distance_pairs(block)
            d = _pair_distances(self.tri[ti], block[pi])
            part = np.full(len(block), np.inf)
            np.minimum.at(part, pi, d)
            out[s:e] = part
        return out

    def _crossings(self, pts: np.ndarray, axis: int) -> Tuple[np.ndarray, np.ndarray]:
        """Crossings of the +axis ray from each point, and whether the ray grazed an edge."""
        counts = np.zeros(len(pts), dtype=np.int64)
        grazed = np.zeros(len(pts), dtype=bool)
        b_ax, c_ax = [i for i in range(3) if i != axis]
        for s, e in self._blocks(len(pts)):
            block = pts[s:e]
            pi, ti = self._ray_pairs(block, axis)
            if len(pi) == 0:
                continue
            t = self.tri[ti]
            p = block[pi]
            v0 = t[:, 1, [b_ax, c_ax]] - t[:, 0, [b_ax, c_ax]]
            v1 = t[:, 2, [b_ax, c_ax]] - t[:, 0, [b_ax, c_ax]]
            v2 = p[:, [b_ax, c_ax]] - t[:, 0, [b_ax, c_ax]]
            den = v0[:, 0] * v1[:, 1] - v1[:, 0] * v0[:, 1]
            scale = (v0 ** 2).sum(axis=1) + (v1 ** 2).sum(axis=1)
            valid = np.abs(den) > 1e-14 * scale
            den = np.where(valid, den, 1.0)
            l1 = (v2[:, 0] * v1[:, 1] - v1[:, 0] * v2[:, 1]) / den
            l2 = (v0[:, 0] * v2[:, 1] - v2[:, 0] * v0[:, 1]) / den
            l0 = 1.0 - l1 - l2
            lmin = np.minimum(np.minimum(l0, l1), l2)
            hit_at = l0 * t[:, 0, axis] + l1 * t[:, 1, axis] + l2 * t[:, 2, axis]
            ahead = hit_at > p[:, axis]
            crossing = valid & ahead & (lmin > config.BARY_TOL)
            graze = valid & ahead & (np.abs(lmin) <= config.BARY_TOL)
            np.add.at(counts[s:e], pi, crossing.astype(np.int64))
            g = np.zeros(e - s, dtype=bool)
            g[pi[graze]] = True
            grazed[s:e] |= g
        return counts, grazed

    def _axis_inside(self, pts: np.ndarray, axis: int) -> np.ndarray:
        counts, grazed = self._crossings(pts, axis)
        inside = (counts % 2) == 1
        todo = np.flatnonzero(grazed)
        for attempt in range(1, config.MAX_PERTURB_RETRIES + 1):
            if len(todo) == 0:
                break
            offset = attempt * config.PERTURB_SCALE * self.extent * _PERTURB_DIR
            c, g = self._crossings(pts[todo] + offset, axis)
            inside[todo] = (c % 2) == 1
            todo = todo[g]
        return inside

    def inside(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        votes = sum(self._axis_inside(pts, axis).astype(np.int64) for axis in range(3))
        return votes >= 2

    def signed(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        d = self.unsigned(pts)
        return np.where(self.inside(pts), -d, d)


def signed_distance(mesh: TriMesh, p) -> float:
    return float(MeshQuery(mesh).signed(np.asarray(p, dtype=np.float64).reshape(1, 3))[0])


def signed_distances(mesh: TriMesh, points, threads: int = 1, brute: bool = False,
                     chunk_size: int = config.CHUNK_SIZE) -> np.ndarray:
    """Signed distance for every point; chunks are index-ordered so results do not depend on threads."""
    query = MeshQuery(mesh, brute=brute)
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    chunks = [pts[s:s + chunk_size] for s in range(0, len(pts), chunk_size)]
    if not chunks:
        return np.zeros(0)
    if threads <= 1:
        parts = [query.signed(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            parts = list(executor.map(query.signed, chunks))
    return np.concatenate(parts)
