"""Image-method specular ray tracing, path loss and coverage grids.

The tracer mirrors the transmitter across wall lines (recursively, never twice
in a row across the same wall) to build an image tree once per scene pose.
Each image is then validated against a batch of receiver positions at once:
back-trace the bounce points, require every bounce to land on its segment,
then reject paths whose legs are crossed by any wall. Everything downstream
(point queries, heatmaps) goes through the same batched core.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import DegeneratePath, GridTooLarge
from .geometry import EPS, EPS_T, Point, Segment, mirror_point
from .scene import Bounds, Scene

MAX_GRID_CELLS = 10_000_000
MIN_PATH_LENGTH = 1e-3
FSPL_CONST_DB = -147.55


class Summation(str, enum.Enum):
    POWER_SUM = "power_sum"
    STRONGEST_PATH = "strongest_path"


@dataclass(frozen=True)
class PropagationParams:
    max_order: int = 3
    reflection_loss_db: float = 3.0
    summation: Summation = Summation.POWER_SUM
    noise_floor_dbm: float = -200.0

    def __post_init__(self):
        if not (isinstance(self.max_order, int) and 0 <= self.max_order <= 4):
            raise ValueError(f"max_order must be an integer in [0, 4], got {self.max_order!r}")
        if not (math.isfinite(self.reflection_loss_db) and self.reflection_loss_db >= 0):
            raise ValueError("reflection_loss_db must be finite and >= 0")
        if not math.isfinite(self.noise_floor_dbm):
            raise ValueError("noise_floor_dbm must be finite")
        object.__setattr__(self, "summation", Summation(self.summation))


@dataclass(frozen=True)
class RayPath:
    vertices: Tuple[Point, ...]
    bounce_segments: Tuple[Segment, ...]
    length_m: float
    wall_ids: Tuple[int, ...] = ()

    @property
    def order(self) -> int:
        return len(self.bounce_segments)


def fspl_db(distance_m, frequency_hz: float):
    return 20.0 * np.log10(distance_m) + 20.0 * math.log10(frequency_hz) + FSPL_CONST_DB


def path_gain_db(path: RayPath, freq: float, params: PropagationParams) -> float:
    if path.length_m < MIN_PATH_LENGTH:
        raise DegeneratePath(f"path length {path.length_m:g} m is below {MIN_PATH_LENGTH} m")
    return -(float(fspl_db(path.length_m, freq)) + path.order * params.reflection_loss_db)


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


class ImageTracer:
    """Image tree for one transmitter among fixed walls.

    ``walls`` is any sequence of segments; wall indices in results refer to it.
    """

    def __init__(self, walls: Sequence[Segment], tx: Point, max_order: int):
        self.walls = tuple(walls)
        self.tx = tx
        self.max_order = max_order
        self._wa = np.array([[w.a.x, w.a.y] for w in self.walls], dtype=float).reshape(-1, 2)
        self._wb = np.array([[w.b.x, w.b.y] for w in self.walls], dtype=float).reshape(-1, 2)
        self._we = self._wb - self._wa
        self._wlen = np.hypot(self._we[:, 0], self._we[:, 1])
        self._tx = np.array([tx.x, tx.y])
        self.nodes = self._build_tree()

    def _build_tree(self) -> List[Tuple[Tuple[int, ...], Tuple[np.ndarray, ...]]]:
        # (wall sequence, images after each mirroring), breadth-first
        nodes = [((), ())]
        frontier = [((), (), self.tx)]
        for _ in range(self.max_order):
            nxt = []
            for seq, imgs, src in frontier:
                for w, seg in enumerate(self.walls):
                    if seq and seq[-1] == w:
                        continue
                    # an image on the wall line would mirror onto itself
                    if abs((src - seg.a).cross(seg.direction)) <= EPS:
                        continue
                    img = mirror_point(src, seg)
                    item = (seq + (w,), imgs + (np.array([img.x, img.y]),), img)
                    nxt.append(item)
                    nodes.append(item[:2])
            frontier = nxt
        return nodes

    def _occluded(self, s: np.ndarray, t: np.ndarray) -> np.ndarray:
        """Which legs s->t (n,2) are crossed by any wall strictly between their ends."""
        if len(self.walls) == 0:
            return np.zeros(len(s), dtype=bool)
        d = (t - s)[:, None, :]
        leg_len = np.hypot(d[..., 0], d[..., 1])
        w0 = self._wa[None, :, :] - s[:, None, :]
        e = self._we[None, :, :]
        denom = _cross(d, e)
        ok = np.abs(denom) > EPS * leg_len * self._wlen[None, :]
        denom = np.where(ok, denom, 1.0)
        tt = _cross(w0, e) / denom
        uu = _cross(w0, d) / denom
        lo = EPS_T / leg_len
        slack = EPS / self._wlen[None, :]
        hit = ok & (tt > lo) & (tt < 1.0 - lo) & (uu >= -slack) & (uu <= 1.0 + slack)
        return hit.any(axis=1)

    def trace(self, rx: np.ndarray, with_points: bool = False):
        """Yield ``(node_index, order, valid_rows, lengths, bounce_points)`` per image.

        ``rx`` is an (n, 2) array. ``bounce_points`` is a list of (m, 2) arrays
        in path order, or None when ``with_points`` is false.
        """
        rx = np.asarray(rx, dtype=float).reshape(-1, 2)
        for ni, (seq, imgs) in enumerate(self.nodes):
            k = len(seq)
            rows = np.arange(len(rx))
            p = rx
            pts: List[np.ndarray] = []
            for j in range(k - 1, -1, -1):
                w, img = seq[j], imgs[j]
                d = p - img
                dlen = np.hypot(d[:, 0], d[:, 1])
                e = self._we[w]
                w0 = self._wa[w] - img
                denom = _cross(d, e)
                ok = np.abs(denom) > EPS * dlen * self._wlen[w]
                denom = np.where(ok, denom, 1.0)
                s = _cross(w0[None, :], e[None, :]) / denom
                u = _cross(w0[None, :], d) / denom
                lo = EPS_T / np.maximum(dlen, EPS)
                slack = EPS / self._wlen[w]
                ok &= (s > lo) & (s < 1.0 - lo) & (u >= -slack) & (u <= 1.0 + slack)
                q = img + s[:, None] * d
                rows, p = rows[ok], q[ok]
                pts = [a[ok] for a in pts]
                pts.insert(0, p)
                if len(rows) == 0:
                    break
            if len(rows) == 0:
                continue
            verts = [np.broadcast_to(self._tx, (len(rows), 2))] + pts + [rx[rows]]
            keep = np.ones(len(rows), dtype=bool)
            for a, b in zip(verts, verts[1:]):
                keep &= ~self._occluded(a, b)
            if not keep.any():
                continue
            verts = [v[keep] for v in verts]
            length = np.zeros(int(keep.sum()))
            for a, b in zip(verts, verts[1:]):
                length += np.hypot(b[:, 0] - a[:, 0], b[:, 1] - a[:, 1])
            yield ni, k, rows[keep], length, (verts[1:-1] if with_points else None)

    def paths(self, rx: Point) -> List[RayPath]:
        out: List[RayPath] = []
        for ni, _k, _rows, length, pts in self.trace(np.array([[rx.x, rx.y]]), with_points=True):
            seq = self.nodes[ni][0]
            verts = (self.tx,) + tuple(Point(float(q[0, 0]), float(q[0, 1])) for q in pts) + (rx,)
            path = RayPath(verts, tuple(self.walls[w] for w in seq), float(length[0]), seq)
            if not any(_same_vertices(path, o) for o in out):
                out.append(path)
        return out


def _same_vertices(p: RayPath, o: RayPath) -> bool:
    return len(p.vertices) == len(o.vertices) and all(a.isclose(b) for a, b in zip(p.vertices, o.vertices))


def tracer_for(scene: Scene, params: PropagationParams) -> ImageTracer:
    return ImageTracer(scene.effective_walls(), scene.tx.position, params.max_order)


def trace_paths(scene: Scene, rx_pos: Point, params: PropagationParams) -> List[RayPath]:
    return tracer_for(scene, params).paths(rx_pos)


def combine_dbm(levels_dbm: Sequence[float], params: PropagationParams) -> float:
    if len(levels_dbm) == 0:
        return params.noise_floor_dbm
    if params.summation is Summation.STRONGEST_PATH:
        total = max(levels_dbm)
    else:
        lin = 0.0
        for v in levels_dbm:
            lin += 10.0 ** (v / 10.0)
        total = 10.0 * math.log10(lin) if lin > 0 else params.noise_floor_dbm
    return max(total, params.noise_floor_dbm)


def received_power_dbm(scene: Scene, rx_pos: Point, params: PropagationParams) -> float:
    return _power_from_paths(scene, trace_paths(scene, rx_pos, params), params)


def _power_from_paths(scene: Scene, paths: Sequence[RayPath], params: PropagationParams) -> float:
    f = scene.tx.frequency_hz
    return combine_dbm([scene.tx.power_dbm + path_gain_db(p, f, params) for p in paths], params)


def receiver_powers(scene: Scene, params: PropagationParams, tracer: Optional[ImageTracer] = None) -> List[float]:
    """Received power at every scene receiver, in receiver order."""
    tracer = tracer or tracer_for(scene, params)
    return [_power_from_paths(scene, tracer.paths(r.position), params) for r in scene.receivers]


# ---------------------------------------------------------------------------
# coverage grids


@dataclass(frozen=True)
class GridSpec:
    """Cells of side ``spacing`` tiling ``bounds``; row 0 is the top (max y) row."""

    spacing: float
    bounds: Bounds

    def __post_init__(self):
        if not (math.isfinite(self.spacing) and self.spacing > 0):
            raise ValueError("grid spacing must be positive")

    @property
    def shape(self) -> Tuple[int, int]:
        nx = max(1, int(round(self.bounds.width / self.spacing)))
        ny = max(1, int(round(self.bounds.height / self.spacing)))
        return ny, nx

    def centers(self) -> Tuple[np.ndarray, np.ndarray]:
        ny, nx = self.shape
        xs = self.bounds.xmin + (np.arange(nx) + 0.5) * self.spacing
        ys = self.bounds.ymax - (np.arange(ny) + 0.5) * self.spacing
        return xs, ys

    def cell_of(self, p: Point) -> Tuple[int, int]:
        ny, nx = self.shape
        j = int(math.floor((p.x - self.bounds.xmin) / self.spacing))
        i = int(math.floor((self.bounds.ymax - p.y) / self.spacing))
        return min(max(i, 0), ny - 1), min(max(j, 0), nx - 1)

    @classmethod
    def around(cls, p: Point, spacing: float) -> GridSpec:
        """A single cell centred on ``p``."""
        h = spacing / 2
        return cls(spacing, Bounds(p.x - h, p.y - h, p.x + h, p.y + h))


def coverage_grid(scene: Scene, grid: GridSpec, params: PropagationParams) -> np.ndarray:
    """Received power (dBm) at every cell centre as an (ny, nx) array.

    Cells are independent; the result does not depend on evaluation order.
    Cell centres lying on a wall read the noise floor, and centres within
    1 mm of the transmitter read the transmit power.
    """
    ny, nx = grid.shape
    if ny * nx > MAX_GRID_CELLS:
        raise GridTooLarge(f"{ny}x{nx} = {ny * nx} cells exceeds {MAX_GRID_CELLS}")
    xs, ys = grid.centers()
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])

    tracer = tracer_for(scene, params)
    on_wall = np.zeros(len(pts), dtype=bool)
    for w in tracer.walls:
        on_wall |= _point_segment_distance(pts, w) <= EPS
    at_tx = np.hypot(pts[:, 0] - scene.tx.position.x, pts[:, 1] - scene.tx.position.y) < MIN_PATH_LENGTH
    live = ~(on_wall | at_tx)
    live_idx = np.flatnonzero(live)

    p_tx = scene.tx.power_dbm
    c_f = 20.0 * math.log10(scene.tx.frequency_hz) + FSPL_CONST_DB
    strongest = params.summation is Summation.STRONGEST_PATH
    acc = np.full(len(live_idx), -np.inf) if strongest else np.zeros(len(live_idx))
    for _ni, k, rows, length, _ in tracer.trace(pts[live_idx]):
        level = p_tx - (20.0 * np.log10(length) + c_f + k * params.reflection_loss_db)
        if strongest:
            acc[rows] = np.maximum(acc[rows], level)
        else:
            acc[rows] += 10.0 ** (level / 10.0)

    floor = params.noise_floor_dbm
    if strongest:
        vals = np.where(np.isfinite(acc), acc, floor)
    else:
        with np.errstate(divide="ignore"):
            vals = np.where(acc > 0, 10.0 * np.log10(acc), floor)
    out = np.full(len(pts), floor)
    out[live_idx] = np.maximum(vals, floor)
    out[at_tx] = max(p_tx, floor)
    return out.reshape(ny, nx)


def _point_segment_distance(pts: np.ndarray, seg: Segment) -> np.ndarray:
    a = np.array([seg.a.x, seg.a.y])
    ab = np.array([seg.b.x - seg.a.x, seg.b.y - seg.a.y])
    u = np.clip(((pts - a) @ ab) / (ab @ ab), 0.0, 1.0)
    proj = a + u[:, None] * ab
    return np.hypot(pts[:, 0] - proj[:, 0], pts[:, 1] - proj[:, 1])


def grid_to_csv(values: np.ndarray) -> str:
    return "".join(",".join(f"{v:.2f}" for v in row) + "\n" for row in values)


def grid_to_pgm(values: np.ndarray, low_dbm: float, high_dbm: float) -> bytes:
    """Binary 8-bit PGM, mapping ``low_dbm``..``high_dbm`` linearly to 0..255."""
    ny, nx = values.shape
    span = high_dbm - low_dbm
    scaled = (values - low_dbm) / span * 255.0 if span > 0 else np.zeros_like(values)
    pix = np.clip(np.rint(scaled), 0, 255).astype(np.uint8)
    return f"P5\n{nx} {ny}\n255\n".encode("ascii") + pix.tobytes()
