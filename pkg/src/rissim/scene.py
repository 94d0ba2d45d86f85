"""World model: walls, one rotatable RIS panel, a transmitter and receivers.

Scene files are JSON documents with the sections ``bounds``, ``walls``,
``ris``, ``tx`` and ``receivers``; see ``SCENE_FORMAT.md`` at the repository
root for the full schema.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .errors import AngleNotAllowed, GeometryError, ParseError, ValidationError
from .geometry import Point, Segment, rotate_segment

DEFAULT_ANGLES: Tuple[float, ...] = (-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0)


class ReceiverRole(str, enum.Enum):
    SENSOR = "sensor"
    DESIRED = "desired"
    INTERFERED = "interfered"


DEFAULT_THRESHOLDS = {
    ReceiverRole.SENSOR: -95.0,
    ReceiverRole.DESIRED: -85.0,
    ReceiverRole.INTERFERED: -85.0,
}


@dataclass(frozen=True)
class Bounds:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    def contains(self, p: Point) -> bool:
        """Strict interior test."""
        return self.xmin < p.x < self.xmax and self.ymin < p.y < self.ymax

    def rectangle(self) -> List[Segment]:
        c = [
            Point(self.xmin, self.ymin),
            Point(self.xmax, self.ymin),
            Point(self.xmax, self.ymax),
            Point(self.xmin, self.ymax),
        ]
        return [Segment(c[i], c[(i + 1) % 4]) for i in range(4)]


@dataclass(frozen=True)
class Transmitter:
    position: Point
    power_dbm: float = 20.0
    frequency_hz: float = 3.5e9


@dataclass(frozen=True)
class Receiver:
    name: str
    position: Point
    role: ReceiverRole
    threshold_dbm: float

    def satisfied(self, power_dbm: float) -> bool:
        if self.role is ReceiverRole.INTERFERED:
            return power_dbm < self.threshold_dbm
        return power_dbm >= self.threshold_dbm


@dataclass(frozen=True)
class RisPanel:
    segment: Segment
    allowed_angles: Tuple[float, ...] = DEFAULT_ANGLES

    @property
    def pivot(self) -> Point:
        return self.segment.midpoint

    def at(self, angle: float) -> Segment:
        return rotate_segment(self.segment, angle, self.pivot)


@dataclass(frozen=True)
class Scene:
    bounds: Bounds
    walls: Tuple[Segment, ...]
    ris: RisPanel
    tx: Transmitter
    receivers: Tuple[Receiver, ...]
    ris_angle: float = 0.0
    _names: Dict[str, int] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "walls", tuple(self.walls))
        object.__setattr__(self, "receivers", tuple(self.receivers))
        object.__setattr__(self, "_names", {r.name: i for i, r in enumerate(self.receivers)})
        validate_scene(self)

    @property
    def ris_segment(self) -> Segment:
        return self.ris.at(self.ris_angle)

    def effective_walls(self) -> Tuple[Segment, ...]:
        """Walls plus the RIS at its current angle; exact duplicates dropped."""
        out: List[Segment] = []
        for s in self.walls + (self.ris_segment,):
            if not any(_same_segment(s, o) for o in out):
                out.append(s)
        return tuple(out)

    def receiver(self, name: str) -> Receiver:
        from .errors import UnknownReceiver

        try:
            return self.receivers[self._names[name]]
        except KeyError:
            raise UnknownReceiver(f"no receiver named {name!r}") from None

    @property
    def receiver_names(self) -> Tuple[str, ...]:
        return tuple(r.name for r in self.receivers)

    def with_receivers(self, names: Sequence[str]) -> Scene:
        return replace(self, receivers=tuple(self.receiver(n) for n in names))

    def with_role(self, name: str, role: ReceiverRole, threshold_dbm: Optional[float] = None) -> Scene:
        old = self.receiver(name)
        new = replace(old, role=role, threshold_dbm=old.threshold_dbm if threshold_dbm is None else threshold_dbm)
        return replace(self, receivers=tuple(new if r.name == name else r for r in self.receivers))

    def digest(self) -> str:
        """Content hash of the scene at its reference pose."""
        return hashlib.sha256(dump_scene(replace(self, ris_angle=0.0)).encode()).hexdigest()


def _same_segment(s: Segment, o: Segment) -> bool:
    return (s.a.isclose(o.a) and s.b.isclose(o.b)) or (s.a.isclose(o.b) and s.b.isclose(o.a))


def validate_scene(scene: Scene) -> None:
    b = scene.bounds
    if not all(math.isfinite(v) for v in (b.xmin, b.ymin, b.xmax, b.ymax)) or b.xmax <= b.xmin or b.ymax <= b.ymin:
        raise ValidationError("bounds", "must be a finite rectangle with xmax > xmin and ymax > ymin")
    if not b.contains(scene.tx.position):
        raise ValidationError("tx.position", "transmitter must lie strictly inside bounds")
    if not math.isfinite(scene.tx.power_dbm):
        raise ValidationError("tx.power_dbm", "must be finite")
    if not (math.isfinite(scene.tx.frequency_hz) and scene.tx.frequency_hz > 0):
        raise ValidationError("tx.frequency_hz", "must be positive")
    seen = set()
    for i, r in enumerate(scene.receivers):
        where = f"receivers[{i}] ({r.name})"
        if r.name in seen:
            raise ValidationError(where, "duplicate receiver name")
        seen.add(r.name)
        if not b.contains(r.position):
            raise ValidationError(f"{where}.position", "receiver must lie strictly inside bounds")
        if not math.isfinite(r.threshold_dbm):
            raise ValidationError(f"{where}.threshold_dbm", "must be finite")
        if r.position.isclose(scene.tx.position, 1e-3):
            raise ValidationError(f"{where}.position", "receiver coincides with transmitter")
    angles = scene.ris.allowed_angles
    if not angles:
        raise ValidationError("ris.angles", "must be non-empty")
    if any(not math.isfinite(a) for a in angles) or any(x >= y for x, y in zip(angles, angles[1:])):
        raise ValidationError("ris.angles", "must be finite and strictly increasing")
    if scene.ris_angle not in angles:
        raise AngleNotAllowed(f"angle {scene.ris_angle:g} not in allowed set {list(angles)}")
    if not any(scene.ris.segment.is_parallel(w, 1e-6) for w in scene.walls):
        raise ValidationError("ris", "reference pose must be parallel to one of the walls")


def apply_ris_angle(scene: Scene, angle: float) -> Scene:
    if angle not in scene.ris.allowed_angles:
        raise AngleNotAllowed(f"angle {angle:g} not in allowed set {list(scene.ris.allowed_angles)}")
    return replace(scene, ris_angle=float(angle))


# ---------------------------------------------------------------------------
# scene files


def _pt(v: Any, where: str) -> Point:
    if not (isinstance(v, (list, tuple)) and len(v) == 2 and all(_is_num(c) for c in v)):
        raise ParseError(f"{where}: expected [x, y]")
    try:
        return Point(float(v[0]), float(v[1]))
    except GeometryError as e:
        raise ValidationError(where, str(e)) from None


def _is_num(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _num(obj: dict, key: str, where: str, default: Optional[float] = None) -> float:
    if key not in obj:
        if default is None:
            raise ParseError(f"{where}.{key}: missing")
        return default
    v = obj[key]
    if not _is_num(v):
        raise ParseError(f"{where}.{key}: expected a number")
    return float(v)


def _section(doc: dict, key: str, kind: type) -> Any:
    if key not in doc:
        raise ParseError(f"{key}: missing section")
    if not isinstance(doc[key], kind):
        raise ParseError(f"{key}: expected {'an object' if kind is dict else 'a list'}")
    return doc[key]


def _seg(obj: Any, where: str) -> Segment:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object with 'a' and 'b'")
    for k in ("a", "b"):
        if k not in obj:
            raise ParseError(f"{where}.{k}: missing")
    try:
        return Segment(_pt(obj["a"], f"{where}.a"), _pt(obj["b"], f"{where}.b"))
    except GeometryError as e:
        raise ValidationError(where, str(e)) from None


def load_scene(text: str) -> Scene:
    """Parse and validate scene-file contents."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"not valid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")

    bd = _section(doc, "bounds", dict)
    bounds = Bounds(*(_num(bd, k, "bounds") for k in ("xmin", "ymin", "xmax", "ymax")))

    walls = [_seg(w, f"walls[{i}]") for i, w in enumerate(_section(doc, "walls", list))]

    rd = _section(doc, "ris", dict)
    seg = _seg(rd, "ris")
    if "pivot" in rd and not _pt(rd["pivot"], "ris.pivot").isclose(seg.midpoint, 1e-9):
        raise ValidationError("ris.pivot", "pivot must be the segment midpoint")
    angles = rd.get("angles", list(DEFAULT_ANGLES))
    if not isinstance(angles, list) or not all(_is_num(a) for a in angles):
        raise ParseError("ris.angles: expected a list of numbers")
    ris = RisPanel(seg, tuple(float(a) for a in angles))

    td = _section(doc, "tx", dict)
    if "position" not in td:
        raise ParseError("tx.position: missing")
    tx = Transmitter(
        _pt(td["position"], "tx.position"),
        _num(td, "power_dbm", "tx", 20.0),
        _num(td, "frequency_hz", "tx", 3.5e9),
    )

    receivers = []
    for i, rd in enumerate(_section(doc, "receivers", list)):
        where = f"receivers[{i}]"
        if not isinstance(rd, dict):
            raise ParseError(f"{where}: expected an object")
        name = rd.get("name")
        if not isinstance(name, str) or not name:
            raise ParseError(f"{where}.name: expected a non-empty string")
        try:
            role = ReceiverRole(rd.get("role"))
        except ValueError:
            raise ParseError(f"{where}.role: expected one of sensor, desired, interfered") from None
        if "position" not in rd:
            raise ParseError(f"{where}.position: missing")
        receivers.append(
            Receiver(
                name,
                _pt(rd["position"], f"{where}.position"),
                role,
                _num(rd, "threshold_dbm", where, DEFAULT_THRESHOLDS[role]),
            )
        )

    return Scene(bounds, tuple(walls), ris, tx, tuple(receivers))


def dump_scene(scene: Scene) -> str:
    """Serialize to the scene-file format. ``load_scene`` inverts this exactly."""

    def seg(s: Segment) -> dict:
        return {"a": [s.a.x, s.a.y], "b": [s.b.x, s.b.y]}

    b = scene.bounds
    doc = {
        "bounds": {"xmin": b.xmin, "ymin": b.ymin, "xmax": b.xmax, "ymax": b.ymax},
        "walls": [seg(w) for w in scene.walls],
        "ris": {**seg(scene.ris.segment), "angles": list(scene.ris.allowed_angles)},
        "tx": {
            "position": [scene.tx.position.x, scene.tx.position.y],
            "power_dbm": scene.tx.power_dbm,
            "frequency_hz": scene.tx.frequency_hz,
        },
        "receivers": [
            {
                "name": r.name,
                "position": [r.position.x, r.position.y],
                "role": r.role.value,
                "threshold_dbm": r.threshold_dbm,
            }
            for r in scene.receivers
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def read_scene(path) -> Scene:
    with open(path, encoding="utf-8") as f:
        return load_scene(f.read())


def canonical_scene_text() -> str:
    return resources.files("rissim").joinpath("data/canonical.scene").read_text(encoding="utf-8")


def canonical_scene() -> Scene:
    """The reference room layout used by the fixture tests and the CLI demos."""
    return load_scene(canonical_scene_text())
