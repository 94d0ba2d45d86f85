"""Slotted RIS control: static, periodic sweep and probe-then-exploit policies."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import AngleNotAllowed
from .propagation import PropagationParams, receiver_powers, tracer_for
from .scene import Receiver, ReceiverRole, Scene, apply_ris_angle


class PolicyKind(str, enum.Enum):
    STATIC = "static"
    PERIODIC = "periodic"
    CONTEXT_AWARE = "context"


class SelectionMode(str, enum.Enum):
    ALL_BEST = "all-best"
    MINIMAL_COVER = "minimal-cover"


@dataclass(frozen=True)
class Policy:
    kind: PolicyKind
    angle: Optional[float] = None
    mode: Optional[SelectionMode] = None

    @classmethod
    def static(cls, angle: float) -> Policy:
        return cls(PolicyKind.STATIC, angle=float(angle))

    @classmethod
    def periodic(cls) -> Policy:
        return cls(PolicyKind.PERIODIC)

    @classmethod
    def context(cls, mode: SelectionMode = SelectionMode.ALL_BEST) -> Policy:
        return cls(PolicyKind.CONTEXT_AWARE, mode=SelectionMode(mode))

    @classmethod
    def parse(cls, spec: str) -> Policy:
        """Parse ``static:<angle>``, ``periodic``, ``context:all-best`` or ``context:minimal-cover``."""
        head, _, arg = spec.strip().partition(":")
        if head == "static" and arg:
            try:
                return cls.static(float(arg))
            except ValueError:
                pass
        elif head == "periodic" and not arg:
            return cls.periodic()
        elif head == "context":
            try:
                return cls.context(SelectionMode(arg))
            except ValueError:
                pass
        raise ValueError(f"bad policy spec {spec!r}; expected static:<angle>, periodic, context:all-best or context:minimal-cover")

    def __str__(self) -> str:
        if self.kind is PolicyKind.STATIC:
            return f"static:{self.angle:g}"
        if self.kind is PolicyKind.PERIODIC:
            return "periodic"
        return f"context:{self.mode.value}"


@dataclass(frozen=True)
class TimelineConfig:
    total_slots: int = 96
    dwell_slots: int = 2
    probe_dwell: int = 1

    def __post_init__(self):
        if self.total_slots <= 0:
            raise ValueError("total_slots must be positive")
        if self.dwell_slots < 1 or self.probe_dwell < 1:
            raise ValueError("dwell_slots and probe_dwell must be >= 1")

    def probe_slots(self, n_angles: int) -> int:
        return n_angles * self.probe_dwell


def angle_for_slot(
    policy: Policy,
    slot: int,
    angles: Sequence[float],
    timeline: TimelineConfig,
    selected: Optional[Sequence[float]] = None,
) -> float:
    """RIS angle in force during ``slot``.

    ``selected`` is the exploit-phase angle set of a context-aware policy; it is
    only consulted once the probe sweep is over.
    """
    if slot < 0:
        raise ValueError("slot must be >= 0")
    if policy.kind is PolicyKind.STATIC:
        return policy.angle
    if policy.kind is PolicyKind.PERIODIC:
        return angles[(slot // timeline.dwell_slots) % len(angles)]
    n_probe = timeline.probe_slots(len(angles))
    if slot < n_probe:
        return angles[slot // timeline.probe_dwell]
    if not selected:
        raise ValueError("context-aware policy needs a selected angle set after the probe phase")
    return selected[((slot - n_probe) // timeline.dwell_slots) % len(selected)]


# ---------------------------------------------------------------------------
# probe reports and angle selection


@dataclass(frozen=True)
class ProbeReport:
    """Received power per allowed angle (rows) and receiver (columns)."""

    angles: Tuple[float, ...]
    receivers: Tuple[str, ...]
    powers: Tuple[Tuple[float, ...], ...]

    def __post_init__(self):
        if len(self.powers) != len(self.angles) or any(len(r) != len(self.receivers) for r in self.powers):
            raise ValueError("probe report must have one row per angle and one column per receiver")

    def column(self, name: str) -> List[float]:
        j = self.receivers.index(name)
        return [row[j] for row in self.powers]


@dataclass(frozen=True)
class CoverResult:
    angles: Tuple[float, ...]
    feasible: bool


def _tie_key(angle: float) -> Tuple[float, float]:
    return (abs(angle), angle)


def select_best_angles(report: ProbeReport, receivers: Sequence[Receiver]) -> Dict[str, float]:
    """Each receiver's preferred angle: strongest for sensors and desired
    receivers, weakest for interfered ones. Ties go to the angle nearest 0,
    then to the smaller angle."""
    out = {}
    for r in receivers:
        col = report.column(r.name)
        sign = -1.0 if r.role is ReceiverRole.INTERFERED else 1.0
        best = max(sign * v for v in col)
        candidates = [a for a, v in zip(report.angles, col) if sign * v == best]
        out[r.name] = min(candidates, key=_tie_key)
    return out


def minimal_angle_cover(report: ProbeReport, receivers: Sequence[Receiver]) -> CoverResult:
    """Smallest angle set that serves every sensor/desired receiver at least once
    while keeping every interfered receiver below threshold at all its angles.

    Equal-size candidates are ranked by their ascending angle lists. When no
    set works, the per-receiver best angles are returned with ``feasible=False``.
    """
    angles = sorted(report.angles)
    col = {r.name: dict(zip(report.angles, report.column(r.name))) for r in receivers}
    victims = [r for r in receivers if r.role is ReceiverRole.INTERFERED]
    served = [r for r in receivers if r.role is not ReceiverRole.INTERFERED]

    usable = [a for a in angles if all(r.satisfied(col[r.name][a]) for r in victims)]
    needs = [frozenset(a for a in usable if r.satisfied(col[r.name][a])) for r in served]
    if usable and all(needs):
        for k in range(1, len(usable) + 1):
            for combo in itertools.combinations(usable, k):
                chosen = set(combo)
                if all(n & chosen for n in needs):
                    return CoverResult(combo, True)
    best = select_best_angles(report, receivers)
    return CoverResult(tuple(sorted(set(best.values()))), False)


def select_angles(policy: Policy, report: ProbeReport, receivers: Sequence[Receiver]) -> CoverResult:
    if policy.mode is SelectionMode.MINIMAL_COVER:
        return minimal_angle_cover(report, receivers)
    return CoverResult(tuple(sorted(set(select_best_angles(report, receivers).values()))), True)


# ---------------------------------------------------------------------------
# simulation


@dataclass(frozen=True)
class SlotRecord:
    slot: int
    angle: float
    powers: Tuple[float, ...]


@dataclass(frozen=True)
class SimulationTrace:
    receivers: Tuple[str, ...]
    slots: Tuple[SlotRecord, ...]
    policy: Policy
    probe_slots: int = 0
    selection: Optional[CoverResult] = None

    def __len__(self) -> int:
        return len(self.slots)

    def powers(self, name: str) -> List[float]:
        j = self.receivers.index(name)
        return [s.powers[j] for s in self.slots]

    def angles(self) -> List[float]:
        return [s.angle for s in self.slots]

    def window(self, start: int, stop: Optional[int] = None) -> SimulationTrace:
        """Sub-trace over slots ``start:stop``, keeping original slot indices."""
        return SimulationTrace(self.receivers, self.slots[start:stop], self.policy, 0, self.selection)

    def exploit_phase(self) -> SimulationTrace:
        return self.window(self.probe_slots)

    def to_csv(self) -> str:
        lines = [",".join(("slot", "angle_deg") + self.receivers)]
        for s in self.slots:
            lines.append(",".join([str(s.slot), f"{s.angle:g}"] + [f"{p:.2f}" for p in s.powers]))
        return "\n".join(lines) + "\n"


def run_simulation(
    scene: Scene,
    policy: Policy,
    timeline: TimelineConfig = TimelineConfig(),
    params: PropagationParams = PropagationParams(),
) -> SimulationTrace:
    angles = scene.ris.allowed_angles
    if policy.kind is PolicyKind.STATIC and policy.angle not in angles:
        raise AngleNotAllowed(f"angle {policy.angle:g} not in allowed set {list(angles)}")
    n_probe = timeline.probe_slots(len(angles)) if policy.kind is PolicyKind.CONTEXT_AWARE else 0
    if n_probe > timeline.total_slots:
        raise ValueError(f"total_slots={timeline.total_slots} is shorter than the {n_probe}-slot probe sweep")

    cache: Dict[float, Tuple[float, ...]] = {}

    def measure(angle: float) -> Tuple[float, ...]:
        # the scene is static, so each pose is traced once
        if angle not in cache:
            posed = apply_ris_angle(scene, angle)
            cache[angle] = tuple(receiver_powers(posed, params, tracer_for(posed, params)))
        return cache[angle]

    slots: List[SlotRecord] = []
    selection: Optional[CoverResult] = None
    for k in range(timeline.total_slots):
        if k == n_probe and policy.kind is PolicyKind.CONTEXT_AWARE:
            heard = {s.angle: s.powers for s in slots[: n_probe : timeline.probe_dwell]}
            report = ProbeReport(angles, scene.receiver_names, tuple(heard[a] for a in angles))
            selection = select_angles(policy, report, scene.receivers)
        a = angle_for_slot(policy, k, angles, timeline, selection.angles if selection else None)
        slots.append(SlotRecord(k, a, measure(a)))
    return SimulationTrace(scene.receiver_names, tuple(slots), policy, n_probe, selection)


def probe_report(scene: Scene, params: PropagationParams = PropagationParams()) -> ProbeReport:
    """Sweep every allowed angle once and collect receiver powers."""
    rows = []
    for a in scene.ris.allowed_angles:
        posed = apply_ris_angle(scene, a)
        rows.append(tuple(receiver_powers(posed, params)))
    return ProbeReport(scene.ris.allowed_angles, scene.receiver_names, tuple(rows))

