"""Time-fraction and power statistics over simulation traces.

Means are taken over dBm samples ("dB-domain mean") unless ``linear_mean`` is
requested, in which case samples are averaged in milliwatts and converted
back. Percentiles use the nearest-rank rule without interpolation.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

from .errors import ReceiverSetMismatch, UnknownReceiver
from .policy import SimulationTrace
from .scene import Receiver, ReceiverRole

STAT_NAMES = ("mean", "median", "p10", "p90")
FRACTION = "satisfaction_fraction"


class Direction(str, enum.Enum):
    AT_LEAST = "at_least"
    BELOW = "below"


@dataclass(frozen=True)
class Requirement:
    receiver: str
    direction: Direction
    threshold_dbm: float

    @classmethod
    def for_receiver(cls, r: Receiver) -> Requirement:
        d = Direction.BELOW if r.role is ReceiverRole.INTERFERED else Direction.AT_LEAST
        return cls(r.name, d, r.threshold_dbm)

    def met(self, power_dbm: float) -> bool:
        if self.direction is Direction.BELOW:
            return power_dbm < self.threshold_dbm
        return power_dbm >= self.threshold_dbm


def _samples(trace: SimulationTrace, name: str) -> List[float]:
    if name not in trace.receivers:
        raise UnknownReceiver(f"receiver {name!r} not in trace (have {', '.join(trace.receivers)})")
    return trace.powers(name)


def satisfaction_fraction(trace: SimulationTrace, requirement: Requirement) -> float:
    samples = _samples(trace, requirement.receiver)
    if not samples:
        return 0.0
    return sum(requirement.met(p) for p in samples) / len(samples)


def nearest_rank(sorted_samples: Sequence[float], percent: int) -> float:
    """Sample at 0-based index ceil(percent/100 * N) - 1."""
    n = len(sorted_samples)
    k = -(-percent * n // 100)
    return sorted_samples[max(k, 1) - 1]


@dataclass(frozen=True)
class PowerStats:
    mean: float
    median: float
    p10: float
    p90: float

    def as_dict(self) -> Dict[str, float]:
        return {"mean": self.mean, "median": self.median, "p10": self.p10, "p90": self.p90}


def power_stats(trace: SimulationTrace, receiver: str, linear_mean: bool = False) -> PowerStats:
    samples = _samples(trace, receiver)
    if not samples:
        raise ValueError("power_stats needs at least one slot")
    s = sorted(samples)
    if linear_mean:
        mean = 10.0 * math.log10(math.fsum(10.0 ** (v / 10.0) for v in s) / len(s))
    else:
        mean = math.fsum(s) / len(s)
    return PowerStats(mean, nearest_rank(s, 50), nearest_rank(s, 10), nearest_rank(s, 90))


@dataclass
class MetricsReport:
    """Per-receiver values keyed by statistic name.

    Every receiver has a satisfaction fraction; interfered receivers also carry
    mean/median/p10/p90 power.
    """

    values: Dict[str, Dict[str, float]]
    linear_mean: bool = False
    scene_digest: Optional[str] = None
    labels: Dict[str, str] = field(default_factory=dict)

    @property
    def mean_key(self) -> str:
        return "mean_linear" if self.linear_mean else "mean"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["receiver", "statistic", "value"])
        for name, stats in self.values.items():
            for key, v in stats.items():
                w.writerow([name, key, f"{v:.3f}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> MetricsReport:
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["receiver", "statistic", "value"]:
            raise ValueError("metrics CSV must start with 'receiver,statistic,value'")
        values: Dict[str, Dict[str, float]] = {}
        for row in rows[1:]:
            if not row:
                continue
            name, key, v = row
            values.setdefault(name, {})[key] = float(v)
        linear = any("mean_linear" in s for s in values.values())
        return cls(values, linear)

    def to_table(self) -> str:
        mean_label = "mean (linear-domain)" if self.linear_mean else "mean (dB-domain)"
        lines = [f"{'receiver':<10} {'role':<11} {'satisfied':>10} {mean_label:>22} {'median':>9} {'p10':>9} {'p90':>9}"]
        for name, stats in self.values.items():
            frac = stats.get(FRACTION)
            cells = [f"{100 * frac:.2f}%" if frac is not None else "-"]
            for key in (self.mean_key, "median", "p10", "p90"):
                cells.append(f"{stats[key]:.3f}" if key in stats else "-")
            role = self.labels.get(name, "")
            lines.append(f"{name:<10} {role:<11} {cells[0]:>10} {cells[1]:>22} {cells[2]:>9} {cells[3]:>9} {cells[4]:>9}")
        return "\n".join(lines) + "\n"


def build_report(
    trace: SimulationTrace,
    receivers: Iterable[Receiver],
    linear_mean: bool = False,
    scene_digest: Optional[str] = None,
) -> MetricsReport:
    values: Dict[str, Dict[str, float]] = {}
    labels = {}
    for r in receivers:
        entry = {FRACTION: satisfaction_fraction(trace, Requirement.for_receiver(r))}
        if r.role is ReceiverRole.INTERFERED:
            st = power_stats(trace, r.name, linear_mean).as_dict()
            if linear_mean:
                st["mean_linear"] = st.pop("mean")
            entry.update(st)
        values[r.name] = entry
        labels[r.name] = r.role.value
    return MetricsReport(values, linear_mean, scene_digest, labels)


@dataclass
class DeltaReport:
    """Differences ``a - b`` for every statistic present in both reports."""

    values: Dict[str, Dict[str, float]]

    def to_csv(self) -> str:
        return MetricsReport(self.values).to_csv()

    def to_table(self) -> str:
        lines = [f"{'receiver':<10} {'statistic':<22} {'delta':>10}"]
        for name, stats in self.values.items():
            for key, v in stats.items():
                unit = "" if key == FRACTION else " dB"
                lines.append(f"{name:<10} {key:<22} {v:>10.3f}{unit}")
        return "\n".join(lines) + "\n"

    def get(self, receiver: str, stat: str) -> float:
        return self.values[receiver][stat]


def compare_policies(report_a: MetricsReport, report_b: MetricsReport) -> DeltaReport:
    a, b = report_a.values, report_b.values
    if set(a) != set(b):
        raise ReceiverSetMismatch(f"receiver sets differ: {sorted(a)} vs {sorted(b)}")
    if report_a.scene_digest and report_b.scene_digest and report_a.scene_digest != report_b.scene_digest:
        raise ReceiverSetMismatch("reports come from different scenes")
    out: Dict[str, Dict[str, float]] = {}
    for name in a:
        if set(a[name]) != set(b[name]):
            raise ReceiverSetMismatch(f"receiver {name!r} has different statistics in the two reports")
        out[name] = {k: a[name][k] - b[name][k] for k in a[name]}
    return DeltaReport(out)


def fractions(report: MetricsReport) -> Mapping[str, float]:
    return {n: s[FRACTION] for n, s in report.values.items()}
