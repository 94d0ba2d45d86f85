"""Deterministic 2D radio-propagation simulator with a rotatable RIS panel."""

__version__ = "0.1.0"

from .errors import (
    AngleNotAllowed,
    DegeneratePath,
    GridTooLarge,
    ParseError,
    ReceiverSetMismatch,
    RissimError,
    UnknownReceiver,
    ValidationError,
)
from .geometry import Point, Ray, Segment, intersect_ray_segment, mirror_point, reflect_dir, rotate_segment
from .metrics import (
    MetricsReport,
    Requirement,
    build_report,
    compare_policies,
    power_stats,
    satisfaction_fraction,
)
from .policy import (
    Policy,
    ProbeReport,
    SelectionMode,
    SimulationTrace,
    TimelineConfig,
    angle_for_slot,
    minimal_angle_cover,
    run_simulation,
    select_best_angles,
)
from .propagation import (
    GridSpec,
    PropagationParams,
    RayPath,
    Summation,
    coverage_grid,
    path_gain_db,
    received_power_dbm,
    trace_paths,
)
from .scene import (
    Receiver,
    ReceiverRole,
    RisPanel,
    Scene,
    Transmitter,
    apply_ris_angle,
    canonical_scene,
    dump_scene,
    load_scene,
)
