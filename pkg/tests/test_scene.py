import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rissim.errors import AngleNotAllowed, ParseError, UnknownReceiver, ValidationError
from rissim.geometry import Point, Segment
from rissim.propagation import receiver_powers
from rissim.scene import (
    DEFAULT_ANGLES,
    ReceiverRole,
    apply_ris_angle,
    canonical_scene_text,
    dump_scene,
    load_scene,
)


def doc():
    return json.loads(canonical_scene_text())


def test_canonical_layout(canonical):
    b = canonical.bounds
    assert (b.xmin, b.ymin, b.xmax, b.ymax) == (0, 0, 30, 10)
    assert canonical.walls[4] == Segment(Point(12, 0), Point(12, 7))
    assert set(canonical.walls[:4]) == set(b.rectangle())
    assert canonical.tx.position == Point(2, 5)
    assert canonical.tx.frequency_hz == 3.5e9
    assert canonical.ris.segment == Segment(Point(29.9, 3), Point(29.9, 7))
    assert canonical.ris.pivot == Point(29.9, 5)
    assert canonical.ris.allowed_angles == DEFAULT_ANGLES == (-20, -15, -10, -5, 0, 5, 10, 15, 20)
    assert canonical.receiver_names == ("A", "B", "C")
    roles = [r.role for r in canonical.receivers]
    assert roles == [ReceiverRole.SENSOR, ReceiverRole.DESIRED, ReceiverRole.INTERFERED]


def test_apply_angle_zero_keeps_ris_in_place(canonical):
    s = apply_ris_angle(canonical, 0)
    walls = s.effective_walls()
    assert canonical.ris.segment in walls
    assert set(canonical.walls) <= set(walls)


def test_apply_angle_twenty_rotates_about_midpoint(canonical):
    s = apply_ris_angle(canonical, 20)
    seg = s.ris_segment
    sn, cs = math.sin(math.radians(20)), math.cos(math.radians(20))
    assert seg.a.isclose(Point(29.9 + 2 * sn, 5 - 2 * cs), 1e-12)
    assert seg.b.isclose(Point(29.9 - 2 * sn, 5 + 2 * cs), 1e-12)
    assert canonical.ris_angle == 0  # original untouched


def test_apply_angle_not_allowed(canonical):
    with pytest.raises(AngleNotAllowed):
        apply_ris_angle(canonical, 7)


def test_apply_angle_is_pure(canonical):
    assert apply_ris_angle(canonical, -15).effective_walls() == apply_ris_angle(canonical, -15).effective_walls()


def test_load_canonical_fixture(canonical):
    s = load_scene(canonical_scene_text())
    assert s == canonical and len(s.receivers) == 3


def test_missing_tx_is_parse_error():
    d = doc()
    del d["tx"]
    with pytest.raises(ParseError, match="tx"):
        load_scene(json.dumps(d))


def test_malformed_text_is_parse_error():
    with pytest.raises(ParseError):
        load_scene("{not json")
    d = doc()
    d["walls"][0]["a"] = [1, "x"]
    with pytest.raises(ParseError, match=r"walls\[0\]\.a"):
        load_scene(json.dumps(d))
    d = doc()
    d["receivers"][0]["role"] = "listener"
    with pytest.raises(ParseError, match="role"):
        load_scene(json.dumps(d))


def test_receiver_outside_bounds_names_receiver():
    d = doc()
    d["receivers"][1]["position"] = [31.0, 5.0]
    with pytest.raises(ValidationError) as exc:
        load_scene(json.dumps(d))
    assert "(B)" in str(exc.value) and "position" in exc.value.field


@pytest.mark.parametrize(
    "mutate, field",
    [
        (lambda d: d["receivers"][1].update(name="A"), "receivers[1]"),
        (lambda d: d["ris"].update(angles=[0, -5]), "ris.angles"),
        (lambda d: d["ris"].update(angles=[]), "ris.angles"),
        (lambda d: d["ris"].update(pivot=[29.9, 3.0]), "ris.pivot"),
        (lambda d: d["tx"].update(frequency_hz=0), "tx.frequency_hz"),
        (lambda d: d["tx"].update(position=[-1, 5]), "tx.position"),
        (lambda d: d["walls"].append({"a": [5, 5], "b": [5, 5]}), "walls[5]"),
        (lambda d: d["ris"].update(a=[29.0, 3.0]), "ris"),
    ],
)
def test_invariant_violations(mutate, field):
    d = doc()
    mutate(d)
    with pytest.raises(ValidationError) as exc:
        load_scene(json.dumps(d))
    assert exc.value.field.startswith(field)


def test_defaults_when_fields_omitted():
    d = doc()
    for r in d["receivers"]:
        del r["threshold_dbm"]
    del d["tx"]["power_dbm"], d["tx"]["frequency_hz"], d["ris"]["angles"]
    s = load_scene(json.dumps(d))
    assert [r.threshold_dbm for r in s.receivers] == [-95.0, -85.0, -85.0]
    assert s.tx.power_dbm == 20.0 and s.tx.frequency_hz == 3.5e9
    assert s.ris.allowed_angles == DEFAULT_ANGLES


coords = st.floats(0.5, 29.5, allow_nan=False)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(coords, st.floats(0.5, 9.5)), min_size=1, max_size=4), st.floats(-120, 0))
def test_dump_load_round_trip(positions, thr):
    d = doc()
    d["receivers"] = [
        {"name": f"R{i}", "position": [x, y], "role": "desired", "threshold_dbm": thr}
        for i, (x, y) in enumerate(positions)
        if math.hypot(x - 2, y - 5) > 0.01
    ]
    s = load_scene(json.dumps(d))
    again = load_scene(dump_scene(s))
    assert again == s


def test_receiver_lookup_and_role_override(canonical):
    with pytest.raises(UnknownReceiver):
        canonical.receiver("Z")
    s = canonical.with_role("C", ReceiverRole.DESIRED, -85.0)
    assert s.receiver("C").role is ReceiverRole.DESIRED
    assert canonical.receiver("C").role is ReceiverRole.INTERFERED
    assert canonical.with_receivers(["B"]).receiver_names == ("B",)


# -- calibration of the committed fixture --------------------------------------


def test_calibration_sensor_shadowed_at_zero(canonical, params):
    a = canonical.receiver("A")
    p0 = receiver_powers(apply_ris_angle(canonical, 0), params)[0]
    assert p0 < a.threshold_dbm


def test_calibration_some_angle_serves_sensor(canonical, params):
    a = canonical.receiver("A")
    best = max(receiver_powers(apply_ris_angle(canonical, ang), params)[0] for ang in canonical.ris.allowed_angles)
    assert best >= a.threshold_dbm


def test_calibration_ris_setting_matters(canonical, params):
    per_angle = {receiver_powers(apply_ris_angle(canonical, ang), params)[0] for ang in canonical.ris.allowed_angles}
    assert len(per_angle) > 1
