import json
import math

import numpy as np
import pytest

from abkit import layout
from abkit.errors import InputError
from abkit.layout import (
    BridgePlacement,
    BridgeRule,
    LayoutPath,
    check_placements,
    default_rule,
    footprint_polygon,
    parse_layout,
    parse_placements,
    parse_rule,
    place_bridges,
    placements_to_json,
)


def straight_path(length=1000.0, pid="p1", role="readout") -> LayoutPath:
    return LayoutPath(pid, role, np.array([[0.0, 0.0], [length, 0.0]]), 10.0, 6.0)


def l_path() -> LayoutPath:
    return LayoutPath("l1", "readout", np.array([[0.0, 0.0], [500.0, 0.0], [500.0, 500.0]]), 10.0, 6.0)


class TestLayoutPath:
    def test_arc_length(self):
        assert l_path().arc_length == pytest.approx(1000.0)

    def test_point_at_vertex_uses_forward_segment(self):
        point, angle = l_path().point_at(500.0)
        assert point == pytest.approx([500.0, 0.0])
        assert angle == pytest.approx(math.pi / 2)

    def test_single_vertex_rejected(self):
        with pytest.raises(InputError, match=">= 2 points"):
            LayoutPath("x", "control", np.array([[0.0, 0.0]]), 10.0, 6.0)

    def test_repeated_vertex_rejected(self):
        with pytest.raises(InputError, match="distinct"):
            LayoutPath("x", "control", np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]), 10.0, 6.0)

    def test_unknown_role_rejected(self):
        with pytest.raises(InputError, match="unknown role"):
            LayoutPath("x", "feedline", np.array([[0.0, 0.0], [1.0, 0.0]]), 10.0, 6.0)

    def test_sharp_vertices(self):
        assert l_path().sharp_vertex_positions() == [pytest.approx(500.0)]
        gentle = LayoutPath(
            "g", "readout",
            np.array([[0.0, 0.0], [100.0, 0.0], [200.0, 5.0]]),  # ~2.9 degree turn
            10.0, 6.0,
        )
        assert gentle.sharp_vertex_positions() == []


class TestBridgeRule:
    def test_defaults_by_role(self):
        assert default_rule("control").style == "full_capped"
        assert default_rule("readout").style == "separate"
        assert default_rule("resonator").style == "separate"
        assert default_rule("ground_strap").style == "separate"
        with pytest.raises(InputError, match="unknown role"):
            default_rule("widget")

    def test_process_length_limits(self):
        with pytest.raises(InputError, match="lift_off"):
            BridgeRule(length=61.0)
        with pytest.raises(InputError, match="etching"):
            BridgeRule(length=80.0, process="etching")
        BridgeRule(length=200.0, process="grayscale")  # allowed
        with pytest.raises(InputError, match="grayscale"):
            BridgeRule(length=200.5, process="grayscale")

    def test_spacing_exceeds_width(self):
        with pytest.raises(InputError, match="spacing"):
            BridgeRule(width=30.0, spacing=30.0)


class TestPlaceBridges:
    def test_straight_path_positions(self):
        placements = place_bridges(straight_path(1000.0), BridgeRule())
        assert len(placements) == 10
        xs = [p.center[0] for p in placements]
        assert xs == pytest.approx(list(np.arange(50.0, 951.0, 100.0)))
        assert all(p.center[1] == 0.0 for p in placements)
        assert all(p.tangent_angle == 0.0 for p in placements)

    def test_count_formula_random_triples(self):
        rng = np.random.default_rng(17)
        for _ in range(25):
            length = float(rng.uniform(150.0, 3000.0))
            margin = float(rng.uniform(10.0, 60.0))
            spacing = float(rng.uniform(20.0, 200.0))
            placements = place_bridges(
                straight_path(length),
                BridgeRule(spacing=spacing, end_margin=margin, width=16.0),
            )
            expected = math.floor((length - 2 * margin) / spacing) + 1
            assert len(placements) == expected

    def test_too_short_path(self):
        with pytest.raises(InputError, match="too short"):
            place_bridges(straight_path(99.0), BridgeRule(end_margin=50.0))

    def test_l_path_hand_enumeration(self):
        # Arc positions 50, 150, ..., 950 on two 500 um legs meeting at 90 deg.
        placements = place_bridges(l_path(), BridgeRule())
        expected = []
        for s in np.arange(50.0, 951.0, 100.0):
            if s <= 500.0:
                expected.append(((s, 0.0), 0.0))
            else:
                expected.append(((500.0, s - 500.0), math.pi / 2))
        assert len(placements) == 10
        for got, (center, angle) in zip(placements, expected):
            assert got.center == pytest.approx(center, abs=1e-9)
            assert got.tangent_angle == pytest.approx(angle, abs=1e-12)
        for got in placements:
            # No center within one bridge width of the corner at arc 500.
            arc = got.center[0] if got.tangent_angle == 0.0 else 500.0 + got.center[1]
            assert abs(arc - 500.0) >= got.width

    def test_corner_straddle_shifts_forward(self):
        path = LayoutPath(
            "c", "readout", np.array([[0.0, 0.0], [480.0, 0.0], [480.0, 520.0]]), 10.0, 6.0
        )
        rule = BridgeRule(end_margin=80.0)
        placements = place_bridges(path, rule)
        arcs = []
        for p in placements:
            arcs.append(p.center[0] if p.tangent_angle == 0.0 else 480.0 + p.center[1])
        # Nominal 480 straddles the corner; it lands at 480 + width/2 = 488.
        assert pytest.approx(488.0, abs=1e-9) in arcs
        assert all(not (480.0 - 8.0 < a < 480.0 + 8.0) for a in arcs)
        assert arcs == sorted(arcs)

    def test_rigid_transform_invariance(self):
        rule = BridgeRule()
        base = l_path()
        placements = place_bridges(base, rule)
        theta = 0.7
        rot = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
        shift = np.array([12.5, -40.0])
        moved = LayoutPath("l1", "readout", base.vertices @ rot.T + shift, 10.0, 6.0)
        placements_moved = place_bridges(moved, rule)
        for a, b in zip(placements, placements_moved):
            expected = rot @ np.array(a.center) + shift
            assert b.center == pytest.approx(tuple(expected), abs=1e-9)
            assert math.remainder(b.tangent_angle - (a.tangent_angle + theta), 2 * math.pi) == pytest.approx(0.0, abs=1e-12)

    def test_reversal_preserves_position_multiset(self):
        # Holds whenever the spacing divides the usable span exactly.
        base = straight_path(1000.0)
        reverse = LayoutPath("p1", "readout", base.vertices[::-1].copy(), 10.0, 6.0)
        rule = BridgeRule()
        fwd = sorted(p.center[0] for p in place_bridges(base, rule))
        rev = sorted(p.center[0] for p in place_bridges(reverse, rule))
        assert fwd == pytest.approx(rev, abs=1e-9)
        rev_order = [p.center[0] for p in place_bridges(reverse, rule)]
        assert rev_order == sorted(rev_order, reverse=True)

    def test_margin_guarantees_endpoint_distance(self):
        rule = BridgeRule(end_margin=30.0, length=60.0)
        for p in place_bridges(straight_path(500.0), rule):
            assert p.center[0] >= rule.length / 2
            assert p.center[0] <= 500.0 - rule.length / 2


class TestFootprint:
    def test_axis_aligned_rectangle(self):
        pl = BridgePlacement("p", (0.0, 0.0), 0.0, "separate", 60.0, 16.0)
        poly = footprint_polygon(pl)
        xs, ys = poly.exterior.xy
        assert max(xs) == pytest.approx(8.0)
        assert max(ys) == pytest.approx(30.0)


class TestCheckPlacements:
    def test_single_bridge_clean(self):
        path = straight_path(1000.0)
        placements = place_bridges(path, BridgeRule())[:1]
        assert check_placements([path], placements) == []

    def test_place_check_round_trip(self):
        for path in (straight_path(1000.0), l_path()):
            placements = place_bridges(path, default_rule(path.role))
            assert check_placements([path], placements) == []

    def test_parallel_paths_overlap(self):
        p1 = straight_path(300.0, pid="a")
        p2 = LayoutPath("b", "readout", np.array([[0.0, 10.0], [300.0, 10.0]]), 10.0, 6.0)
        placements = place_bridges(p1, BridgeRule()) + place_bridges(p2, BridgeRule())
        violations = check_placements([p1, p2], placements, min_clearance=20.0)
        clearance = [v for v in violations if v.kind == "clearance"]
        assert clearance
        assert all(v.distance == 0.0 for v in clearance)  # 60 um footprints overlap

    def test_spacing_guarantee_no_self_violations(self):
        path = straight_path(2000.0)
        rule = BridgeRule(spacing=100.0, width=16.0)
        placements = place_bridges(path, rule)
        # spacing > width + clearance keeps same-path neighbours clear
        assert check_placements([path], placements, min_clearance=80.0) == []

    def test_off_path_detected(self):
        path = straight_path(1000.0)
        bad = BridgePlacement("p1", (100.0, 5.0), 0.0, "separate", 60.0, 16.0)
        violations = check_placements([path], [bad])
        assert [v.kind for v in violations] == ["off_path"]
        assert violations[0].distance == pytest.approx(5.0)

    def test_dangling_path_id(self):
        path = straight_path(1000.0)
        stray = BridgePlacement("ghost", (10.0, 0.0), 0.0, "separate", 60.0, 16.0)
        with pytest.raises(InputError, match="unknown path id 'ghost'"):
            check_placements([path], [stray])


LAYOUT_JSON = json.dumps(
    {
        "paths": [
            {"id": "ro1", "role": "readout", "trace_um": 10, "gap_um": 6,
             "vertices": [[0, 0], [1000, 0]]},
            {"id": "ctl1", "role": "control", "trace_um": 5, "gap_um": 3,
             "vertices": [[0, 50], [800, 50]]},
        ]
    }
)


class TestJsonInterfaces:
    def test_parse_layout_sorted_by_id(self):
        paths = parse_layout(LAYOUT_JSON)
        assert [p.id for p in paths] == ["ctl1", "ro1"]

    def test_empty_layout(self):
        assert parse_layout('{"paths": []}') == []

    def test_single_vertex_names_path(self):
        bad = json.dumps(
            {"paths": [{"id": "oops", "role": "control", "trace_um": 5, "gap_um": 3,
                        "vertices": [[0, 0]]}]}
        )
        with pytest.raises(InputError, match="'oops'"):
            parse_layout(bad)

    def test_duplicate_id(self):
        data = json.loads(LAYOUT_JSON)
        data["paths"][1]["id"] = "ro1"
        with pytest.raises(InputError, match="duplicate path id"):
            parse_layout(json.dumps(data))

    def test_unknown_key(self):
        data = json.loads(LAYOUT_JSON)
        data["paths"][0]["color"] = "red"
        with pytest.raises(InputError, match="unknown key 'color'"):
            parse_layout(json.dumps(data))

    def test_placements_round_trip(self):
        paths = parse_layout(LAYOUT_JSON)
        placements = []
        for p in paths:
            placements.extend(place_bridges(p, default_rule(p.role)))
        text = json.dumps(placements_to_json(placements))
        back = parse_placements(text)
        assert back == placements

    def test_parse_rule_defaults(self):
        rule = parse_rule('{"spacing_um": 75.0}')
        assert rule.spacing == 75.0
        assert rule.length == layout.DEFAULT_LENGTH
        with pytest.raises(InputError, match="unknown key"):
            parse_rule('{"pitch": 75.0}')
