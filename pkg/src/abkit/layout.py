"""Path-based layout parsing and automatic bridge placement.

Layouts are polyline paths with a role (control, readout, resonator,
ground_strap) and CPW trace/gap widths, all in micrometers.  Bridges are
placed at equal arc-length spacing starting one end margin in from each path
end; a bridge whose along-path footprint would straddle a sharp corner is
shifted forward onto the next segment.  Placement styles follow the role:
control lines get fully capped bridges (crosstalk shields), readout and
resonator lines get separate bridges.

Footprints for clearance checks are rectangles, bridge length across the line
and bridge width along it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from shapely.geometry import LineString, Point, Polygon

from .errors import InputError

ROLES = ("control", "readout", "resonator", "ground_strap")
STYLES = ("separate", "full_capped")
PROCESSES = ("lift_off", "etching", "grayscale")

# Maximum stable bridge length per fabrication process (um).
PROCESS_LENGTH_LIMITS = {"lift_off": 60.0, "etching": 60.0, "grayscale": 200.0}

DEFAULT_LENGTH = 60.0
DEFAULT_WIDTH = 16.0
DEFAULT_SPACING = 100.0
DEFAULT_END_MARGIN = 50.0
DEFAULT_MIN_CLEARANCE = 10.0
CORNER_STRAIGHT_TOL_DEG = 10.0

ON_PATH_TOL = 1e-6


@dataclass(frozen=True)
class LayoutPath:
    """Polyline path with role and CPW cross-section metadata."""

    id: str
    role: str
    vertices: np.ndarray  # (n, 2) um
    trace_width: float
    gap_width: float

    def __post_init__(self) -> None:
        v = np.array(self.vertices, dtype=float)
        if self.role not in ROLES:
            raise InputError(f"path {self.id!r}: unknown role {self.role!r} (known: {', '.join(ROLES)})")
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 2:
            raise InputError(f"path {self.id!r}: vertices must be >= 2 points of (x, y)")
        seg = np.diff(v, axis=0)
        if np.any(np.hypot(seg[:, 0], seg[:, 1]) < 1e-12):
            raise InputError(f"path {self.id!r}: consecutive vertices must be distinct")
        if self.trace_width <= 0 or self.gap_width <= 0:
            raise InputError(f"path {self.id!r}: trace and gap widths must be positive")
        v.flags.writeable = False
        object.__setattr__(self, "vertices", v)

    @property
    def segment_lengths(self) -> np.ndarray:
        seg = np.diff(self.vertices, axis=0)
        return np.hypot(seg[:, 0], seg[:, 1])

    @property
    def cumulative(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.segment_lengths)])

    @property
    def arc_length(self) -> float:
        return float(self.cumulative[-1])

    def point_at(self, s: float) -> tuple[np.ndarray, float]:
        """Point and tangent angle at arc-length ``s`` (forward segment at vertices)."""
        cum = self.cumulative
        if s < -1e-9 or s > cum[-1] + 1e-9:
            raise InputError(f"path {self.id!r}: arc position {s} outside [0, {cum[-1]}]")
        i = int(np.searchsorted(cum, s, side="right")) - 1
        i = min(max(i, 0), len(cum) - 2)
        seg = self.vertices[i + 1] - self.vertices[i]
        length = float(np.hypot(*seg))
        t = (s - cum[i]) / length
        point = self.vertices[i] + t * seg
        return point, math.atan2(seg[1], seg[0])

    def sharp_vertex_positions(self, straight_tol_deg: float = CORNER_STRAIGHT_TOL_DEG) -> list[float]:
        """Arc positions of interior vertices turning more than ``straight_tol_deg``."""
        cum = self.cumulative
        seg = np.diff(self.vertices, axis=0)
        angles = np.arctan2(seg[:, 1], seg[:, 0])
        sharp = []
        for k in range(1, len(self.vertices) - 1):
            turn = abs(math.remainder(angles[k] - angles[k - 1], 2.0 * math.pi))
            if turn > math.radians(straight_tol_deg):
                sharp.append(float(cum[k]))
        return sharp


@dataclass(frozen=True)
class BridgeRule:
    """Bridge dimensions, pitch and fabrication process for one placement run."""

    style: str = "separate"
    length: float = DEFAULT_LENGTH
    width: float = DEFAULT_WIDTH
    spacing: float = DEFAULT_SPACING
    end_margin: float = DEFAULT_END_MARGIN
    process: str = "lift_off"

    def __post_init__(self) -> None:
        if self.style not in STYLES:
            raise InputError(f"BridgeRule: unknown style {self.style!r} (known: {', '.join(STYLES)})")
        if self.process not in PROCESSES:
            raise InputError(f"BridgeRule: unknown process {self.process!r} (known: {', '.join(PROCESSES)})")
        for name in ("length", "width", "spacing"):
            if getattr(self, name) <= 0:
                raise InputError(f"BridgeRule: {name} must be positive, got {getattr(self, name)}")
        if self.end_margin < 0:
            raise InputError(f"BridgeRule: end_margin must be >= 0, got {self.end_margin}")
        if self.spacing <= self.width:
            raise InputError(
                f"BridgeRule: spacing ({self.spacing}) must exceed bridge width ({self.width})"
            )
        limit = PROCESS_LENGTH_LIMITS[self.process]
        if self.length > limit:
            raise InputError(
                f"BridgeRule: length {self.length} um exceeds the {self.process} "
                f"process limit of {limit} um"
            )


def default_rule(role: str) -> BridgeRule:
    """Role-specific default rule: control lines fully capped, others separate."""
    if role not in ROLES:
        raise InputError(f"default_rule: unknown role {role!r} (known: {', '.join(ROLES)})")
    style = "full_capped" if role == "control" else "separate"
    return BridgeRule(style=style)


@dataclass(frozen=True)
class BridgePlacement:
    path_id: str
    center: tuple[float, float]
    tangent_angle: float
    style: str
    length: float
    width: float


def place_bridges(
    path: LayoutPath,
    rule: BridgeRule,
    straight_tol_deg: float = CORNER_STRAIGHT_TOL_DEG,
) -> list[BridgePlacement]:
    """Equally spaced placements along ``path``, shifted clear of sharp corners.

    Nominal arc positions are ``end_margin + k*spacing`` up to
    ``arc_length - end_margin`` (count ``floor((L - 2*margin)/spacing) + 1``).
    A placement whose along-path footprint (one bridge width) would straddle a
    corner turning more than ``straight_tol_deg`` is shifted forward so the
    footprint starts at that corner; a shifted placement that no longer fits
    before the far margin is dropped.
    """
    total = path.arc_length
    usable = total - 2.0 * rule.end_margin
    if usable < 0:
        raise InputError(
            f"path {path.id!r}: arc length {total:.6g} um too short for two "
            f"end margins of {rule.end_margin:.6g} um"
        )
    count = int(math.floor(usable / rule.spacing)) + 1
    sharp = path.sharp_vertex_positions(straight_tol_deg)
    half_w = rule.width / 2.0

    placements = []
    for k in range(count):
        s = rule.end_margin + k * rule.spacing
        for _ in range(len(sharp) + 1):
            hit = next((v for v in sharp if s - half_w < v < s + half_w), None)
            if hit is None:
                break
            s = hit + half_w
        if s > total - rule.end_margin + 1e-9:
            continue
        point, angle = path.point_at(s)
        placements.append(
            BridgePlacement(
                path_id=path.id,
                center=(float(point[0]), float(point[1])),
                tangent_angle=angle,
                style=rule.style,
                length=rule.length,
                width=rule.width,
            )
        )
    return placements


def footprint_polygon(placement: BridgePlacement) -> Polygon:
    """Footprint rectangle: width along the path tangent, length across it."""
    cx, cy = placement.center
    t = np.array([math.cos(placement.tangent_angle), math.sin(placement.tangent_angle)])
    n = np.array([-t[1], t[0]])
    half_w = placement.width / 2.0
    half_l = placement.length / 2.0
    corners = [
        (cx + sw * half_w * t[0] + sl * half_l * n[0], cy + sw * half_w * t[1] + sl * half_l * n[1])
        for sw, sl in ((-1, -1), (1, -1), (1, 1), (-1, 1))
    ]
    return Polygon(corners)


@dataclass(frozen=True)
class Violation:
    kind: str  # "clearance" or "off_path"
    path_ids: tuple[str, ...]
    distance: float
    limit: float
    location: tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "path_ids": list(self.path_ids),
            "distance_um": self.distance,
            "limit_um": self.limit,
            "location_um": list(self.location),
        }


def check_placements(
    paths: Sequence[LayoutPath],
    placements: Sequence[BridgePlacement],
    min_clearance: float = DEFAULT_MIN_CLEARANCE,
) -> list[Violation]:
    """Clearance and on-path checks for a set of placements.

    Reports every footprint pair closer (edge to edge) than ``min_clearance``
    and every bridge whose center is off its path polyline.  A placement
    referencing an unknown path id is an error, not a violation.
    """
    if min_clearance < 0:
        raise InputError(f"check_placements: min_clearance must be >= 0, got {min_clearance}")
    by_id = {p.id: p for p in paths}
    lines: dict[str, LineString] = {}
    violations = []

    for pl in placements:
        if pl.path_id not in by_id:
            raise InputError(f"placement references unknown path id {pl.path_id!r}")
        line = lines.setdefault(pl.path_id, LineString(by_id[pl.path_id].vertices))
        gap = line.distance(Point(pl.center))
        if gap > ON_PATH_TOL:
            violations.append(
                Violation(
                    kind="off_path",
                    path_ids=(pl.path_id,),
                    distance=float(gap),
                    limit=ON_PATH_TOL,
                    location=pl.center,
                )
            )

    polys = [footprint_polygon(pl) for pl in placements]
    for i in range(len(placements)):
        for j in range(i + 1, len(placements)):
            gap = polys[i].distance(polys[j])
            if gap < min_clearance:
                mid = (
                    (placements[i].center[0] + placements[j].center[0]) / 2.0,
                    (placements[i].center[1] + placements[j].center[1]) / 2.0,
                )
                violations.append(
                    Violation(
                        kind="clearance",
                        path_ids=(placements[i].path_id, placements[j].path_id),
                        distance=float(gap),
                        limit=min_clearance,
                        location=mid,
                    )
                )
    return violations


# ---------------------------------------------------------------------------
# JSON interfaces
# ---------------------------------------------------------------------------

_PATH_KEYS = {"id", "role", "trace_um", "gap_um", "vertices"}
_RULE_KEYS = {"style", "length_um", "width_um", "spacing_um", "end_margin_um", "process"}
_PLACEMENT_KEYS = {"path_id", "x_um", "y_um", "angle_rad", "style", "length_um", "width_um"}


def parse_layout(text: str, source: str = "layout") -> list[LayoutPath]:
    """Parse layout JSON into paths, validated and ordered by id."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}: invalid JSON ({exc})") from None
    if not isinstance(data, dict) or set(data) != {"paths"}:
        raise InputError(f"{source}: expected a JSON object with exactly the key 'paths'")
    if not isinstance(data["paths"], list):
        raise InputError(f"{source}: 'paths' must be a list")
    paths = []
    seen = set()
    for i, entry in enumerate(data["paths"]):
        if not isinstance(entry, dict):
            raise InputError(f"{source}: paths[{i}] must be an object")
        unknown = set(entry) - _PATH_KEYS
        if unknown:
            raise InputError(f"{source}: paths[{i}]: unknown key {sorted(unknown)[0]!r}")
        missing = _PATH_KEYS - set(entry)
        if missing:
            raise InputError(f"{source}: paths[{i}]: missing key {sorted(missing)[0]!r}")
        pid = entry["id"]
        if not isinstance(pid, str):
            raise InputError(f"{source}: paths[{i}]: id must be a string")
        if pid in seen:
            raise InputError(f"{source}: duplicate path id {pid!r}")
        seen.add(pid)
        try:
            paths.append(
                LayoutPath(
                    id=pid,
                    role=entry["role"],
                    vertices=np.asarray(entry["vertices"], dtype=float),
                    trace_width=float(entry["trace_um"]),
                    gap_width=float(entry["gap_um"]),
                )
            )
        except (InputError, TypeError, ValueError) as exc:
            raise InputError(f"{source}: paths[{i}] ({pid!r}): {exc}") from None
    paths.sort(key=lambda p: p.id)
    return paths


def load_layout(path: str) -> list[LayoutPath]:
    with open(path, encoding="utf-8") as fh:
        return parse_layout(fh.read(), source=path)


def parse_rule(text: str, source: str = "rule") -> BridgeRule:
    """Parse a bridge rule JSON; absent keys take the module defaults."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise InputError(f"{source}: expected a JSON object")
    unknown = set(data) - _RULE_KEYS
    if unknown:
        raise InputError(f"{source}: unknown key {sorted(unknown)[0]!r}")
    try:
        return BridgeRule(
            style=data.get("style", "separate"),
            length=float(data.get("length_um", DEFAULT_LENGTH)),
            width=float(data.get("width_um", DEFAULT_WIDTH)),
            spacing=float(data.get("spacing_um", DEFAULT_SPACING)),
            end_margin=float(data.get("end_margin_um", DEFAULT_END_MARGIN)),
            process=data.get("process", "lift_off"),
        )
    except (InputError, TypeError, ValueError) as exc:
        raise InputError(f"{source}: {exc}") from None


def load_rule(path: str) -> BridgeRule:
    with open(path, encoding="utf-8") as fh:
        return parse_rule(fh.read(), source=path)


def placements_to_json(placements: Sequence[BridgePlacement]) -> list[dict]:
    return [
        {
            "path_id": pl.path_id,
            "x_um": pl.center[0],
            "y_um": pl.center[1],
            "angle_rad": pl.tangent_angle,
            "style": pl.style,
            "length_um": pl.length,
            "width_um": pl.width,
        }
        for pl in placements
    ]


def parse_placements(text: str, source: str = "placements") -> list[BridgePlacement]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}: invalid JSON ({exc})") from None
    if not isinstance(data, list):
        raise InputError(f"{source}: expected a JSON list of placements")
    placements = []
    for i, entry in enumerate(data):
        if not isinstance(entry, dict) or set(entry) != _PLACEMENT_KEYS:
            raise InputError(
                f"{source}: placements[{i}] must have exactly keys "
                f"{', '.join(sorted(_PLACEMENT_KEYS))}"
            )
        if entry["style"] not in STYLES:
            raise InputError(f"{source}: placements[{i}]: unknown style {entry['style']!r}")
        try:
            placements.append(
                BridgePlacement(
                    path_id=str(entry["path_id"]),
                    center=(float(entry["x_um"]), float(entry["y_um"])),
                    tangent_angle=float(entry["angle_rad"]),
                    style=entry["style"],
                    length=float(entry["length_um"]),
                    width=float(entry["width_um"]),
                )
            )
        except (TypeError, ValueError) as exc:
            raise InputError(f"{source}: placements[{i}]: {exc}") from None
    return placements


def load_placements(path: str) -> list[BridgePlacement]:
    with open(path, encoding="utf-8") as fh:
        return parse_placements(fh.read(), source=path)
