"""Photoresist scaffold profiles for airbridge stability analysis.

A reflowed resist edge is a 1-D height curve ``e(x)`` measured from the resist
boundary outward.  A bridge scaffold of span ``L`` is modelled as two such
edges facing each other,

    s(x) = e(x) + e(L - x),    x in [0, L],

with the edge linearly interpolated between samples and extended flat beyond
its sampled domain.  Long spans develop a low-slope plateau at mid-span, which
correlates with mechanical collapse of the finished bridge; the plateau
detector and the stable-length search below quantify that onset.  Grayscale
exposure instead prescribes a parabolic profile whose shape is independent of
span, so it never flattens.

Heights and positions are in micrometers.  Summed heights are not clipped at
the nominal resist thickness.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError

# Resampling pitch for profiles with non-uniform or mismatched sample spacing.
RESAMPLE_PITCH = 0.1

DEFAULT_SLOPE_TOL = 0.01  # um/um
DEFAULT_MIN_SPAN = 10.0  # um
SEARCH_STEP = 0.5  # um resolution of the stable-length search


@dataclass(frozen=True)
class Profile:
    """Uniformly sampled height curve: ``heights[i]`` at ``x0 + i*dx``."""

    x0: float
    dx: float
    heights: np.ndarray

    def __post_init__(self) -> None:
        h = np.array(self.heights, dtype=float)
        if self.dx <= 0:
            raise InputError(f"Profile: dx must be positive, got {self.dx}")
        if h.ndim != 1 or h.size < 2:
            raise InputError("Profile: needs at least 2 height samples")
        if not np.all(np.isfinite(h)):
            raise InputError("Profile: heights must be finite")
        if h.min() < 0:
            raise InputError(f"Profile: heights must be >= 0, got min {h.min()}")
        h.flags.writeable = False
        object.__setattr__(self, "heights", h)

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.heights.size)

    @property
    def x_end(self) -> float:
        return self.x0 + self.dx * (self.heights.size - 1)

    @property
    def extent(self) -> float:
        return self.dx * (self.heights.size - 1)

    def value(self, x) -> np.ndarray:
        """Linear interpolation, clamped to the first/last sample outside the domain."""
        return np.interp(np.asarray(x, dtype=float), self.x, self.heights)


def profile_from_xy(x: Sequence[float], h: Sequence[float]) -> Profile:
    """Profile from sample positions and heights, resampling if non-uniform.

    Positions must be strictly increasing.  If the pitch is not uniform the
    curve is linearly resampled onto a ``RESAMPLE_PITCH`` grid.
    """
    xa = np.asarray(x, dtype=float)
    ha = np.asarray(h, dtype=float)
    if xa.ndim != 1 or xa.size < 2 or xa.shape != ha.shape:
        raise InputError("profile_from_xy: need matching 1-D arrays with >= 2 samples")
    dxs = np.diff(xa)
    if np.any(dxs <= 0):
        raise InputError("profile_from_xy: positions must be strictly increasing")
    if np.allclose(dxs, dxs[0], rtol=1e-9, atol=1e-12):
        return Profile(float(xa[0]), float(dxs[0]), ha)
    n = max(2, int(round((xa[-1] - xa[0]) / RESAMPLE_PITCH)) + 1)
    grid = np.linspace(xa[0], xa[-1], n)
    return Profile(float(xa[0]), float(grid[1] - grid[0]), np.interp(grid, xa, ha))


@dataclass(frozen=True)
class PlateauReport:
    """Widest low-slope interval of a profile plus its apex."""

    has_plateau: bool
    plateau_span: float
    apex_height: float
    apex_position: float


@dataclass(frozen=True)
class MaxLengthResult:
    """Outcome of the stable-length search."""

    length: float
    monotone: bool  # plateau onset was monotone across the scanned range
    found: bool  # at least one plateau-free length existed in the range


def simulate_scaffold(edge: Profile, length: float) -> Profile:
    """Scaffold profile of span ``length`` from a single resist edge profile.

    Evaluates ``e(x) + e(length - x)`` on a uniform grid over [0, length]
    (pitch ``RESAMPLE_PITCH`` or finer).  The result is symmetric about
    ``length/2`` to rounding error.
    """
    if length <= 0:
        raise InputError(f"simulate_scaffold: length must be positive, got {length}")
    if edge.x0 < -1e-12:
        raise InputError(f"simulate_scaffold: edge must be sampled on x >= 0, starts at {edge.x0}")
    n = max(2, int(round(length / RESAMPLE_PITCH)) + 1)
    x = np.linspace(0.0, length, n)
    heights = edge.value(x) + edge.value(length - x)
    return Profile(0.0, float(x[1] - x[0]), heights)


def _sample_slopes(profile: Profile) -> np.ndarray:
    # Central differences inside, one-sided at the ends.
    return np.gradient(profile.heights, profile.dx)


def detect_plateau(
    profile: Profile,
    slope_tol: float = DEFAULT_SLOPE_TOL,
    min_span: float = DEFAULT_MIN_SPAN,
) -> PlateauReport:
    """Find the widest interval where every sample slope is below ``slope_tol``.

    ``has_plateau`` is true iff such an interval at least ``min_span`` long
    exists.  Profiles shorter than ``min_span`` report no plateau with span 0.
    """
    if slope_tol <= 0 or min_span <= 0:
        raise InputError("detect_plateau: slope_tol and min_span must be positive")
    apex_idx = int(np.argmax(profile.heights))
    apex_height = float(profile.heights[apex_idx])
    apex_position = float(profile.x0 + apex_idx * profile.dx)
    if profile.extent < min_span:
        return PlateauReport(False, 0.0, apex_height, apex_position)

    flat = np.abs(_sample_slopes(profile)) < slope_tol
    widest = 0.0
    i = 0
    while i < flat.size:
        if flat[i]:
            j = i
            while j + 1 < flat.size and flat[j + 1]:
                j += 1
            widest = max(widest, (j - i) * profile.dx)
            i = j + 1
        else:
            i += 1
    return PlateauReport(widest >= min_span, widest, apex_height, apex_position)


def height_vs_length(edge: Profile, lengths: Iterable[float]) -> list[tuple[float, float]]:
    """Mid-span scaffold height for each bridge span in ``lengths``.

    The mid-span height ``s(L/2) = 2*e(L/2)`` is the arch height of the
    finished bridge; for a non-increasing edge it is non-increasing in L.
    """
    out = []
    for length in lengths:
        if length <= 0:
            raise InputError(f"height_vs_length: lengths must be positive, got {length}")
        scaffold = simulate_scaffold(edge, length)
        out.append((float(length), float(scaffold.value(length / 2.0))))
    return out


def grayscale_profile(height: float, length: float, n: int = 201) -> Profile:
    """Parabolic grayscale-exposure profile: apex ``height`` at mid-span, zero ends."""
    if height <= 0 or length <= 0:
        raise InputError(f"grayscale_profile: height and length must be positive, got {height}, {length}")
    n = int(n)
    if n < 3:
        raise InputError(f"grayscale_profile: need at least 3 samples, got {n}")
    x = np.linspace(0.0, length, n)
    u = (2.0 * x - length) / length
    return Profile(0.0, float(x[1] - x[0]), height * (1.0 - u * u))


@dataclass(frozen=True)
class SweepRow:
    length: float
    mid_height: float
    has_plateau: bool
    plateau_span: float


def sweep_lengths(
    edge: Profile,
    lengths: Iterable[float],
    slope_tol: float = DEFAULT_SLOPE_TOL,
    min_span: float = DEFAULT_MIN_SPAN,
) -> list[SweepRow]:
    """Scaffold sweep: mid-span height and plateau report per span."""
    rows = []
    for length in lengths:
        scaffold = simulate_scaffold(edge, float(length))
        report = detect_plateau(scaffold, slope_tol, min_span)
        rows.append(
            SweepRow(
                length=float(length),
                mid_height=float(scaffold.value(length / 2.0)),
                has_plateau=report.has_plateau,
                plateau_span=report.plateau_span,
            )
        )
    return rows


def max_stable_length(
    edge: Profile,
    slope_tol: float = DEFAULT_SLOPE_TOL,
    min_span: float = DEFAULT_MIN_SPAN,
    search_range: tuple[float, float] = (10.0, 150.0),
) -> MaxLengthResult:
    """Largest plateau-free span within ``search_range`` at 0.5 um resolution.

    Scans the range at ``SEARCH_STEP`` pitch.  When plateau onset is monotone
    (plateau-free below some threshold, plateaus above) the scan and a
    bisection agree; a non-monotone pattern is reported via ``monotone=False``
    and the largest plateau-free length found still returned.  If every length
    in the range has a plateau the lower bound is returned with
    ``found=False``.
    """
    lo, hi = search_range
    if not (lo < hi) or lo <= 0:
        raise InputError(f"max_stable_length: need 0 < lo < hi, got {search_range}")
    lengths = np.arange(lo, hi + 1e-9, SEARCH_STEP)
    has = [detect_plateau(simulate_scaffold(edge, float(L)), slope_tol, min_span).has_plateau for L in lengths]
    free = [float(L) for L, h in zip(lengths, has) if not h]
    # Monotone onset means the flag pattern is False... then True... only.
    first_true = next((i for i, h in enumerate(has) if h), None)
    monotone = first_true is None or all(has[first_true:])
    if not free:
        return MaxLengthResult(length=float(lo), monotone=monotone, found=False)
    return MaxLengthResult(length=max(free), monotone=monotone, found=True)


# ---------------------------------------------------------------------------
# CSV interfaces
# ---------------------------------------------------------------------------


def read_profile_csv(text: str, source: str = "profile") -> Profile:
    """Parse a ``x_um,h_um`` CSV into a Profile (resampled if non-uniform)."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise InputError(f"{source}: empty CSV") from None
    if [c.strip() for c in header] != ["x_um", "h_um"]:
        raise InputError(f"{source}: expected header 'x_um,h_um', got {','.join(header)!r}")
    xs, hs = [], []
    for i, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 2:
            raise InputError(f"{source}: line {i}: expected 2 columns, got {len(row)}")
        try:
            xs.append(float(row[0]))
            hs.append(float(row[1]))
        except ValueError:
            raise InputError(f"{source}: line {i}: non-numeric value") from None
    try:
        return profile_from_xy(xs, hs)
    except InputError as exc:
        raise InputError(f"{source}: {exc}") from None


def load_profile_csv(path: str) -> Profile:
    with open(path, encoding="utf-8") as fh:
        return read_profile_csv(fh.read(), source=path)


def format_profile_csv(profile: Profile) -> str:
    """Serialize to ``x_um,h_um`` with 6 significant digits."""
    lines = ["x_um,h_um"]
    for x, h in zip(profile.x, profile.heights):
        lines.append(f"{x:.6g},{h:.6g}")
    return "\n".join(lines) + "\n"


def format_sweep_csv(rows: Sequence[SweepRow]) -> str:
    """Serialize a sweep to ``length_um,apex_um,has_plateau,plateau_span_um``."""
    lines = ["length_um,apex_um,has_plateau,plateau_span_um"]
    for row in rows:
        flag = "true" if row.has_plateau else "false"
        lines.append(f"{row.length:.6g},{row.mid_height:.6g},{flag},{row.plateau_span:.6g}")
    return "\n".join(lines) + "\n"
