"""Symbolic crossing oracle: map rope geometry to a canonical Gauss code.

The rope's z-plane projection (drop z) is scanned for proper
self-intersections between non-adjacent segments.  Traversal starts at
bead 0 and follows increasing bead index; crossings met along the way
are labeled in order of first encounter, signed + when the current
strand passes over and - when it passes under.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .geometry import KnotConfiguration

# Proper-intersection tolerance in the projection plane and minimum z
# separation for a well-defined over/under decision.  Far below bead
# radius, far above float noise at world scale ~1 m.
XY_EPS = 1e-9
Z_EPS = 1e-6

# Orientation determinants smaller than this are re-evaluated exactly.
_EXACT_FALLBACK = 1e-12
# Two crossings this close in parameter on one segment are a tie.
_PARAM_TIE = 1e-12


class DegenerateProjection(Exception):
    """Projection has a tangency, endpoint hit, overlap or z-ambiguity."""


class ParseError(ValueError):
    """Gauss-code text that does not match the grammar."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte {offset})")
        self.offset = offset


class ValidationError(ValueError):
    """Entry sequence that violates the Gauss-code invariants."""


class GaussEntry(NamedTuple):
    label: int
    over: bool


@dataclass(frozen=True)
class GaussCode:
    """Canonical signed crossing sequence; empty for an unknotted projection.

    Each label appears exactly twice (once over, once under) and labels
    are numbered 1..n in order of first encounter.
    """

    entries: tuple[GaussEntry, ...]

    def __post_init__(self):
        entries = tuple(GaussEntry(int(l), bool(o)) for l, o in self.entries)
        _validate_entries(entries)
        object.__setattr__(self, "entries", entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __str__(self) -> str:
        return format_code(self)


def _validate_entries(entries: tuple[GaussEntry, ...]) -> None:
    seen: dict[int, list[bool]] = {}
    order: list[int] = []
    for label, over in entries:
        if label < 1:
            raise ValidationError(f"label {label} is not positive")
        if label not in seen:
            seen[label] = []
            order.append(label)
        seen[label].append(over)
    n = len(seen)
    if order != list(range(1, n + 1)):
        raise ValidationError(
            f"labels not canonical: first encounters are {order}, "
            f"expected 1..{n}"
        )
    for label, signs in seen.items():
        if len(signs) != 2:
            raise ValidationError(f"label {label} appears {len(signs)} time(s)")
        if signs[0] == signs[1]:
            raise ValidationError(f"label {label} has two {'over' if signs[0] else 'under'} passes")


@dataclass(frozen=True)
class Crossing:
    """One projected self-intersection between two non-adjacent segments.

    seg_a is the earlier-traversed segment; params are fractions along
    each segment; over_seg names the segment with the larger z there.
    """

    seg_a: int
    seg_b: int
    uv: tuple[float, float]
    param_a: float
    param_b: float
    over_seg: int


def _sign(x) -> int:
    return int(x > 0) - int(x < 0)


def _orient_sign(ax, ay, bx, by, cx, cy) -> int:
    """Sign of the orientation determinant of (a, b, c) in the projection.

    Evaluated in double precision with an exact rational fallback when
    the magnitude is too small to trust.
    """
    det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    if abs(det) >= _EXACT_FALLBACK:
        return _sign(det)
    exact = (Fraction(bx) - Fraction(ax)) * (Fraction(cy) - Fraction(ay)) - (
        Fraction(by) - Fraction(ay)
    ) * (Fraction(cx) - Fraction(ax))
    return _sign(exact)


def _segments_adjacent(i: int, j: int, n: int) -> bool:
    # Cyclic adjacency: consecutive segments share a bead.
    return abs(i - j) <= 1 or abs(i - j) == n - 1


@lru_cache(maxsize=8)
def _nonadjacent_pairs(n: int):
    i, j = np.triu_indices(n, k=2)
    keep = ~((i == 0) & (j == n - 1))
    return i[keep], j[keep]


def find_crossings(config: KnotConfiguration) -> list[Crossing]:
    """Every proper crossing between non-adjacent projected segments.

    Returned in traversal order of the earlier segment.  Raises
    DegenerateProjection for tangencies, endpoint hits, collinear
    overlap, z-ambiguity or coincident crossings on one segment.
    """
    pts = config.points
    n = pts.shape[0]
    i, j = _nonadjacent_pairs(n)

    # Vectorized float prefilter.  Pairs that clearly cross and pairs
    # with any near-zero orientation go through the careful scalar path;
    # orientation magnitudes >= the fallback threshold are exact in
    # sign, so everything else provably neither crosses nor touches.
    a = pts[i, :2]
    b = pts[(i + 1) % n, :2]
    c = pts[j, :2]
    d = pts[(j + 1) % n, :2]
    ba = b - a
    dc = d - c
    o1 = ba[:, 0] * (c[:, 1] - a[:, 1]) - ba[:, 1] * (c[:, 0] - a[:, 0])
    o2 = ba[:, 0] * (d[:, 1] - a[:, 1]) - ba[:, 1] * (d[:, 0] - a[:, 0])
    o3 = dc[:, 0] * (a[:, 1] - c[:, 1]) - dc[:, 1] * (a[:, 0] - c[:, 0])
    o4 = dc[:, 0] * (b[:, 1] - c[:, 1]) - dc[:, 1] * (b[:, 0] - c[:, 0])

    proper = (np.sign(o1) * np.sign(o2) < 0) & (np.sign(o3) * np.sign(o4) < 0)
    near_zero = (
        (np.abs(o1) < _EXACT_FALLBACK)
        | (np.abs(o2) < _EXACT_FALLBACK)
        | (np.abs(o3) < _EXACT_FALLBACK)
        | (np.abs(o4) < _EXACT_FALLBACK)
    )
    if near_zero.any():
        # Bounding-box gate: distant collinear pairs are common in
        # near-planar ropes and never interact.
        lo1 = np.minimum(a, b)
        hi1 = np.maximum(a, b)
        lo2 = np.minimum(c, d)
        hi2 = np.maximum(c, d)
        boxes = np.all((lo1 <= hi2) & (lo2 <= hi1), axis=1)
        near_zero &= boxes

    crossings: list[Crossing] = []
    for k in np.nonzero(proper | near_zero)[0]:
        cr = _segment_pair_crossing(pts, int(i[k]), int(j[k]), n)
        if cr is not None:
            crossings.append(cr)

    _check_param_ties(crossings)
    crossings.sort(key=lambda c: (c.seg_a, c.param_a))
    return crossings


def _segment_pair_crossing(pts: np.ndarray, i: int, j: int, n: int):
    ax, ay, az = pts[i]
    bx, by, bz = pts[(i + 1) % n]
    cx, cy, cz = pts[j]
    dx, dy, dz = pts[(j + 1) % n]

    d1 = _orient_sign(ax, ay, bx, by, cx, cy)
    d2 = _orient_sign(ax, ay, bx, by, dx, dy)
    d3 = _orient_sign(cx, cy, dx, dy, ax, ay)
    d4 = _orient_sign(cx, cy, dx, dy, bx, by)

    if d1 != d2 and d3 != d4 and 0 not in (d1, d2, d3, d4):
        # Proper interior crossing.  Parameters from the (well
        # conditioned) determinant ratios.
        o1 = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        o2 = (bx - ax) * (dy - ay) - (by - ay) * (dx - ax)
        o3 = (dx - cx) * (ay - cy) - (dy - cy) * (ax - cx)
        o4 = (dx - cx) * (by - cy) - (dy - cy) * (bx - cx)
        if o1 == o2 or o3 == o4:
            # Exact signs disagree with fully cancelled doubles: the
            # crossing cannot be located to better than xy_eps.
            raise DegenerateProjection(
                f"segments {i} and {j} cross tangentially"
            )
        t = o3 / (o3 - o4)  # along segment i
        u = o1 / (o1 - o2)  # along segment j
        px = ax + t * (bx - ax)
        py = ay + t * (by - ay)
        for ex, ey in ((ax, ay), (bx, by), (cx, cy), (dx, dy)):
            if (px - ex) ** 2 + (py - ey) ** 2 <= XY_EPS * XY_EPS:
                raise DegenerateProjection(
                    f"crossing of segments {i} and {j} within {XY_EPS:g} of an endpoint"
                )
        za = az + t * (bz - az)
        zb = cz + u * (dz - cz)
        if abs(za - zb) <= Z_EPS:
            raise DegenerateProjection(
                f"segments {i} and {j} cross with z separation {abs(za - zb):g}"
            )
        over = i if za > zb else j
        return Crossing(
            seg_a=i, seg_b=j, uv=(px, py), param_a=t, param_b=u, over_seg=over
        )

    if d1 == 0 and d2 == 0 and d3 == 0 and d4 == 0:
        # Collinear in projection: degenerate only if they overlap.
        if _collinear_overlap(ax, ay, bx, by, cx, cy, dx, dy):
            raise DegenerateProjection(
                f"segments {i} and {j} are collinear with overlap"
            )
        return None

    if 0 in (d1, d2, d3, d4):
        # An endpoint lies exactly on the other segment's line; it is a
        # real contact (hence degenerate) only if it falls inside both.
        if d1 * d2 <= 0 and d3 * d4 <= 0 and _touches(
            ax, ay, bx, by, cx, cy, dx, dy, d1, d2, d3, d4
        ):
            raise DegenerateProjection(
                f"segments {i} and {j} touch at an endpoint"
            )
    return None


def _on_segment(px, py, qx, qy, rx, ry) -> bool:
    # r collinear with pq: is it inside the closed box?
    return min(px, qx) <= rx <= max(px, qx) and min(py, qy) <= ry <= max(py, qy)


def _touches(ax, ay, bx, by, cx, cy, dx, dy, d1, d2, d3, d4) -> bool:
    if d1 == 0 and _on_segment(ax, ay, bx, by, cx, cy):
        return True
    if d2 == 0 and _on_segment(ax, ay, bx, by, dx, dy):
        return True
    if d3 == 0 and _on_segment(cx, cy, dx, dy, ax, ay):
        return True
    if d4 == 0 and _on_segment(cx, cy, dx, dy, bx, by):
        return True
    return False


def _collinear_overlap(ax, ay, bx, by, cx, cy, dx, dy) -> bool:
    if max(abs(bx - ax), abs(dx - cx)) >= max(abs(by - ay), abs(dy - cy)):
        lo1, hi1 = min(ax, bx), max(ax, bx)
        lo2, hi2 = min(cx, dx), max(cx, dx)
    else:
        lo1, hi1 = min(ay, by), max(ay, by)
        lo2, hi2 = min(cy, dy), max(cy, dy)
    return max(lo1, lo2) <= min(hi1, hi2)


def _check_param_ties(crossings: list[Crossing]) -> None:
    by_seg: dict[int, list[float]] = {}
    for c in crossings:
        by_seg.setdefault(c.seg_a, []).append(c.param_a)
        by_seg.setdefault(c.seg_b, []).append(c.param_b)
    for seg, params in by_seg.items():
        params.sort()
        for a, b in zip(params, params[1:]):
            if b - a <= _PARAM_TIE:
                raise DegenerateProjection(
                    f"two crossings coincide on segment {seg}"
                )


def compute_gauss_code(config: KnotConfiguration) -> GaussCode:
    """Traverse from bead 0 in increasing bead order and emit the code."""
    crossings = find_crossings(config)
    visits = []
    for idx, c in enumerate(crossings):
        visits.append((c.seg_a, c.param_a, idx, c.over_seg == c.seg_a))
        visits.append((c.seg_b, c.param_b, idx, c.over_seg == c.seg_b))
    visits.sort(key=lambda v: (v[0], v[1]))

    labels: dict[int, int] = {}
    entries = []
    for _seg, _param, idx, over in visits:
        if idx not in labels:
            labels[idx] = len(labels) + 1
        entries.append(GaussEntry(labels[idx], over))
    return GaussCode(tuple(entries))


def codes_equal(a: GaussCode, b: GaussCode) -> bool:
    """Exact element-wise equality; no rotation or relabeling equivalence."""
    return a.entries == b.entries


def crossing_count(code: GaussCode) -> int:
    return len(code.entries) // 2


def count_possible_codes(n: int) -> int:
    """Number of canonical Gauss codes with n crossings: (2n-1)!! * 2^n."""
    if n < 0:
        raise ValueError("crossing count must be non-negative")
    # Python integers are unbounded, so the product cannot silently wrap.
    total = 1
    for k in range(1, 2 * n, 2):
        total *= k
    return total << n


def format_code(code: GaussCode) -> str:
    """Render as `[1+,1-,2+,2-]`; no whitespace; `[]` for the empty code."""
    return "[" + ",".join(f"{l}{'+' if o else '-'}" for l, o in code.entries) + "]"


def parse_code(text: str) -> GaussCode:
    """Parse the bracketed entry list; inverse of format_code.

    Raises ParseError (with byte offset) on grammar violations and
    ValidationError when the sequence breaks the code invariants.
    """
    data = text.encode() if isinstance(text, str) else bytes(text)
    pos = 0

    def skip_ws(p: int) -> int:
        while p < len(data) and data[p] in b" \t\r\n":
            p += 1
        return p

    pos = skip_ws(pos)
    if pos >= len(data) or data[pos] != ord("["):
        raise ParseError("expected '['", pos)
    pos = skip_ws(pos + 1)

    entries: list[GaussEntry] = []
    if pos < len(data) and data[pos] == ord("]"):
        pos += 1
    else:
        while True:
            start = pos
            while pos < len(data) and data[pos] in b"0123456789":
                pos += 1
            if pos == start:
                raise ParseError("expected label digits", pos)
            label = int(data[start:pos])
            if pos >= len(data) or data[pos] not in b"+-":
                raise ParseError("expected '+' or '-'", pos)
            entries.append(GaussEntry(label, data[pos] == ord("+")))
            pos = skip_ws(pos + 1)
            if pos < len(data) and data[pos] == ord(","):
                pos = skip_ws(pos + 1)
                continue
            if pos < len(data) and data[pos] == ord("]"):
                pos += 1
                break
            raise ParseError("expected ',' or ']'", pos)

    pos = skip_ws(pos)
    if pos != len(data):
        raise ParseError("trailing characters after ']'", pos)
    return GaussCode(tuple(entries))
