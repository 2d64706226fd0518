"""Regenerate shipped fixtures and golden images.

Builds the two-curl goal exemplar `tie2_a.knot` (Gauss code
[1+,1-,2+,2-]) from an analytic construction, verifies it, and freezes
the renderer goldens.  Run from the repository root:

    python3 scripts/make_fixtures.py
"""
from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from oracles import rational_gauss_code, resample_loop  # noqa: E402

from knotsim.gauss import compute_gauss_code, format_code  # noqa: E402
from knotsim.geometry import KnotConfiguration, save_knot  # noqa: E402
from knotsim.render import camera_for, render_pane, write_png  # noqa: E402

# One outward curl along a straight run (local frame: travel +u, outward
# +v).  The long entry segment carries the over-pass; the loop closes
# underneath it.  Final column is the height profile.
_CURL = np.array(
    [
        [-0.50, 0.00, 1.0],
        [0.10, 0.00, 1.0],
        [0.25, 0.15, 0.5],
        [0.15, 0.40, 0.0],
        [-0.10, 0.35, -0.5],
        [-0.15, 0.10, -1.0],
        [-0.10, -0.15, -1.0],
        [0.30, -0.08, -0.3],
    ]
)

_CURL_SIZE = 0.8
_CURL_HEIGHT = 0.08


def two_curl_loop(beads: int = 40) -> np.ndarray:
    """Circle with 180-degree-symmetric outward curls at the top and
    bottom; over-pass first at both crossings."""
    waypoints = []

    def arc(start_deg, stop_deg, step=15):
        for deg in range(start_deg, stop_deg + 1, step):
            th = np.radians(deg)
            waypoints.append([np.cos(th), np.sin(th), 0.0])

    def curl(center_deg):
        th = np.radians(center_deg)
        pos = np.array([np.cos(th), np.sin(th)])
        tangent = np.array([-np.sin(th), np.cos(th)])
        normal = pos.copy()
        for u, v, h in _CURL * [_CURL_SIZE, _CURL_SIZE, _CURL_HEIGHT]:
            xy = pos + u * tangent + v * normal
            waypoints.append([xy[0], xy[1], h])

    arc(0, 45)
    curl(90)
    arc(135, 225)
    curl(270)
    arc(315, 345)

    pts = resample_loop(np.asarray(waypoints), beads)
    # Rescale so the mean edge equals the rest length (total 2 m).
    edges = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    return pts * (beads * 0.05 / edges.sum())


def main() -> None:
    pts = two_curl_loop()
    config = KnotConfiguration(pts)

    code = format_code(compute_gauss_code(config))
    oracle = [(l, "+" if o else "-") for l, o in rational_gauss_code(pts)]
    oracle_text = "[" + ",".join(f"{l}{s}" for l, s in oracle) + "]"
    print(f"two-curl loop: oracle {oracle_text}, implementation {code}")
    if code != "[1+,1-,2+,2-]" or oracle_text != code:
        raise SystemExit("fixture construction no longer yields [1+,1-,2+,2-]")

    data_dir = ROOT / "src" / "knotsim" / "data"
    data_dir.mkdir(parents=True, exist_ok=True)
    save_knot(data_dir / "tie2_a.knot", config)
    print(f"wrote {data_dir / 'tie2_a.knot'}")

    golden_dir = ROOT / "tests" / "golden"
    golden_dir.mkdir(parents=True, exist_ok=True)
    write_png(golden_dir / "tie2_a.png", render_pane(config, camera_for(config)))

    from test_gauss import SINGLE_CROSSING_POINTS  # noqa: E402

    single = KnotConfiguration(SINGLE_CROSSING_POINTS)
    write_png(
        golden_dir / "single_crossing.png", render_pane(single, camera_for(single))
    )
    print(f"wrote goldens under {golden_dir}")


if __name__ == "__main__":
    main()
