"""Knot manipulation environment: bead-chain rope physics, a Gauss-code
crossing oracle, image observations and goal-conditioned episodic tasks."""

from .geometry import (
    Action,
    Box,
    InvalidConfiguration,
    KnotConfiguration,
    WorldState,
    center_of_mass,
    circle_configuration,
    denormalize_action,
    load_knot,
    nearest_key_point,
    save_knot,
)
from .gauss import (
    Crossing,
    DegenerateProjection,
    GaussCode,
    GaussEntry,
    ParseError,
    ValidationError,
    codes_equal,
    compute_gauss_code,
    count_possible_codes,
    crossing_count,
    find_crossings,
    format_code,
    parse_code,
)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "Box",
    "Crossing",
    "DegenerateProjection",
    "GaussCode",
    "GaussEntry",
    "InvalidConfiguration",
    "KnotConfiguration",
    "ParseError",
    "ValidationError",
    "WorldState",
    "center_of_mass",
    "circle_configuration",
    "codes_equal",
    "compute_gauss_code",
    "count_possible_codes",
    "crossing_count",
    "denormalize_action",
    "find_crossings",
    "format_code",
    "load_knot",
    "nearest_key_point",
    "parse_code",
    "save_knot",
]
