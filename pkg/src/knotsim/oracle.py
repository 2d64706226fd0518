"""Degeneracy-tolerant front end for the crossing oracle.

Non-generic projections (tangencies, endpoint hits) get a deterministic
micro-perturbation applied to a copy of the coordinates; the dynamics
never see it.
"""
from __future__ import annotations

import numpy as np

from .gauss import DegenerateProjection, GaussCode, compute_gauss_code
from .geometry import KnotConfiguration

PERTURBATION = 1e-7
MAX_TRIES = 5


def code_with_retry(config: KnotConfiguration, step_index: int) -> GaussCode:
    """Gauss code of the configuration, retrying degenerate projections.

    Each retry redraws uniform noise of magnitude PERTURBATION seeded
    from (step index, attempt), so results are reproducible and
    independent of execution order.
    """
    try:
        return compute_gauss_code(config)
    except DegenerateProjection:
        pass
    for attempt in range(1, MAX_TRIES + 1):
        rng = np.random.default_rng([step_index, attempt])
        jitter = rng.uniform(-PERTURBATION, PERTURBATION, size=config.points.shape)
        try:
            return compute_gauss_code(KnotConfiguration(config.points + jitter))
        except DegenerateProjection:
            continue
    raise DegenerateProjection(
        f"projection still degenerate after {MAX_TRIES} perturbed retries"
    )
