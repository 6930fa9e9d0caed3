"""Random travel and service time laws, expressed as inverse-CDF transforms of uniforms.

All samplers accept scalars or numpy arrays of uniforms so that pre-drawn
streams can be replayed exactly.
"""
from __future__ import annotations

import math

import numpy as np

from .core import DomainError

SCENE_BASE = 600.0
HOSPITAL_BASE = 600.0
HOSPITAL_CAP = 600.0
SPREAD = 150.0

# uniform that reproduces the mean of every exponential component
U_MEAN = 1.0 - math.exp(-1.0)


def _log_tail(u):
    """log(1 - u), validating u in [0, 1); scalars skip numpy."""
    if isinstance(u, float | int):
        if not 0.0 <= u < 1.0:
            raise DomainError("uniform draw must lie in [0, 1)")
        return math.log1p(-u)
    u = np.asarray(u, dtype=float)
    if np.any(u >= 1.0) or np.any(u < 0.0) or np.any(np.isnan(u)):
        raise DomainError("uniform draw must lie in [0, 1)")
    return np.log1p(-u)


def sample_travel_time(free_flow, u):
    return free_flow * (1.0 - _log_tail(u))


def sample_scene_time(severity, u):
    return SCENE_BASE - SPREAD * severity * _log_tail(u)


def sample_hospital_time(severity, u):
    extra = -SPREAD * severity * _log_tail(u)
    return HOSPITAL_BASE + (min(HOSPITAL_CAP, extra) if isinstance(extra, float) else np.minimum(HOSPITAL_CAP, extra))


def expected_travel_time(free_flow):
    return 2.0 * free_flow


def expected_scene_time(severity):
    return SCENE_BASE + SPREAD * severity


def expected_hospital_time(severity):
    """600 + E[min(600, X)] with X exponential of mean 150c."""
    mean = SPREAD * severity
    if mean == 0:
        return HOSPITAL_BASE
    return HOSPITAL_BASE + mean * (1.0 - math.exp(-HOSPITAL_CAP / mean))


def cycle_time(free_flow_to_scene: float, severity: int, free_flow_to_hospital: float | None,
               draws) -> float:
    """Seconds from dispatch until the ambulance is free again.

    ``draws`` holds the four uniforms (to scene, scene, to hospital, handoff);
    pass ``None`` as the hospital leg for types released at the scene.
    """
    u_go, u_scene, u_trans, u_hosp = draws
    total = sample_travel_time(free_flow_to_scene, u_go) + sample_scene_time(severity, u_scene)
    if free_flow_to_hospital is not None:
        total += sample_travel_time(free_flow_to_hospital, u_trans) + sample_hospital_time(severity, u_hosp)
    return float(total)
