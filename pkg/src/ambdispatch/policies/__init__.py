"""Policy registry: baselines, their rollout variants and the two optimization policies."""
from __future__ import annotations

import numpy as np

from .heuristics import (Andersson, Bandara, ClosestAvailable, Heuristic, Jagtenberg, Lee, Mayorga,
                         PreparednessModel, covered_count, mexclp)
from .twostage import (ArcPolicy, ItineraryPolicy, RolloutPolicy, TwoStageConfig, TwoStagePolicy,
                       choose, enumerate_first_stage)

HEURISTICS = {cls.name: cls for cls in (ClosestAvailable, Andersson, Lee, Mayorga, Bandara, Jagtenberg)}
OPTIMIZERS = ("arc", "itinerary")
POLICY_NAMES = tuple(HEURISTICS) + OPTIMIZERS + tuple(f"rollout:{h}" for h in HEURISTICS)


def make_heuristic(name: str, instance, cell_weights: np.ndarray, busy: float | None = None) -> Heuristic:
    try:
        cls = HEURISTICS[name]
    except KeyError:
        raise ValueError(f"unknown heuristic {name!r}; choose from {sorted(HEURISTICS)}") from None
    if cls is Jagtenberg and busy is not None:
        return cls(instance, cell_weights, busy=busy)
    return cls(instance, cell_weights)


def make_policy(name: str, instance, rate_model, window: tuple[float, float],
                config: TwoStageConfig | None = None, engine: str = "highs", busy: float | None = None):
    """Build a policy by registry name; ``window`` sets the demand weights the heuristics use."""
    weights = rate_model.cell_weights(*window)
    if name in HEURISTICS:
        return make_heuristic(name, instance, weights, busy)
    if name == "arc":
        return ArcPolicy(instance, rate_model, config, engine=engine)
    if name == "itinerary":
        return ItineraryPolicy(instance, rate_model, config)
    if name.startswith("rollout:"):
        base = make_heuristic(name.split(":", 1)[1], instance, weights, busy)
        return RolloutPolicy(instance, rate_model, base, config)
    raise ValueError(f"unknown policy {name!r}; choose from {list(POLICY_NAMES)}")


__all__ = ["make_policy", "make_heuristic", "POLICY_NAMES", "HEURISTICS", "TwoStageConfig",
           "ArcPolicy", "ItineraryPolicy", "RolloutPolicy", "TwoStagePolicy", "PreparednessModel",
           "mexclp", "covered_count", "choose", "enumerate_first_stage",
           "ClosestAvailable", "Andersson", "Lee", "Mayorga", "Bandara", "Jagtenberg"]
