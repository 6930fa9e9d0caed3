"""Ambulance dispatch: simulator, two-stage stochastic policies and baselines."""
from .core import (Ambulance, Call, CostModel, DomainError, GridGeometry, Hospital, Instance,
                   Station, TypeTable, penalized_response_time)
from .scenarios import RateModel, Scenario, estimate_rates, sample_scenario, week_time
from .sim import SystemState, Simulator, run_replication

__version__ = "0.1.0"

__all__ = ["Ambulance", "Call", "CostModel", "DomainError", "GridGeometry", "Hospital", "Instance",
           "Station", "TypeTable", "penalized_response_time", "RateModel", "Scenario",
           "estimate_rates", "sample_scenario", "week_time", "SystemState", "Simulator",
           "run_replication"]
