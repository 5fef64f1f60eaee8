"""Digital twin of a modular n78-band 1-bit reconfigurable intelligent surface."""

from .cell import BandReport, PinState, UnitCellModel, default_model, load_model
from .geometry import ArrayGeometry, Placement, all_off
from .optimizer import OptimizerSettings, PowerTrace, brute_force_best, greedy_optimize
from .testbed import Scenario, Testbed, load_scenario

__version__ = "0.1.0"

__all__ = [
    "ArrayGeometry", "BandReport", "OptimizerSettings", "PinState", "Placement",
    "PowerTrace", "Scenario", "Testbed", "UnitCellModel", "all_off",
    "brute_force_best", "default_model", "greedy_optimize", "load_model",
    "load_scenario", "__version__",
]
