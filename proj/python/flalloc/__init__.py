"""Energy/delay resource allocation for federated learning over FDMA.

Thin wrapper over the C++ core; see the README for the model.
"""

from ._core import (
    Allocation,
    CostBreakdown,
    Device,
    DeviceProfile,
    InfeasibleError,
    ParseError,
    Scenario,
    SolveReport,
    SweepResult,
    SystemConfig,
    Weights,
    check_feasibility,
    evaluate,
    generate_scenario,
    lambert_w0,
    lambert_wm1,
    load_config,
    load_scenario,
    run_sweep,
    solve,
    sweep_csv,
)

__all__ = [
    "Allocation",
    "CostBreakdown",
    "Device",
    "DeviceProfile",
    "InfeasibleError",
    "ParseError",
    "Scenario",
    "SolveReport",
    "SweepResult",
    "SystemConfig",
    "Weights",
    "check_feasibility",
    "evaluate",
    "generate_scenario",
    "lambert_w0",
    "lambert_wm1",
    "load_config",
    "load_scenario",
    "run_sweep",
    "solve",
    "sweep_csv",
]
