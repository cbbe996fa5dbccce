"""gLV simulation on a variable-basis state space with species turnover."""

from .algebra import (
    ZERO,
    Universe,
    VBVector,
    inter_add,
    project,
    scale,
    union_add,
    unit_from,
    unit_on,
    zero_empty,
    zero_full,
)
from .errors import (
    ConfigError,
    ContractError,
    DivergenceError,
    DomainError,
    ParseError,
    StepSizeError,
    VarBasisError,
)
from .flow import (
    AntibioticSignal,
    GlobalParams,
    IntegratorSettings,
    RestrictedParams,
    Scheme,
    flow_rhs,
    restrict,
    step_crank_nicolson,
    step_explicit,
)
from .hybrid import (
    ExoKind,
    HybridArc,
    HybridTime,
    JumpConfig,
    JumpKind,
    JumpRecord,
    Segment,
    ZenoGuard,
    apply_auto_appear,
    apply_auto_extinct,
    apply_exogenous,
    classify_exogenous,
    detect_auto_appear,
    detect_auto_extinct,
    run,
)
from .scenario_io import (
    Scenario,
    check_hybrid_time,
    dump_scenario,
    emit_plot_data,
    load_params,
    load_scenario,
    write_events,
    write_timeseries,
)

__version__ = "0.1.0"
from .selfcheck import SelfCheckReport, check_laws

__all__ = [
    "ZERO",
    "Universe",
    "VBVector",
    "inter_add",
    "project",
    "scale",
    "union_add",
    "unit_from",
    "unit_on",
    "zero_empty",
    "zero_full",
    "ConfigError",
    "ContractError",
    "DivergenceError",
    "DomainError",
    "ParseError",
    "StepSizeError",
    "VarBasisError",
    "AntibioticSignal",
    "GlobalParams",
    "IntegratorSettings",
    "RestrictedParams",
    "Scheme",
    "flow_rhs",
    "restrict",
    "step_crank_nicolson",
    "step_explicit",
    "ExoKind",
    "HybridArc",
    "HybridTime",
    "JumpConfig",
    "JumpKind",
    "JumpRecord",
    "Segment",
    "ZenoGuard",
    "apply_auto_appear",
    "apply_auto_extinct",
    "apply_exogenous",
    "classify_exogenous",
    "detect_auto_appear",
    "detect_auto_extinct",
    "run",
    "Scenario",
    "check_hybrid_time",
    "dump_scenario",
    "emit_plot_data",
    "load_params",
    "load_scenario",
    "write_events",
    "write_timeseries",
    "SelfCheckReport",
    "check_laws",
]
