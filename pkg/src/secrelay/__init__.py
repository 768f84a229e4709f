"""Secrecy-rate analysis and simulation for AF relay networks whose relays
are helpful but untrusted, with destination-based jamming against them and
any external eavesdroppers.

Layering: model (parameters, geometry, mean gains) -> specfun (exponential
integrals, hypoexponential CDFs, subset sums) -> channel (per-trial fading
draws and exact SINRs) -> policy (power splits and relay selection) ->
analytics (closed-form ESR/SOP/SER and their asymptotes) -> montecarlo
(trial engine and quadrature oracles) -> cli (experiment runner).
"""

from .model import (
    ConfigError,
    EveModel,
    MeanGains,
    Modulation,
    SystemConfig,
    Topology,
    TopologyError,
    mean_gains_from_topology,
    paper_topology,
    validate,
)
from .channel import (
    BatchDraws,
    ChannelDraw,
    RngStream,
    draw_batch,
    draw_realization,
)
from .policy import (
    CParams,
    PolicyOutcome,
    RegimeWarning,
    Scheme,
    c_params,
    feedback_overhead_bits,
    opa_ce,
    opa_nce,
    opa_nce_statistical,
    opa_numeric,
    run_scheme,
    run_scheme_batch,
    secrecy_rate,
    select_relay_exact,
    select_relay_maxgain,
)
from .analytics import (
    EsrBreakdown,
    ThresholdRt,
    dmt_reliability,
    dmt_secrecy,
    esr_dbcj,
    esr_dt_lb,
    leakage_floor,
    outage_threshold,
    ppos_dbcj,
    ppos_dbcj_asymptotic,
    ppos_dt,
    ser_dbcj,
    ser_dbcj_asymptotic,
    sop_dbcj,
    sop_dbcj_asymptotic,
    sop_dt,
)
from .montecarlo import (
    Metric,
    MetricEstimate,
    SchemeTrace,
    derive_seed,
    esr_quadrature_oracle,
    estimate,
    estimate_from_trace,
    ser_quadrature_oracle,
    simulate,
    sweep,
)
from .specfun import QuadratureError
from .cli import ExperimentSpec, ResultRow, SpecError, load_spec, preset, read_table, run

__all__ = [
    "BatchDraws",
    "CParams",
    "ChannelDraw",
    "ConfigError",
    "EsrBreakdown",
    "EveModel",
    "ExperimentSpec",
    "MeanGains",
    "Metric",
    "MetricEstimate",
    "Modulation",
    "PolicyOutcome",
    "QuadratureError",
    "RegimeWarning",
    "ResultRow",
    "RngStream",
    "Scheme",
    "SchemeTrace",
    "SpecError",
    "SystemConfig",
    "ThresholdRt",
    "Topology",
    "TopologyError",
    "c_params",
    "derive_seed",
    "dmt_reliability",
    "dmt_secrecy",
    "draw_batch",
    "draw_realization",
    "esr_dbcj",
    "esr_dt_lb",
    "esr_quadrature_oracle",
    "estimate",
    "estimate_from_trace",
    "feedback_overhead_bits",
    "leakage_floor",
    "load_spec",
    "mean_gains_from_topology",
    "opa_ce",
    "opa_nce",
    "opa_nce_statistical",
    "opa_numeric",
    "outage_threshold",
    "paper_topology",
    "ppos_dbcj",
    "ppos_dbcj_asymptotic",
    "ppos_dt",
    "preset",
    "read_table",
    "run",
    "run_scheme",
    "run_scheme_batch",
    "secrecy_rate",
    "select_relay_exact",
    "select_relay_maxgain",
    "ser_dbcj",
    "ser_dbcj_asymptotic",
    "ser_quadrature_oracle",
    "simulate",
    "sop_dbcj",
    "sop_dbcj_asymptotic",
    "sop_dt",
    "sweep",
    "validate",
]
