"""Command-level DRAM disturbance-mitigation simulator and analytical
security toolkit.

The package models per-row activation counting (aggressor- and
victim-based), the alert/back-off mitigation protocol, five mitigation
scheme presets, worst-case security analysis with threshold solvers, a
counter-subarray latency/energy model, and a deterministic single-bank
command engine — plus attack generators and a brute-force oracle that
cross-checks the analysis on small banks.
"""

from .attacks import (AGGRESSOR_BASED, VICTIM_BASED, DamageObserver,
                      FeintingResult, FeintingSpec, RoundRobinSpec,
                      gen_benign, gen_idle, gen_round_robin, lines_to_trace,
                      run_feinting, trace_to_lines)
from .counters import (AGGRESSOR_COUNT, NO_COUNT, VICTIM_COUNT, CounterBank,
                       CsaLayout, CsaTiming, counter_update_latency,
                       csa_activations_for_event, csa_scaled_latency,
                       dual_activation_rows, victim_set)
from .dram import (DeviceGeometry, RefreshConfig, TimingSet,
                   builtin_timing_set, idle_bandwidth, rows_per_refresh)
from .energy import (EnergyModel, EnergyReport, WindowRow,
                     default_energy_model, energy_report, window_summary)
from .engine import (AboConfig, BankEngine, EngineMetrics, TraceEvent,
                     WindowStats, audit_log, log_to_csv_lines,
                     saturation_act_stream)
from .kernel import KERNEL_BUILD, CounterCore, TopQueue
from .schemes import (SCHEMES, MitigationAction, SchemeConfig, SchemeState,
                      preset)
from .security import (AnalysisParams, OracleCheck, RecurrenceConfig,
                       SecurityCurvePoint, brute_force_oracle, bw_bound,
                       hc_chronus, hc_prac, hc_pvac, max_initial_pool,
                       pool_recurrence_prac, pool_recurrence_pvac,
                       security_table, small_oracle_geometry, solve_nbo,
                       worst_case_hc)
from .units import ms, ns, to_ns, us

__version__ = "0.1.0"

__all__ = [
    "AGGRESSOR_BASED", "AGGRESSOR_COUNT", "AboConfig", "AnalysisParams",
    "BankEngine", "CounterBank", "CounterCore", "CsaLayout", "CsaTiming",
    "DamageObserver", "DeviceGeometry", "EngineMetrics", "EnergyModel",
    "EnergyReport", "FeintingResult", "FeintingSpec", "KERNEL_BUILD",
    "MitigationAction", "NO_COUNT", "OracleCheck", "RecurrenceConfig",
    "RefreshConfig", "RoundRobinSpec", "SCHEMES", "SchemeConfig",
    "SchemeState", "SecurityCurvePoint", "TimingSet", "TopQueue",
    "TraceEvent", "VICTIM_BASED", "VICTIM_COUNT", "WindowRow",
    "WindowStats", "audit_log", "builtin_timing_set", "brute_force_oracle",
    "bw_bound", "counter_update_latency", "csa_activations_for_event",
    "csa_scaled_latency", "default_energy_model", "dual_activation_rows",
    "energy_report", "gen_benign", "gen_idle", "gen_round_robin",
    "hc_chronus", "hc_prac", "hc_pvac", "idle_bandwidth", "lines_to_trace",
    "log_to_csv_lines", "max_initial_pool", "ms", "ns",
    "pool_recurrence_prac", "pool_recurrence_pvac", "preset",
    "rows_per_refresh", "run_feinting", "saturation_act_stream",
    "security_table", "small_oracle_geometry", "solve_nbo", "to_ns",
    "trace_to_lines", "us", "victim_set", "window_summary", "worst_case_hc",
]
