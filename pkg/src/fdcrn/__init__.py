"""Power control and relay selection for full-duplex cognitive relay networks."""

from .model import (
    ChannelSet,
    CoherentComponents,
    ComplexCoeff,
    Mechanism,
    PowerAllocation,
    SystemParams,
    amplification_gain,
    approx_rate,
    coherent_components,
    db_to_linear,
    exact_rate,
    gen_channels,
    hd_baseline_rate,
    hd_feasible,
    interference_coherent,
    interference_coherent_raw,
    interference_noncoherent,
    linear_to_db,
    optimal_phase,
    phase_to_delay,
    residual_si,
)
from .optimizer import (
    VAR_PRK,
    VAR_PS,
    ConcavityReport,
    InvariantViolation,
    RelaySolution,
    Scenario,
    SolverConfig,
    alternating_optimize,
    brute_force,
    feasible_interval,
    solve_1d,
    solve_ideal,
    verify_coordinate_concavity,
)
from .selection import SelectionResult, select_relay
from .harness import (
    ConfigError,
    ExperimentConfig,
    FixedPowerSweep,
    ResultRow,
    emit_plot_script,
    load_config,
    parse_config_text,
    read_result_rows,
    run_experiment,
    run_fixed_power_sweep,
)

__version__ = "0.1.0"
