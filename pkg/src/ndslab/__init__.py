"""Simulation and analysis of the NDS chaotic spiking neuron."""

from .analysis import (
    ClassificationLabel,
    FixedPointReport,
    analyze_fixed_points,
    classify,
    eigenvalues3,
    estimate_lyapunov,
    jacobian,
    rossler_fixed_points,
    solve_fixed_points,
)
from .control import (
    FeedbackConfig,
    FeedbackSweepSpec,
    InputTrain,
    SpikeHistory,
    StabilizationResult,
    detect_period,
    feedback_signal,
    input_signal,
    stabilize_run,
    sweep_locking_pairs,
)
from .core import (
    DiscretizationConfig,
    DivergenceError,
    NDSParams,
    RosslerParams,
    StateVec,
    Trajectory,
    euler_step,
    modified_rossler_step,
    nds_step,
    rossler_rhs,
    simulate,
    ts_bound,
)
from .experiments import (
    SETUPS,
    CapacityResult,
    ParamSetup,
    ValidityRange,
    capacity_experiment,
    generate_tables,
    range_sweep,
    run_validity_check,
)

__version__ = "0.1.0"
