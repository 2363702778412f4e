"""Numerical Wiener chaos calculus on a finite grid.

Multiple-integral algebra with exact moments and Gamma functionals, Stein
normal-approximation diagnostics, independence tests, and the experiment
harness that exercises variance decoupling across disjoint chaos summands.
"""

from .chaos import (
    ChaosExpansion,
    add,
    chaos_expansion,
    constant,
    cross_gamma,
    evaluate,
    evaluate_batch,
    evaluate_samples,
    expansion_from_dict,
    expansion_to_dict,
    fourth_cumulant,
    gamma,
    gamma_residual,
    load_expansion,
    multiply,
    save_expansion,
    scale,
    second_moment,
    shift,
    single_chaos,
    variance,
)
from .families import (
    CounterexampleBatch,
    CounterexampleSample,
    custom_single_chaos,
    diagonal_second_chaos,
    half_support_second_chaos,
    simulate_counterexample,
)
from .grid import (
    GaussianSample,
    Grid,
    IncrementStream,
    make_grid,
    sample_increments,
    sample_increments_block,
)
from .harness import (
    EXPERIMENTS,
    ExperimentConfig,
    ExperimentReport,
    report_from_json,
    report_to_csv,
    report_to_dict,
    report_to_json,
    run_class_a,
    run_counterexample,
    run_decoupling,
    run_experiment,
    run_three_way,
    save_report,
)
from .hermite import hermite_eval, hermite_table
from .independence import (
    ClassADiagnostic,
    IndependenceResult,
    StrongIndependenceResult,
    class_a_diagnostic,
    integrals_independent,
    strongly_independent,
)
from .kernels import (
    StepKernel,
    contract,
    inner_product,
    is_symmetric,
    kernel_from_dict,
    kernel_norm,
    kernel_to_dict,
    linear_combine,
    load_kernel,
    save_kernel,
    step_kernel,
    symmetrize,
    zero_kernel,
)
from .stein import (
    CriterionEstimate,
    CriterionFunctionals,
    conditional_residual_estimate,
    criterion_functionals,
    fourth_moment_bound,
    kolmogorov_distance_mc,
    stein_solution,
)

__version__ = "0.1.0"

__all__ = [
    "ChaosExpansion",
    "ClassADiagnostic",
    "CounterexampleBatch",
    "CounterexampleSample",
    "CriterionEstimate",
    "CriterionFunctionals",
    "EXPERIMENTS",
    "ExperimentConfig",
    "ExperimentReport",
    "GaussianSample",
    "Grid",
    "IncrementStream",
    "IndependenceResult",
    "StepKernel",
    "StrongIndependenceResult",
    "add",
    "chaos_expansion",
    "class_a_diagnostic",
    "conditional_residual_estimate",
    "constant",
    "contract",
    "criterion_functionals",
    "cross_gamma",
    "custom_single_chaos",
    "diagonal_second_chaos",
    "evaluate",
    "evaluate_batch",
    "evaluate_samples",
    "expansion_from_dict",
    "expansion_to_dict",
    "fourth_cumulant",
    "fourth_moment_bound",
    "gamma",
    "gamma_residual",
    "half_support_second_chaos",
    "hermite_eval",
    "hermite_table",
    "inner_product",
    "integrals_independent",
    "is_symmetric",
    "kernel_from_dict",
    "kernel_norm",
    "kernel_to_dict",
    "kolmogorov_distance_mc",
    "linear_combine",
    "load_expansion",
    "load_kernel",
    "make_grid",
    "multiply",
    "report_from_json",
    "report_to_csv",
    "report_to_dict",
    "report_to_json",
    "run_class_a",
    "run_counterexample",
    "run_decoupling",
    "run_experiment",
    "run_three_way",
    "sample_increments",
    "sample_increments_block",
    "save_expansion",
    "save_kernel",
    "save_report",
    "scale",
    "second_moment",
    "shift",
    "simulate_counterexample",
    "single_chaos",
    "step_kernel",
    "stein_solution",
    "strongly_independent",
    "symmetrize",
    "variance",
    "zero_kernel",
]
