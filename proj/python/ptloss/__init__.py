"""Perturbed KL distillation: losses, proxy teachers and coefficient search."""

from ._ptloss import (
    ConfigError,
    DegenerateTeacher,
    Error,
    InvalidInput,
    IoError,
    PerturbationConfig,
    SchemaError,
    SearchFailure,
    SolverDivergence,
    TrainingDivergence,
    __version__,
    focal_coefficients,
    generate_gaussian,
    kl_loss,
    ls_coefficients,
    maclaurin_log,
    pt_loss,
    pt_loss_grad,
    quality_score,
    required_order,
    risk_gap_terms,
    run_cli,
    search_coefficients,
    softmax,
    solve_proxy,
    solve_proxy_batch,
    spearman_correlation,
    truncation_bound,
    verify_equivalence,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
