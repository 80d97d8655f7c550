"""Solver and regularity diagnostics for Grad-Mercier type elliptic problems."""

from ._core import (
    ConfigError,
    DiagnosticError,
    DivergenceError,
    Field,
    Grid,
    NonConvergenceError,
    Operator,
    holder_gradient,
    lp_norm,
    nonlocal_source,
    norm_report,
    pbmo_seminorm,
    pucci_minus,
    pucci_plus,
    radial_oracle,
    run_config,
    sample,
    sample_boundary,
    solve_frozen,
    solve_grad_mercier,
    superlevel_measure,
    verify,
    w2p_norm,
)

__all__ = [
    "ConfigError",
    "DiagnosticError",
    "DivergenceError",
    "Field",
    "Grid",
    "NonConvergenceError",
    "Operator",
    "holder_gradient",
    "lp_norm",
    "nonlocal_source",
    "norm_report",
    "pbmo_seminorm",
    "pucci_minus",
    "pucci_plus",
    "radial_oracle",
    "run_config",
    "sample",
    "sample_boundary",
    "solve_frozen",
    "solve_grad_mercier",
    "superlevel_measure",
    "verify",
    "w2p_norm",
]
