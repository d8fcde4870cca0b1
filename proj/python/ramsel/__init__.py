"""Ridge after model selection: screening, ridge with GCV, weekly bridge nowcasts, Monte Carlo."""

from ._ramsel import (
    ConfigError,
    DataError,
    DataGapError,
    DomainError,
    Error,
    NumericalError,
    Panel,
    RidgeFit,
    RidgeOptions,
    alpha_grid,
    gcv,
    gcv_minimize,
    load_panel,
    normal_quantile,
    nowcast,
    ridge_after_selection,
    ridge_solve,
    run_mc,
    screen,
    simulate_dgp,
    synthetic_panel,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "DataGapError",
    "DomainError",
    "Error",
    "NumericalError",
    "Panel",
    "RidgeFit",
    "RidgeOptions",
    "alpha_grid",
    "gcv",
    "gcv_minimize",
    "load_panel",
    "normal_quantile",
    "nowcast",
    "ridge_after_selection",
    "ridge_solve",
    "run_mc",
    "screen",
    "simulate_dgp",
    "synthetic_panel",
]
