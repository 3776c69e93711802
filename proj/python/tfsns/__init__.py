"""Python bindings for the tfsns spectral-Galerkin lab."""

from ._core import (
    BasisSpec,
    DomainError,
    NumericalError,
    ParameterError,
    __version__,
    apply_fractional_power,
    apply_M_eta,
    apply_M_eta_eta,
    bdg_constant,
    build_basis,
    grammian_diag,
    mainardi,
    mittag_leffler,
    ml_via_mainardi_quadrature,
    run,
    sobolev_norm,
    validate_params,
)

__all__ = [
    "BasisSpec",
    "DomainError",
    "NumericalError",
    "ParameterError",
    "__version__",
    "apply_fractional_power",
    "apply_M_eta",
    "apply_M_eta_eta",
    "bdg_constant",
    "build_basis",
    "grammian_diag",
    "mainardi",
    "mittag_leffler",
    "ml_via_mainardi_quadrature",
    "run",
    "sobolev_norm",
    "validate_params",
]
