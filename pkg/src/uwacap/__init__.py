"""Capacity, power and band models for underwater acoustic links."""

from uwacap.physics import (
    DomainError,
    EnvironmentParams,
    absorption_db_per_km,
    an_product,
    frequency_grid,
    noise_components,
    noise_psd_linear,
    optimal_frequency,
    path_loss_linear,
)
from uwacap.solver import (
    CapacityUnreachable,
    LinkQuery,
    LinkSolution,
    SolverSettings,
    TransmissionBand,
    band_for_k,
    capacity_for_k,
    power_for_k,
    rescale_spreading,
    solve_link,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityUnreachable",
    "DomainError",
    "EnvironmentParams",
    "LinkQuery",
    "LinkSolution",
    "SolverSettings",
    "TransmissionBand",
    "absorption_db_per_km",
    "an_product",
    "band_for_k",
    "capacity_for_k",
    "frequency_grid",
    "noise_components",
    "noise_psd_linear",
    "optimal_frequency",
    "path_loss_linear",
    "power_for_k",
    "rescale_spreading",
    "solve_link",
]
