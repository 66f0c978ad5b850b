"""Infinite-width GNN kernels and Gaussian-process node prediction."""

from ._gnngp import (
    ConvergenceError,
    Graph,
    InputError,
    NumericalError,
    PreconditionError,
    correlation_map,
    infer,
    kernel,
    kernel_lowrank,
    load_dataset,
    mc_covariance,
    posterior_mean,
    posterior_mean_lowrank,
    posterior_variance,
    posterior_variance_lowrank,
    relu_expectation,
)

__all__ = [
    "ConvergenceError",
    "Graph",
    "InputError",
    "NumericalError",
    "PreconditionError",
    "correlation_map",
    "infer",
    "kernel",
    "kernel_lowrank",
    "load_dataset",
    "mc_covariance",
    "posterior_mean",
    "posterior_mean_lowrank",
    "posterior_variance",
    "posterior_variance_lowrank",
    "relu_expectation",
]
