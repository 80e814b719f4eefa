"""Exact and simulated chromosome painting by the ancestral recombination graph.

Modules: ``partitions`` (set and interval partitions), ``exactarg`` (generator
and stationary law), ``scenario`` (coalescence-scenario sums and large-rho
approximations), ``simulate`` (ARG and interval-process simulation),
``thetainfty`` (limit point process), ``moran`` (forward model), ``stats``.
"""
__version__ = "0.1.0"

from .partitions import IntervalPartition, LociSet, SetPartition, SizeLimitError, metric_d
from .exactarg import stationary_exact, hitting_probability, transient_law
from .scenario import F_dp, F_bruteforce, approx_stationary, hitting_approx
from .simulate import SimConfig, simulate_arg, simulate_interval, equilibrium_ensemble
from .thetainfty import sample_theta_infty, theta_moment, theta_mgf

__all__ = [
    "IntervalPartition", "LociSet", "SetPartition", "SizeLimitError", "metric_d",
    "stationary_exact", "hitting_probability", "transient_law",
    "F_dp", "F_bruteforce", "approx_stationary", "hitting_approx",
    "SimConfig", "simulate_arg", "simulate_interval", "equilibrium_ensemble",
    "sample_theta_infty", "theta_moment", "theta_mgf",
]
