"""Condensing interacting particle systems on the complete graph.

Event-driven simulation of zero-range / inclusion / independent-walker
dynamics, the mean-field occupation hierarchy and its size-biased form,
the tagged-particle limit chain, and the dominating-process coupling.
"""

from . import _core as _impl
from ._core import (  # noqa: F401
    ConfigError,
    InvariantError,
    MeanFieldSolution,
    NumericalError,
    RateKernel,
    derive_seed,
    integrate_meanfield,
    make_kernel,
    oracle_transient,
    poisson_profile,
    sample_initial,
    simulate_coupled,
    simulate_ips,
    simulate_limit,
    simulate_tagged,
    size_bias,
)

__all__ = [
    "ConfigError",
    "InvariantError",
    "MeanFieldSolution",
    "NumericalError",
    "RateKernel",
    "derive_seed",
    "integrate_meanfield",
    "make_kernel",
    "oracle_transient",
    "poisson_profile",
    "sample_initial",
    "simulate_coupled",
    "simulate_ips",
    "simulate_limit",
    "simulate_tagged",
    "size_bias",
]

__version__ = getattr(_impl, "__version__", "0.1.0")
