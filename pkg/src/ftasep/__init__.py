"""Facilitated TASEP: event-driven simulation and exact stationary analysis.

A particle jumps one site to the right at rate 1 when its target is empty
and its left neighbor occupied.  The package provides the lattice types and
combinatorics, an exact Gillespie engine with seeded replayable streams,
the height-function and zero-range representations, exact invariant-measure
calculations, the subcritical limit recursion, and a CLI that runs the
standard experiments with CSV/JSON/figure reports.
"""

__version__ = "0.1.0"

from .lattice import (
    Configuration,
    Pattern,
    Topology,
    alternating_config,
    as_pattern,
    count_pattern,
    first_double_zero,
    is_frozen,
    is_no_adjacent_zeros,
    pair_counts,
    shift,
)
from .rng import RngStream

__all__ = [
    "Configuration",
    "Pattern",
    "RngStream",
    "Topology",
    "alternating_config",
    "as_pattern",
    "count_pattern",
    "first_double_zero",
    "is_frozen",
    "is_no_adjacent_zeros",
    "pair_counts",
    "shift",
    "__version__",
]
