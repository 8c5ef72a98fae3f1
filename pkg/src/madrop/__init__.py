"""Energy-minimal packet scheduling for multiple-access channels.

Builds the buffering/dropping MDP for a single user, optimizes its
transition matrix by simulated annealing against the asymptotic system
energy, and validates the analysis with a finite-user Monte Carlo uplink
simulator.
"""

from .channel import FadingModel, PathLossModel, sample_user_gain
from .schemes import SchemeKind, SchemeSpec, describe, parse_scheme
from .chain import (
    InvalidMatrixError,
    ThresholdSet,
    TransitionKind,
    TransitionMatrix,
    buffer_feed_rate,
    build_mask,
    drop_rate,
    packets_scheduled,
    probs_from_thresholds,
    stationary,
    thresholds_from_probs,
    validate_matrix,
)
from .vu import (
    ProductChannelCdf,
    VuDistribution,
    build_vu_distribution,
    product_channel_cdf,
)
from .energy import (
    EnergyResult,
    from_db,
    piecewise_gain_energy,
    system_energy,
    to_db,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
