"""Rejection samplers whose runtime does not leak the private data.

Also: accounting for the runtime channel, and a harness that checks both
properties statistically.
"""

from .accounting import (
    EpsDelta,
    RBound,
    TradeoffCurve,
    batched_R,
    delta_of_eps,
    eps_of_delta,
    exact_geometric_tradeoff,
    exp_mech_R,
    f_R,
    geom_max_divergence,
    runtime_R,
)
from .adaptive import LogHolderTarget, RefinementSchedule, adaptive_sample, build_grid
from .distributions import GaussianLaw, GeometricLaw, KNormLaw, RngStream, UniformBox
from .exceptions import *  # noqa: F401,F403
from .mechanisms import ERMSpec, KNGTarget, StronglyConcaveTarget, build_erm_target, gaussian_envelope, knorm_envelope
from .samplers import (
    Envelope,
    SampleTrace,
    UnnormalizedTarget,
    additive_wait_reject,
    simple_reject,
    squeeze_reject,
    truncated_reject,
)

__version__ = "0.1.0"
