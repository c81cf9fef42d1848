"""scalesim: one-dimensional diffusions with singular scale functions.

Construct scale/speed pairs (fat-Cantor scales, the devil's staircase,
Orey drift families, skew transforms and the subspace family s_c), compute
their SDE coefficients and Fukushima-decomposition measures, simulate paths
by an exact-in-law embedded chain or Euler stepping, and verify that
distinct members of the family solve one and the same SDE.
"""

from .cantor import GeneralizedCantorSpec, SingularMeasure, fat_cantor_spec, middle_thirds_spec
from .catalog import (
    brownian_spec,
    cantor_spec,
    orey_spec,
    skew_bm_spec,
    spec_by_name,
    staircase_spec,
    subspace_of,
)
from .coefficients import (
    Drift,
    HypothesisReport,
    SmoothSignedMeasure,
    check_h4prime_equivalence,
    classify_boundary,
    drift_b,
    drift_function,
    m_tilde,
    sigma,
    smooth_measure_N,
    validate_hypotheses,
)
from .diffusion import DiffusionSpec, SpeedMeasure
from .intervals import Interval
from .scale import (
    InverseScale,
    LebesgueDecomposition,
    ScaleFunction,
    abs_cont_part,
    build_cantor_scale,
    build_devils_staircase_scale,
    build_orey_scale,
    identity_scale,
    invert,
    lebesgue_decompose,
    skew_transform,
    subspace_scale,
)

__version__ = "0.1.0"
