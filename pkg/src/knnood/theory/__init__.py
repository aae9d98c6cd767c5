"""Monte-Carlo lab for the finite-sample guarantees of the k-NN radius score."""

from .bounds import (
    confidence_factor,
    contraction_k_upper_bound,
    epsilon_kn,
    k_lower_bound,
    precision_error_bound,
    theorem1_thresholds,
)
from .densities import (
    SyntheticDensity,
    ball_intersection_volume,
    cap_volume,
    disk_rectangle_area,
    make_rng,
    sample_density,
)
from .geometry import Ball, Box, contraction_map, project_convex
from .trials import (
    ContractionConfig,
    TheoremOneConfig,
    TrialReport,
    ball_mass_check,
    run_contraction_trial,
    run_ranking_trial,
    run_theorem1_trial,
    violation_rate,
)
