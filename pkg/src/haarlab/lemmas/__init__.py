"""Numerical verifiers for the lemmas behind the invertibility theorems."""

from .lowdim import (
    SPHERE_C1,
    TORUS_C1,
    det_trig_coefficients,
    low_dim_theorem_check,
    remez_convex_check,
    remez_convex_instance,
    remez_sphere_check,
    remez_torus_check,
    trig_identity_error,
    vanishing_determinant_scan,
    vanishing_determinant_suite,
)
from .minors import (
    gaussian_map_norm,
    poorly_invertible_suite,
    random_gaussian_map,
    sample_s_j,
    verify_breaking_orthogonality,
    verify_gaussian_perturbation,
    verify_poorly_invertible_minor,
    verify_well_invertible_minor,
    well_invertible_suite,
)
from .report import BlockMatrix2, HypothesisError, LemmaReport, merge_reports
from .unitary import (
    identity_perturbation_instance,
    null_covector,
    quadratic_form_sides,
    quadratic_form_suite,
    verify_identity_perturbation,
    verify_quadratic_form,
)
