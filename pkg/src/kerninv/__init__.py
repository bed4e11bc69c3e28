"""Inverse inequalities for Matérn kernel trial spaces, measured numerically."""

__version__ = "0.1.0"

from .geometry import (  # noqa: E402
    Annulus,
    Box,
    Circle,
    Disk,
    Interval,
    PointSet,
    closest_point,
    domain_constants,
    farthest_point_sample,
    fill_distance,
    mesh_ratio,
    separation_radius,
    tubular_domain,
    uniform_refinement,
)
from .kernels import (  # noqa: E402
    MaternKernel,
    TrialSpace,
    evaluate_trial,
    gram_matrix,
    interpolate,
    kernel_derivative,
    kernel_eval,
    restrict,
)
from .quadrature import build_rule, build_rule_pair, discrete_norm, lq_norm  # noqa: E402
from .sobolev import (  # noqa: E402
    circle_sobolev_gram,
    circle_spectral_norm,
    gagliardo_seminorm_gram,
    h_norm_gram,
    integer_seminorm_gram,
)
from .estimators import (  # noqa: E402
    bernstein_constant,
    fit_exponent,
    gn_interpolation_check,
    native_inverse_constant,
    nikolskii_constant,
    ratio_constant,
    sampling_residual,
    stability_constant,
)
from .manifold import (  # noqa: E402
    equivalence_ratio_extension,
    extend_constant_normal,
    manifold_bernstein_constant,
    manifold_nikolskii_constant,
    poincare_check,
    trial_equivalence_ratio,
)
