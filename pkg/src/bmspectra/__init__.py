"""Numerical checks linking Brascamp-Lieb constants of homogeneous log-concave
measures to local p-Brunn-Minkowski inequalities of their level-set bodies."""

__version__ = "0.1.0"

from .body import (  # noqa: E402
    BodySpec,
    ConvexBody,
    HomogeneousPotential,
    make_body,
    sphere_maps,
    support_from_gauge,
    verify_phih,
)
from .sphere import Field, SphereGrid, build_grid, even_project, parity_decompose, spherical_derivatives  # noqa: E402
from .measure import (  # noqa: E402
    RadialLaw,
    change_of_variables_residual,
    cone_measure,
    cordero_rotem_margin,
    gauge_measure,
    moment_ratio,
    pushforward_residual,
    radial_moment,
)
from .spectral import (  # noqa: E402
    FormPair,
    SpectralResult,
    assemble_gauge_forms,
    assemble_hilbert_forms,
    best_constant,
    best_even_constant,
    hilbert_apply,
    quadrant_gap,
)
from .euclidean import assemble_euclidean_forms, build_box_grid, power_potential  # noqa: E402
from .bochner import bochner_residual  # noqa: E402
from .criteria import (  # noqa: E402
    p_from_Calpha,
    params_from_p,
    pinch_alphabeta,
    pinch_lambda,
    product_constant,
    qij_report,
    transfer_backward,
    transfer_forward,
)
from .santalo import BSInput, ConvexFunction, bs_ratio, bs_set_ratio  # noqa: E402

__all__ = [
    "BodySpec",
    "ConvexBody",
    "HomogeneousPotential",
    "make_body",
    "sphere_maps",
    "support_from_gauge",
    "verify_phih",
    "Field",
    "SphereGrid",
    "build_grid",
    "even_project",
    "parity_decompose",
    "spherical_derivatives",
    "RadialLaw",
    "change_of_variables_residual",
    "cone_measure",
    "cordero_rotem_margin",
    "gauge_measure",
    "moment_ratio",
    "pushforward_residual",
    "radial_moment",
    "FormPair",
    "SpectralResult",
    "assemble_gauge_forms",
    "assemble_hilbert_forms",
    "best_constant",
    "best_even_constant",
    "hilbert_apply",
    "quadrant_gap",
    "assemble_euclidean_forms",
    "build_box_grid",
    "power_potential",
    "bochner_residual",
    "p_from_Calpha",
    "params_from_p",
    "pinch_alphabeta",
    "pinch_lambda",
    "product_constant",
    "qij_report",
    "transfer_backward",
    "transfer_forward",
    "BSInput",
    "ConvexFunction",
    "bs_ratio",
    "bs_set_ratio",
]
