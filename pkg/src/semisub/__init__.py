"""semisub: frame calculus and biharmonicity classification for
semi-Riemannian submersions from Lorentzian 3-manifolds onto surfaces.

The package computes, from an adapted orthonormal frame (or directly from
its integrability data): the Levi-Civita connection, frame curvature, the
fundamental submersion tensors, tension and bitension fields, and runs the
space-form decision procedure (harmonic / no biharmonic possible /
inconsistent data), with independent numerical oracles for every closed
form.
"""

from .biharmonic import (
    BitensionVector,
    PreconditionViolation,
    TensionVector,
    bitension_closed_form,
    bitension_generic_oracle,
    frame_laplacian,
    reduced_residual,
    tension,
)
from .classify import (
    SpaceFormInput,
    Verdict,
    VerdictFlags,
    classify,
    harmonic_constraints_check,
    prepare_space_form_input,
    scan,
    space_form_residuals,
)
from .curvature import (
    ConnectionTable,
    CurvatureComponents,
    DegeneratePlane,
    ModeUnsupported,
    ONeillTensors,
    base_gauss_curvature,
    check_oneill_equation,
    connection_closed_form,
    connection_koszul_oracle,
    curvature_chart_oracle,
    curvature_components,
    named_curvature,
    oneill_tensors,
    sectional_curvature,
    space_form_residual,
)
from .expr import (
    Expr,
    ExprSyntaxError,
    UnknownSymbolError,
    eval_jet,
    eval_value,
    eval_values,
    parse,
)
from .geometry import (
    EPSILON,
    Chart,
    FrameModel,
    ModelError,
    VectorField,
    directional_derivative,
    directional_derivative_jet,
    frame_gram,
    lie_bracket,
    metric_at,
    orthonormalizing_metric,
)
from .jets import DomainError, FrameJet, ScalarJet2
from .models import (
    UnknownModel,
    builtin_model,
    constant_data_chart_model,
    load_model_file,
    model_from_dict,
    random_adapted_frame_model,
)
from .submersion import (
    ConstancyReport,
    IntegrabilityData,
    NotAdaptedFrame,
    RotationResult,
    check_vertical_constancy,
    extract_data,
    integrability_jets,
    jacobi_residual,
    rotate_and_reextract,
    rotate_frame,
    scalar_frame_jet,
)

__version__ = "0.1.0"
