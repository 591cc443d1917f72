"""flowlab: numerical laboratory for Ricci-DeTurck perturbations of Ricci flow on flat tori."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BallEscapeError,
    BlowUpError,
    CFLError,
    ConfigurationError,
    ConvergenceError,
    DegeneratePairError,
    EmptyCylinderError,
    FlowlabError,
    JacobianDegeneracyError,
    NonFiniteError,
    PositiveDefinitenessError,
    ProbeHorizonError,
    SingularMetricError,
)
from .grid import Grid, build_grid  # noqa: E402
from .geometry import Metric, christoffel, covariant_derivative, curvature, geodesic_ball  # noqa: E402
from .deturck import (  # noqa: E402
    ForcingDecomposition,
    christoffel_delta_bundle,
    deturck_vector_field,
    linearized_apply,
    quadratic_terms,
    ricci_deturck_operator,
    verify_decomposition,
)
from .parabolic import (  # noqa: E402
    FlowTrajectory,
    RicciFlowBackground,
    StaticBackground,
    duhamel_solve,
    evolve_homogeneous,
    integrate_deturck_direct,
    integrate_ricci_flow,
    kernel_probe,
)
from .norms import NormReport, local_x_norm, x_norm, y_norm  # noqa: E402
from .fixed_point import PicardProblem, contraction_ratio, phi_apply, picard_solve  # noqa: E402
from .pullback import recover_ricci_flow  # noqa: E402
from .config import SCENARIOS, ExperimentConfig, load_config  # noqa: E402
from .families import build_metric, perturbation_direction  # noqa: E402
