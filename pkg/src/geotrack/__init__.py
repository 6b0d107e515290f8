"""Intrinsic trajectory tracking on spheres, Lie groups, and their products.

The library provides a matrix Lie group kernel, sphere homogeneous-space
operations, navigation functions, horizontal lifting of reference curves
through SO(n+1) -> S^n, almost-globally convergent tracking controllers,
and closed-loop Monte-Carlo simulation with convergence metrics.
"""

from .algebra import (
    SE3,
    SO,
    Ad,
    AlgebraCovector,
    AlgebraMetric,
    AlgebraVector,
    GroupElement,
    Product,
    Translation,
    ad,
    ad_star,
    compose,
    direct_product,
    exp,
    identity,
    identity_metric,
    inverse,
    log,
    metric_flat,
    metric_sharp,
)
from .control import (
    ErrorState,
    ForcedSystem,
    GroupControllerConfig,
    SphereControllerConfig,
    feedback_transform,
    group_control,
    group_error,
    sphere_control,
    sphere_error,
)
from .errors import (
    ChartError,
    ChartSwitchNeeded,
    ConfigurationError,
    CutLocusError,
    GeotrackError,
    InvariantViolationError,
    LiftError,
    TagMismatchError,
    UnsupportedFeatureError,
)
from .lift import (
    LiftedReference,
    Trivialization,
    connection_form,
    default_atlas,
    fiber_ivp_step,
    horizontal_lift,
    initial_lift,
    lift_on_group,
)
from .navigation import (
    GroupNavigation,
    SphereNavigation,
    group_nav_value,
    product_navigation,
    rotation_navigation,
    se3_navigation,
    sphere_nav_differential,
    sphere_nav_value,
    translation_navigation,
    zeta_P,
)
from .references import build_reference
from .sim import (
    GroupPlant,
    RolloutRecord,
    RolloutSummary,
    ScenarioResult,
    SpherePlant,
    convergence_metrics,
    robot_scenario,
    satellite_scenario,
    step_group,
    step_sphere,
)
from .sphere import (
    ReductiveSplit,
    SphereCovector,
    SpherePoint,
    SphereTangent,
    act,
    act_covector,
    act_tangent,
    geodesic_distance,
    project_tangent,
    reductive_split,
    sphere_flat,
    sphere_sharp,
)

__version__ = "0.1.0"
