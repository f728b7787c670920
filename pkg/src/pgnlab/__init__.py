"""Parametric geometry of numbers on a desk: templates, contraction rates,
the two template constructions and the lattice side of the correspondence."""

from .dimensions import SystemShape, DimensionReport, dimension_report
from .piecewise import PiecewiseLinear, lower_envelope
from .templates import (
    Template,
    TemplateError,
    InadmissiblePair,
    InvalidTemplate,
    NonIntegerClassSlope,
    trivial_template,
    z_set,
    validate_template,
    class_decomposition,
    contraction_rate,
    average_contraction,
    lower_average_estimate,
    check_admissible,
    standard_template,
    standard_template_seq,
    min_envelope,
)
from .latflow import (
    BudgetExceeded,
    LatticeBasis,
    MatrixTuple,
    MinimaTrajectory,
    QWitness,
    flow_matrix,
    embed_theta,
    flow_lattice,
    successive_minima,
    h_trajectory,
    scan_Q,
    occupation_joint,
    cusp_occupation,
)
from .constructions import (
    Schedule,
    TemplateTuple,
    VerificationReport,
    NoValidK0,
    BandTooWide,
    SupViolated,
    StepFunction,
    BoundedFunction,
    build_schedule,
    construction_I,
    construction_II,
    verify_construction_I,
    verify_construction_II,
    lemma_key_solve,
)

__version__ = "0.1.0"
