"""Exact-symbolic plus numeric verification engine for almost complex
structures on C^n and their blow-ups at a point."""

from .acs import (
    ACSEntry,
    ACStructure,
    FrameVector,
    NijenhuisValue,
    check_involution,
    line_check,
    nijenhuis,
    nijenhuis_symbolic,
    obstruction_relations,
    weak_line_check,
)
from .blowup import (
    ChartMap,
    ChartStructure,
    Extendable,
    LiftedMap,
    NotExtendable,
    UnknownExtendability,
    divisor_smoothness_fixture,
    extension_test,
    lift_map,
    line_condition_form_check,
    transform,
)
from .expr import (
    ConjMonomial,
    Divisible,
    Expression,
    NotDivisible,
    SmoothScalar,
    smooth_div,
    substitute_chart,
    taylor_coeffs,
    wirtinger_d,
)
from .rational import GaussianRational, RadicalComplex

__version__ = "0.1.0"
