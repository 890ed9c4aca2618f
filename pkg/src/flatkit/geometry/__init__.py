"""Vector fields, adapted charts, projectability and straightening."""

from .chart import (AdaptedChart, build_adapted_chart, express_in_chart,
                    input_fields, plus, try_chart)
from .fields import Distribution, VectorField, is_involutive, lie_bracket
from .frelated import check_f_related, f_related_residuals
from .projectable import (NotProjectable, NullSpaceCertificate,
                          ProjectabilityResult, ProjectabilityUndecided, analyze,
                          find_projectable_subdistribution, pushforward)
from .straighten import (StraighteningFailed, Transformation,
                         check_transformation, straighten)

__all__ = [
    "AdaptedChart", "Distribution", "NotProjectable", "NullSpaceCertificate",
    "ProjectabilityResult", "ProjectabilityUndecided", "StraighteningFailed",
    "Transformation", "VectorField", "analyze", "build_adapted_chart",
    "check_f_related", "check_transformation", "express_in_chart",
    "f_related_residuals", "find_projectable_subdistribution", "input_fields",
    "is_involutive", "lie_bracket", "plus", "pushforward", "straighten",
    "try_chart",
]
