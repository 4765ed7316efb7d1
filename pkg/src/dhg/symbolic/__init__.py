from .arithmetize import Arithmetization, ArithmetizeError, arithmetize, nnf  # noqa: F401
from .derive import (  # noqa: F401
    DeriveError, derive_formula, derive_term, lie_substitute,
    lie_substitute_term, time_derivative,
)
from .poly import (  # noqa: F401
    Poly, PolyError, monomial_factor, poly_equal, poly_normalize, poly_of_term,
    rational_roots,
)
from .shapes import (  # noqa: F401
    BallShape, ConjShape, DisjShape, IntervalShape, Shape, VarietyShape,
    recognize_shape, shape_hull, shape_vars,
)
from .simplify import simplify, term_key  # noqa: F401
from .substitute import SubstitutionError, rename_var, substitute, substitute_term  # noqa: F401
from .transforms import (  # noqa: F401
    DomainEncoding, WellDefinednessReport, domain_encode, freeze_transform,
    well_definedness,
)
