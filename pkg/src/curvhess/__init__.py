"""curvhess: a verification engine for the second variation of the L^p
curvature functional at Kahler space forms.

The package mechanically re-derives and certifies the tensor identities
behind the stability of constant-holomorphic-sectional-curvature Kahler
metrics: an exact symbolic indexed-tensor calculus over the adapted frame,
cross-validated by a floating-point random-jet oracle and a Fourier
spectral harness on flat Kahler tori, culminating in the machine-derived
Hessian quadratic form and the stability constant k(c, p, m).
"""

from .divergence import expr_equal, reduce_mod_divergence
from .expr import TensorExpr
from .jets import ModelData, RandomJet, eval_expr
from .parser import parse_expr
from .rules import (ConstraintSet, apply_gauge, canonicalize,
                    commute_derivatives, normalize, substitute_curvature)
from .spaceform import (BasisIndex, SpaceFormModel, curvature_closed_form,
                        curvature_component, curvature_norm_sq,
                        einstein_constant, rcheck_tensor)
from .torus import FlatTorusModel, FourierTensorField

__version__ = "0.1.0"

__all__ = [
    "BasisIndex", "ConstraintSet", "FlatTorusModel", "FourierTensorField",
    "ModelData", "RandomJet", "SpaceFormModel", "TensorExpr", "apply_gauge",
    "canonicalize", "commute_derivatives", "curvature_closed_form",
    "curvature_component", "curvature_norm_sq", "einstein_constant",
    "eval_expr", "expr_equal", "normalize", "parse_expr", "rcheck_tensor",
    "reduce_mod_divergence", "substitute_curvature",
]
