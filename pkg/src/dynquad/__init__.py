"""Verification workbench for dynamical quadratic exchange algebras."""

from .tensor import (
    TensorOperator,
    casimir,
    elementary,
    embed,
    invert,
    partial_transpose,
    permute_legs,
    rel_residual,
    swap,
)
from .dynamical import DynamicalOperator, sample_lambda, weight_residual
from .algebra import (
    LaxRep,
    StructureSet,
    appendix_residual,
    big_R,
    bivector_residual,
    calibrate_lax,
    exchange_residual,
    flip_residuals,
    gyb_residual,
    quartet_residuals,
    rs_rational,
    rs_scalar_lax,
)
from .fusion import LRPair, canonical_lr, chain, fuse, lr_residuals
from .classical import (
    ClassicalRSet,
    classical_quartet_residuals,
    constraint_residuals,
    leading_order,
    rs_hyperbolic,
    rs_rational_classical,
    scaling_slope,
)

__version__ = "0.1.0"
