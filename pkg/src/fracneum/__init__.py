"""Desk-scale toolkit for the 1-D fractional p-Laplacian with nonlocal
flux-free (Neumann-type) exterior conditions.

Pipeline: build an interval mesh with an exterior collar, assemble exact
singular-kernel pair weights, evaluate the discrete energy functionals and
their gradients, extend data to the exterior by the flux-free condition,
solve the p = 2 eigenproblem by exterior condensation, and locate critical
points (coercive minimisers and constant-sign mountain-pass solutions) with
randomized verification of the supporting inequalities.
"""

from .critical import (
    CriticalPointReport,
    DescentOptions,
    MountainPassOptions,
    classify,
    linear_minimizer_p2,
    minimize,
    mountain_pass,
    ray_coercivity,
)
from .energy import (
    FULL,
    MINUS,
    PLUS,
    GridFunction,
    ProblemConfig,
    evaluate,
    functional_value,
    gagliardo_p,
    jp,
    sobolev_norm,
    weak_residual,
)
from .errors import (
    BindingError,
    ConfigurationError,
    ConnectivityError,
    DivergenceError,
    DomainError,
    FracneumError,
    GeometryError,
    ParameterError,
    UnsupportedModeError,
)
from .mesh import (
    DomainMesh,
    KernelWeights,
    assemble_weights,
    build_mesh,
    pair_weight,
    tail_weight,
)
from .neumann import exterior_extend, neumann_residual
from .nonlinearity import Nonlinearity, make_nonlinearity
from .spectrum import EigenPair, cone_test, condensed_operator, eig_p2, rayleigh

__version__ = "0.1.0"
