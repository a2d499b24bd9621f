"""Finite-difference calculus on configuration spaces with a Poisson verification harness."""

from .configspace import (
    ConfigSample,
    Configuration,
    PoissonSampler,
    WeightedConfiguration,
    Window,
    sample_many,
    sample_poisson,
)
from .diffgeo import (
    FunctionOnConfigs,
    VectorField,
    d_minus,
    d_minus_directional,
    d_plus,
    d_plus_directional,
    directional_derivative,
    divergence,
    gradient,
    laplacian,
    linear_function,
    pairing_function,
)
from .errors import *  # noqa: F401,F403
from .factorial import (
    chu_vandermonde_check,
    falling_pair,
    falling_pair_ordered,
    falling_pair_weighted,
    generating_function,
    one_point_reduction_check,
)
from .fock import (
    FockVector,
    NewtonPolynomial,
    a_minus,
    a_plus,
    a_zero,
    b_operator,
    ccr_check,
    fock_inner,
    fock_norm,
    i_inverse,
    i_map,
    k_transform,
    product_formula_check,
    star_product,
)
from .generators import (
    JumpRate,
    PolynomialRate,
    jump_closed,
    jump_direct,
    l_minus_closed,
    l_minus_direct,
    l_plus_closed,
    l_plus_direct,
)
from .kernels import (
    QuadratureGrid,
    ScalarField,
    SymmetricKernel,
    TensorPower,
    cosine_bump,
    integrate,
    polynomial_bump,
    triangular_bump,
)
from .newton import L1Bound, NewtonSeries, l1_bound_check, newton_coefficients, nq_norm
from .verify import EstimatorReport, duality_check, laplace_check, mc_expectation, mecke_check, moment_check

__version__ = "0.1.0"
