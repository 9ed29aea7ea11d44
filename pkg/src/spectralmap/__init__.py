"""Forward and inverse spectral maps for higher-order differential operators
with distribution coefficients on [0, 1]."""

from .assoc import AssociatedMatrix, associated_matrix, check_class, star_matrix, zero_matrix
from .coefficients import (
    Antiderivative,
    AsymptoticParameters,
    CoefficientSet,
    SigmaSet,
    build_model_problem,
    load_coefficients,
    make_sigma,
    save_coefficients,
    sigma_to_tau,
    tau_to_p,
)
from .errors import SpectralMapError
from .forward import (
    SpectralData,
    chi_constants,
    find_eigenvalues,
    fit_asymptotics,
    forward_spectral_data,
    validate_spectral_data,
    weight_matrix,
    weight_numbers,
    weyl_matrix,
    xi_weights,
)
from .functions import Function1D
from .grid import ChebGrid
from .maineq import ModelCache, assemble, inverse_solve, reconstruct_weyl, recover_coefficients, solve
from .ode import CollocationBVP, fundamental_matrix, lagrange_bracket, quasi_derivatives

__version__ = "0.1.0"
