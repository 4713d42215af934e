"""Spectral flow of self-adjoint paths and loops, odd Chern numbers, and bifurcation certificates."""

from .bifurcation import (
    BifSetScan,
    BifurcationCertificate,
    Circle,
    FunctionalFamily,
    ParameterLoop,
    TorusGrid,
    bif_set_scan,
    certify,
    continue_branch,
    hessian_family,
    locate_bifurcation,
    sf_along_loop,
    verify_trivial_branch,
)
from .core import (
    Component,
    QuadraticForm,
    cayley,
    classify_component,
    complexify,
    eig_sym,
    form_to_operator,
    hermitize,
)
from .errors import InputError, SpecflowError
from .ktheory import (
    alpha_path,
    chern_number_selfadjoint_loop,
    chern_winding,
    index_bundle_data,
    transverse_subspace,
    winding_number,
)
from .paths import (
    ClutchedLoop,
    OperatorPath,
    ScalarField,
    cogredience_transform,
    planted_path,
    sample_path,
    twisted_fourier_loop,
    validate_clutch,
)
from .sflow import (
    Convention,
    Method,
    SpectralFlowResult,
    doubling_pair,
    spectral_flow_counting,
    spectral_flow_crossing,
    spectral_flow_loop,
)

__version__ = "0.1.0"
