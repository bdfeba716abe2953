"""OPED reconstruction on the unit disk, with limited-angle coefficient completion."""

from oped.errors import ConvergenceError, FormatError, PreconditionError
from oped.limited_angle import (
    CompletionMatrix,
    CompletionSystem,
    assemble_system,
    build_matrix,
    complete_coefficients,
    solve_system,
)
from oped.phantom import (
    Ellipse,
    EllipsePhantom,
    PolynomialImage,
    Sinogram,
    SinogramGeometry,
    add_noise,
    ellipse_radon,
    phantom_radon,
    sample_sinogram,
    shepp_logan,
    unit_disk,
)
from oped.spectral import (
    SlepianMatrix,
    SpectralReport,
    condition_number,
    condition_table,
    slepian_matrix,
    symmetric_eigenvalues,
)
from oped.transform import (
    FilterSpec,
    ReconImage,
    SineCoefficientSet,
    bump_h,
    chebyshev_u,
    eta_eval,
    half_circle_symmetry_check,
    oped_evaluate,
    parity_equivalence,
    sine_coefficients,
)

__version__ = "0.1.0"
