"""Low-order spherical-harmonics HRTF encoding toolkit.

Encodes head-related transfer functions into order-N spherical-harmonics
representations (plain least squares, magnitude least squares with and
without a covariance-constraint global EQ) and refines them with a
joint-frequency quasi-Newton optimization that trades HRTF magnitude
accuracy against horizontal-plane interaural-level-difference accuracy
(iMagLS).  An analytic rigid-sphere head model serves as the built-in,
exactly reproducible reference; measured HRTFs enter through a portable
JSON format.
"""

from .sh import (
    Direction,
    GridParseError,
    OrthonormalityError,
    ShCoeffVec,
    SphericalGrid,
    WeightSumError,
    acn_index,
    analysis_operator,
    gauss_grid,
    isht,
    load_grid,
    save_grid,
    sh_basis,
    sh_matrix,
    sht,
    verify_quadrature,
)
from .hrtf import (
    FrequencyGrid,
    HrtfSet,
    Provenance,
    ShHrtf,
    SphereModelConfig,
    load_hrtf,
    load_shhrtf,
    rigid_sphere_hrtf,
    rigid_sphere_pressure,
    save_hrtf,
    save_shhrtf,
    truncate_reference,
)
from .encoders import (
    AmbisonicsSignal,
    MaglsConfig,
    covariance_correction,
    interaural_covariance,
    ls_encode,
    magls_encode,
    plane_wave_ambisonics,
    render_binaural,
)
from .psychoacoustics import (
    BandEnergyError,
    GammatoneBank,
    IldCurve,
    band_energies,
    default_azimuths,
    erb_bandwidth,
    erb_rate,
    erb_rate_inverse,
    gammatone_weight,
    horizontal_binaural,
    ild,
    ild_curve,
    ild_error,
    mag_error,
    mag_error_db,
    make_gammatone_bank,
)
from .optim import (
    ImaglsConfig,
    ImaglsProblem,
    NumericalError,
    OptimReport,
    ParamPacking,
    auto_lambda,
    optimize_imagls,
)
from .cli import PipelineConfig, run_all

__version__ = "0.1.0"
