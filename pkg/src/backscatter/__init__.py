"""Backscattered-light noise simulation and parameter estimation."""

__version__ = "0.1.0"

from .estimation import (  # noqa: E402
    BackgroundScaler,
    LinearityReport,
    ShelfFitResult,
    ShelfFitter,
    fit_shelf,
    infer_backscatter_power,
    linearity_check,
    scale_background,
)
from .model import (  # noqa: E402
    CarrierState,
    PhysicalConstants,
    ScatterPath,
    backscatter_qn_ratio,
    detected_power,
    phase_from_displacement,
    quantum_noise_rin,
    rin_backscatter,
)
from .opo import (  # noqa: E402
    OpoParams,
    ScatterBudget,
    cavity_scatter_gain,
    infer_bsdf,
    mitigation_whatif,
    r_opo_from_powers,
    scatter_budget,
    solid_angle,
)
from .projection import (  # noqa: E402
    MarginReport,
    RequirementConfig,
    isolation_deficit,
    project_backscatter,
    requirement_curve,
)
from .spectra import (  # noqa: E402
    MotionSpectrum,
    RinSpectrum,
    WelchEstimator,
    accel_to_displacement,
    estimate_motion_spectrum,
    estimate_rin_spectrum,
    shelf_model_asd,
)
from .synthesis import (  # noqa: E402
    DriveConfig,
    TimeSeries,
    synthesize_shelf_drive,
    synthesize_small_motion,
)
