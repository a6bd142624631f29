"""Linear HDR reconstruction from single Bayer raw frames under LED light.

Under quasimonochromatic illumination a Bayer mosaic behaves as a grid of
neutral-density filters, so one exposure samples the scene at three
effective sensitivities. The toolkit merges those tiers into an
extended-range image, calibrates the merged system's radiometric
response from a flat-field exposure series, linearizes merged images
with the fitted correction, and evaluates the result against synthetic
ground truth from the bundled sensor simulator.
"""

from .calib import (AlphaPolynomial, CorrectionProfile, ExposureSeries,
                    LinearModel, PolyModel, RadiometricFunction,
                    TierPolynomial, calibrate, calibrate_from_radiometric,
                    compute_correction,
                    fit_alpha_of_value, fit_linear, fit_poly,
                    measure_radiometric, measured_correction,
                    split_linear_region)
from .cfa import (LED_ROLES, RGGB, CfaLayout, PixelRoles, QuadPlanes, RawFrame,
                  decompose, interleave, roles_for_wavelength)
from .linearize import LinearHdrImage, dynamic_range_db, linearize
from .metrics import (EvaluationRecord, HalftoneReport, evaluate_run,
                      halftone_stability, main_pixel_reference, nrms)
from .simcam import (Scene, SensorModel, expose, flatfield_times,
                     make_flatfield, make_test_chart)
from .sve import (Provenance, SveImage, UsageFractions, construct,
                  from_values, usage_fractions)

__version__ = "0.1.0"

__all__ = [
    "AlphaPolynomial", "CfaLayout", "CorrectionProfile", "EvaluationRecord",
    "ExposureSeries", "HalftoneReport", "LED_ROLES", "LinearHdrImage",
    "LinearModel", "PixelRoles", "PolyModel", "Provenance", "QuadPlanes",
    "RadiometricFunction", "RawFrame", "RGGB", "Scene", "SensorModel",
    "SveImage", "TierPolynomial", "UsageFractions", "calibrate",
    "calibrate_from_radiometric", "compute_correction", "construct", "decompose", "dynamic_range_db",
    "evaluate_run", "expose", "fit_alpha_of_value", "fit_linear", "fit_poly",
    "flatfield_times", "from_values", "halftone_stability", "interleave",
    "linearize", "main_pixel_reference", "make_flatfield", "make_test_chart",
    "measure_radiometric", "measured_correction", "nrms",
    "roles_for_wavelength", "split_linear_region", "usage_fractions",
]
