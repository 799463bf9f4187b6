"""Fine Berezin-Toeplitz quantization on the sphere and semiclassical rate experiments."""

from .dynamics import HamiltonianPath, named_path, propagate
from .experiments import RateReport, fit_rate, run_suite
from .lattice import CohomologyData, check_condition_c
from .quantization import QuantizationLevel, op_fine, quantize, toeplitz
from .sphere import QuadratureGrid, SphereFunction, named_function

__version__ = "0.1.0"

__all__ = [
    "CohomologyData",
    "HamiltonianPath",
    "QuadratureGrid",
    "QuantizationLevel",
    "RateReport",
    "SphereFunction",
    "check_condition_c",
    "fit_rate",
    "named_function",
    "named_path",
    "op_fine",
    "propagate",
    "quantize",
    "run_suite",
    "toeplitz",
]
