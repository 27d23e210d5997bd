"""tipwave: output-feedback stabilization of a 1-d wave equation with tip mass.

Simulates the plant, its Luenberger observer loop, and the
extended-state-observer loop under internal uncertainty and external
disturbance; computes the three characteristic-equation spectra that
govern exponential decay; and cross-validates time-domain decay rates
against spectral abscissae.

The leapfrog stepping kernel has a compiled (Cython) and a NumPy
implementation selected at import; set TIPWAVE_BACKEND=python|cython to
force one. Both produce bit-identical trajectories.
"""

from ._backend import available_backends, default_backend_name, get_kernel
from .wave_core import BoundaryTraces, FieldHistory, Grid, SystemParams
from .energy import EnergyTrace, energy, fit_decay_rate
from .signals import DisturbanceSpec, eval_d, eval_f
from .spectral import (
    CharFamily,
    Eigenvalue,
    Spectrum,
    combined_abscissa,
    compute_spectrum,
    count_zeros_in_box,
    refine_root,
    spectral_abscissa,
)
from .systems import BlowUpError, EsoLoop, ObserverLoop, SingleFieldLoop
from .scenarios import ScenarioConfig, parse_config, run_scenario, serialize_config

__version__ = "0.1.0"

__all__ = [
    "available_backends",
    "default_backend_name",
    "get_kernel",
    "BoundaryTraces",
    "FieldHistory",
    "Grid",
    "SystemParams",
    "EnergyTrace",
    "energy",
    "fit_decay_rate",
    "DisturbanceSpec",
    "eval_d",
    "eval_f",
    "CharFamily",
    "Eigenvalue",
    "Spectrum",
    "combined_abscissa",
    "compute_spectrum",
    "count_zeros_in_box",
    "refine_root",
    "spectral_abscissa",
    "BlowUpError",
    "EsoLoop",
    "ObserverLoop",
    "SingleFieldLoop",
    "ScenarioConfig",
    "parse_config",
    "run_scenario",
    "serialize_config",
    "__version__",
]
