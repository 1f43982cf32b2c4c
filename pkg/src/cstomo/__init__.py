"""2-D electromagnetic inverse scattering workbench.

Forward synthesis with a frequency-domain finite-difference solver and
reconstruction by multi-frequency contrast source inversion, in a
cross-correlated flavor and a plain baseline.

The usual flow: describe the acquisition with a MeasurementConfig, produce
data with synthesize (plus add_noise), then prepare_inversion and run.  The
analysis helpers turn runs into error curves, contrast maps and solution-space
cost landscapes; everything is also reachable through the ``cstomo`` command.
"""

from .csi_core import (
    Variant,
    build_model,
    prepare_inversion,
    reconstruction_error,
    run,
    verify_state,
)
from .errors import (
    ConfigurationError,
    DegenerateDataError,
    DegenerateStateError,
    NumericalError,
)
from .geometry import (
    Cartesian2DGrid,
    ContrastMap,
    SubdomainIndexSet,
    chi_at_frequency,
    make_austria_phantom,
    subdomain_indices,
)
from .scenario import (
    MeasurementConfig,
    MeasurementSet,
    add_noise,
    default_config,
    load_measurements_csv,
    save_measurements_csv,
    synthesize,
)

__version__ = "0.1.0"

__all__ = [
    "Variant",
    "build_model",
    "prepare_inversion",
    "reconstruction_error",
    "run",
    "verify_state",
    "ConfigurationError",
    "DegenerateDataError",
    "DegenerateStateError",
    "NumericalError",
    "Cartesian2DGrid",
    "ContrastMap",
    "SubdomainIndexSet",
    "chi_at_frequency",
    "make_austria_phantom",
    "subdomain_indices",
    "MeasurementConfig",
    "MeasurementSet",
    "add_noise",
    "default_config",
    "load_measurements_csv",
    "save_measurements_csv",
    "synthesize",
    "__version__",
]
