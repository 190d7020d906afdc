"""staticlab - numerical verification of static spaces and CPE metrics.

staticlab evaluates curvature tensors of metrics given in coordinates and checks
the identities that static spaces, critical point equation metrics and their
level sets satisfy. It provides:

- Exact or finite-difference metric derivatives feeding one tensor pipeline
- Riemann, Ricci, Schouten, Weyl, Cotton, Bach and the D-tensor at a point
- Residuals of the static, vacuum static, CPE and unified equations
- Level-set geometry and the weighted Bach integral identities by quadrature
- The warp ODE of vacuum static warped products and a certified catalog

Key Components:
    LabConfig: Process settings from STATICLAB_* environment variables
    StaticModel: A metric with its potential f and equation kind
    SuiteRunner: Runs verification suites concurrently and writes reports

Example:
    >>> from staticlab import load_model, unified_residual
    >>> model = load_model("s3")
    >>> unified_residual(model, model.sample_points(1)[0]).max_abs() < 1e-8
    True

Architecture:
    YAML model → fastjsonschema → StaticModel → Suite strategies → JSON/CSV reports

"""

from __future__ import annotations

from .config import LabConfig, Tolerances
from .errors import StaticLabError
from .models import build_model, load_model
from .statics import ModelKind, StaticModel, unified_residual
from .suites import RunConfig, SuiteRunner, run_suites

__version__ = "0.1.0"
__all__ = [
    "LabConfig",
    "Tolerances",
    "StaticLabError",
    "ModelKind",
    "StaticModel",
    "build_model",
    "load_model",
    "unified_residual",
    "RunConfig",
    "SuiteRunner",
    "run_suites",
]
