"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

The active backend is chosen once at import from the SIRSVAX_BACKEND
environment variable (see `_flags`). Path integration always runs through the
scalar `core` functions (jitted when numba is active); the node sweep runs
jitted-parallel under numba and vectorized under the numpy fallback.
"""

from ._flags import BACKEND, USE_NUMBA
from . import core
from . import numpy_sweep

path_constant_control = core.path_constant_control
path_feedback = core.path_feedback

if USE_NUMBA:
    bellman_sweep_quadratic = core.bellman_sweep_quadratic
    policy_value_sweep_quadratic = core.policy_value_sweep_quadratic
else:
    bellman_sweep_quadratic = numpy_sweep.bellman_sweep_quadratic
    policy_value_sweep_quadratic = numpy_sweep.policy_value_sweep_quadratic


def backend_name() -> str:
    """Name of the active kernel backend ('numba' or 'numpy')."""
    return BACKEND


__all__ = [
    "BACKEND",
    "USE_NUMBA",
    "backend_name",
    "bellman_sweep_quadratic",
    "policy_value_sweep_quadratic",
    "path_constant_control",
    "path_feedback",
    "core",
    "numpy_sweep",
]
