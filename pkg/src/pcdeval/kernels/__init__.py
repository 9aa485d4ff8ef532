"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The active backend is numba when it is importable and
``PCDEVAL_DISABLE_NUMBA`` is not set; both backends stay importable as
``numpy_backend`` and (when available) ``numba_backend`` for comparison.
"""

import numpy as np

from .. import _compat
from . import _numpy as numpy_backend

if _compat._NUMBA_IMPORTABLE:
    from . import _numba as numba_backend
else:
    numba_backend = None

BACKEND = "numba" if _compat._HAS_NUMBA else "numpy"
_active = numba_backend if _compat._HAS_NUMBA else numpy_backend


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def basis_matrix(x, knots, degree, num_basis):
    return _active.basis_matrix(_f64(x), _f64(knots), int(degree), int(num_basis))


def split_profile(residuals, min_segment):
    return _active.split_profile(_f64(residuals), int(min_segment))


def exceedance(mu, sigma, y_t):
    return _active.exceedance(_f64(mu), _f64(sigma), float(y_t))


def pcd_surface(x, mu, sigma, y_values, p_values):
    return _active.pcd_surface(_f64(x), _f64(mu), _f64(sigma), _f64(y_values), _f64(p_values))
