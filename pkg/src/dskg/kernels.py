"""Backend selection for the mode-integration kernel.

The compiled ``_core`` extension is used when it imports; otherwise the
NumPy implementation in ``_dopri`` takes over.  Setting
``DSKG_BACKEND=python`` forces the fallback.  ``DSKG_THREADS`` caps the
number of worker threads used to split a batch of modes (the compiled
kernel releases the GIL).
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _dopri

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

_BACKENDS = {"python": _dopri.propagate_steps}
if _core is not None:
    _BACKENDS["compiled"] = _core.propagate_steps


def _default_backend():
    want = os.environ.get("DSKG_BACKEND", "").strip().lower()
    if want and want not in ("python", "compiled"):
        raise ValueError(f"DSKG_BACKEND must be 'python' or 'compiled', got {want!r}")
    if want == "python" or _core is None:
        return "python"
    return "compiled"


BACKEND = _default_backend()


def available_backends():
    return sorted(_BACKENDS)


def thread_count():
    try:
        return max(1, int(os.environ.get("DSKG_THREADS", "1")))
    except ValueError:
        return 1


def propagate_steps(mu2, times, n, a, c0, c1, k0, k1, rtol, atol=None, backend=None):
    """Step matrices for each mode between consecutive ``times``.

    See ``dskg._dopri.propagate_steps``.  ``atol`` defaults to ``rtol``.
    """
    fn = _BACKENDS[backend or BACKEND]
    atol = rtol if atol is None else atol
    mu2 = np.ascontiguousarray(mu2, dtype=float)
    args = (float(n), float(a), float(c0), float(c1), float(k0), float(k1), float(rtol), float(atol))
    workers = thread_count()
    if workers == 1 or mu2.size < 2 * workers:
        return fn(mu2, times, *args)
    # contiguous chunks; the reduction order is fixed so results do not
    # depend on the worker count
    chunks = np.array_split(mu2, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda c: fn(c, times, *args), chunks))
    return np.concatenate(parts, axis=0)
