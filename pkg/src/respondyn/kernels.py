"""Hot numeric kernels: long-orbit Birkhoff statistics for interval maps.

Each kernel exists twice: a numba ``@njit`` version and a pure-numpy
fallback that performs the identical per-seed operation sequence.  The
active backend is chosen at import time from the ``RESPONDYN_NUMBA``
environment variable:

    RESPONDYN_NUMBA=0      force the numpy fallback
    RESPONDYN_NUMBA=1      require numba (ImportError if unavailable)
    unset / auto           use numba when importable, else fall back

Per-seed results are written to independent output slots, so numba's
``parallel=True`` scheduling cannot change any output bit regardless of
thread count.
"""

from __future__ import annotations

import math
import os

import numpy as np

_LN2 = math.log(2.0)
_RENORM = 16  # fold the running |f'| product into log2 every 16 steps

# Floating-point quadratic orbits can land exactly on 0 (a point close
# enough to the critical point maps to exactly 1), which is absorbing in
# float arithmetic though not for the true dynamics; such hits are deflected
# deterministically.
_DEFLECT = 1e-13

_env = os.environ.get("RESPONDYN_NUMBA", "auto").strip().lower()
if _env in ("0", "off", "false", "no"):
    NUMBA_ENABLED = False
elif _env in ("1", "on", "true", "yes"):
    import numba  # noqa: F401  (hard requirement requested via env)

    NUMBA_ENABLED = True
else:
    try:
        import numba  # noqa: F401

        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False

BACKEND = "numba" if NUMBA_ENABLED else "numpy"


# ---------------------------------------------------------------------------
# pure-numpy implementations (always importable, used as fallback and as the
# benchmark baseline)
# ---------------------------------------------------------------------------

def _py_birkhoff_logistic(t, x0s, burn, n, coeffs):
    x = np.asarray(x0s, dtype=np.float64).copy()
    m = coeffs.shape[0]
    for _ in range(burn):
        x = t * x * (1.0 - x)
        x[x == 0.0] = _DEFLECT
    phi_acc = np.zeros_like(x)
    lyap_acc = np.zeros_like(x)
    p = np.ones_like(x)
    with np.errstate(divide="ignore"):
        for i in range(n):
            acc = np.full_like(x, coeffs[m - 1])
            for k in range(m - 2, -1, -1):
                acc = acc * x + coeffs[k]
            phi_acc += acc
            p *= np.abs(t - 2.0 * t * x)
            if i & (_RENORM - 1) == _RENORM - 1:
                lyap_acc += np.log2(p)
                p[:] = 1.0
            x = t * x * (1.0 - x)
            x[x == 0.0] = _DEFLECT
        if n & (_RENORM - 1) != 0:
            lyap_acc += np.log2(p)
    return phi_acc / n, lyap_acc * (_LN2 / n)


def _py_birkhoff_tent(u, v, x0s, burn, n, coeffs):
    x = np.asarray(x0s, dtype=np.float64).copy()
    m = coeffs.shape[0]
    for _ in range(burn):
        x = u - v * np.abs(x)
    phi_acc = np.zeros_like(x)
    lyap_acc = np.zeros_like(x)
    p = np.ones_like(x)
    for i in range(n):
        acc = np.full_like(x, coeffs[m - 1])
        for k in range(m - 2, -1, -1):
            acc = acc * x + coeffs[k]
        phi_acc += acc
        p *= v
        if i & (_RENORM - 1) == _RENORM - 1:
            lyap_acc += np.log2(p)
            p[:] = 1.0
        x = u - v * np.abs(x)
    if n & (_RENORM - 1) != 0:
        lyap_acc += np.log2(p)
    return phi_acc / n, lyap_acc * (_LN2 / n)


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if NUMBA_ENABLED:
    from numba import njit, prange

    @njit(cache=True, parallel=True)
    def _nb_birkhoff_logistic(t, x0s, burn, n, coeffs):
        nseeds = x0s.shape[0]
        m = coeffs.shape[0]
        phi_means = np.empty(nseeds)
        lyap_means = np.empty(nseeds)
        for s in prange(nseeds):
            x = x0s[s]
            for _ in range(burn):
                x = t * x * (1.0 - x)
                if x == 0.0:
                    x = _DEFLECT
            phi_acc = 0.0
            lyap_acc = 0.0
            p = 1.0
            for i in range(n):
                acc = coeffs[m - 1]
                for k in range(m - 2, -1, -1):
                    acc = acc * x + coeffs[k]
                phi_acc += acc
                g = t - 2.0 * t * x
                if g < 0.0:
                    g = -g
                p *= g
                if i & (_RENORM - 1) == _RENORM - 1:
                    lyap_acc += math.log2(p)
                    p = 1.0
                x = t * x * (1.0 - x)
                if x == 0.0:
                    x = _DEFLECT
            if n & (_RENORM - 1) != 0:
                lyap_acc += math.log2(p)
            phi_means[s] = phi_acc / n
            lyap_means[s] = lyap_acc * (_LN2 / n)
        return phi_means, lyap_means

    @njit(cache=True, parallel=True)
    def _nb_birkhoff_tent(u, v, x0s, burn, n, coeffs):
        nseeds = x0s.shape[0]
        m = coeffs.shape[0]
        phi_means = np.empty(nseeds)
        lyap_means = np.empty(nseeds)
        for s in prange(nseeds):
            x = x0s[s]
            for _ in range(burn):
                ax = x if x >= 0.0 else -x
                x = u - v * ax
            phi_acc = 0.0
            lyap_acc = 0.0
            p = 1.0
            for i in range(n):
                acc = coeffs[m - 1]
                for k in range(m - 2, -1, -1):
                    acc = acc * x + coeffs[k]
                phi_acc += acc
                p *= v
                if i & (_RENORM - 1) == _RENORM - 1:
                    lyap_acc += math.log2(p)
                    p = 1.0
                ax = x if x >= 0.0 else -x
                x = u - v * ax
            if n & (_RENORM - 1) != 0:
                lyap_acc += math.log2(p)
            phi_means[s] = phi_acc / n
            lyap_means[s] = lyap_acc * (_LN2 / n)
        return phi_means, lyap_means

    birkhoff_logistic = _nb_birkhoff_logistic
    birkhoff_tent = _nb_birkhoff_tent
else:
    birkhoff_logistic = _py_birkhoff_logistic
    birkhoff_tent = _py_birkhoff_tent


def set_threads(count: int | None):
    """Cap the numba thread pool; no-op on the numpy backend or count<=0."""
    if NUMBA_ENABLED and count is not None and count > 0:
        import numba

        numba.set_num_threads(min(count, numba.config.NUMBA_NUM_THREADS))
