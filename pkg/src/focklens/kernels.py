"""Hot numerical kernels with a numba fast path and a pure-numpy fallback.

Every kernel exists in two interchangeable implementations.  The active one
is chosen at import time: numba is used when it is importable and the
environment variable ``FOCKLENS_NUMBA`` is not set to ``"0"``.  Both
implementations stay importable through :data:`IMPLEMENTATIONS` so tests and
the benchmark script can compare them directly.

Conventions for a tridiagonal operator M of dimension n:
  * ``diag`` (length n)   -- M[i, i]
  * ``lo``   (length n-1) -- M[i+1, i]
  * ``up``   (length n-1) -- M[i, i+1]
All arrays are complex128; kernels never modify their inputs.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via FOCKLENS_NUMBA=0
    _HAVE_NUMBA = False

_TWO_PI = 2.0 * math.pi
# Squared relative cutoff for Taylor term accumulation (~2e-16 in norm).
_TAYLOR_CUT_SQ = 4.0e-32


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------

def _np_tridiag_matvec(diag, lo, up, x):
    y = diag * x
    if x.shape[0] > 1:
        y[1:] += lo * x[:-1]
        y[:-1] += up * x[1:]
    return y


def _np_cheb_apply(diag, lo, up, psi, coeffs):
    acc = coeffs[0] * psi
    if coeffs.shape[0] == 1:
        return acc
    tkm1 = psi
    tk = _np_tridiag_matvec(diag, lo, up, psi)
    acc += coeffs[1] * tk
    for k in range(2, coeffs.shape[0]):
        tnext = 2.0 * _np_tridiag_matvec(diag, lo, up, tk) - tkm1
        acc += coeffs[k] * tnext
        tkm1, tk = tk, tnext
    return acc


def _np_taylor_apply(diag, lo, up, psi, dt, nsub, max_order):
    h = dt / nsub
    acc = psi.copy()
    for _ in range(nsub):
        term = acc.copy()
        converged = False
        for k in range(1, max_order + 1):
            term = _np_tridiag_matvec(diag, lo, up, term) * (h / k)
            acc += term
            tn = float(np.vdot(term, term).real)
            an = float(np.vdot(acc, acc).real)
            if tn <= _TAYLOR_CUT_SQ * an:
                converged = True
                break
        if not converged:
            return acc, 1
    return acc, 0


def _np_phase_apply(psi, n_min, phi0, center, linear):
    d = (n_min + np.arange(psi.shape[0], dtype=np.float64)) - center
    arg = np.mod(phi0 * d * d + linear * d, _TWO_PI)
    return psi * np.exp(-1j * arg)


_NUMPY_IMPL = {
    "tridiag_matvec": _np_tridiag_matvec,
    "cheb_apply": _np_cheb_apply,
    "taylor_apply": _np_taylor_apply,
    "phase_apply": _np_phase_apply,
}


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if _HAVE_NUMBA:

    @numba.njit(cache=True)
    def _nb_tridiag_matvec(diag, lo, up, x):
        n = x.shape[0]
        y = np.empty_like(x)
        if n == 1:
            y[0] = diag[0] * x[0]
            return y
        y[0] = diag[0] * x[0] + up[0] * x[1]
        for i in range(1, n - 1):
            y[i] = diag[i] * x[i] + lo[i - 1] * x[i - 1] + up[i] * x[i + 1]
        y[n - 1] = diag[n - 1] * x[n - 1] + lo[n - 2] * x[n - 2]
        return y

    @numba.njit(cache=True)
    def _nb_cheb_apply(diag, lo, up, psi, coeffs):
        n = psi.shape[0]
        nc = coeffs.shape[0]
        acc = np.empty_like(psi)
        for i in range(n):
            acc[i] = coeffs[0] * psi[i]
        if nc == 1:
            return acc
        tkm1 = psi.copy()
        tk = _nb_tridiag_matvec(diag, lo, up, psi)
        c1 = coeffs[1]
        for i in range(n):
            acc[i] += c1 * tk[i]
        tnext = np.empty_like(psi)
        for k in range(2, nc):
            ck = coeffs[k]
            if n == 1:
                v = 2.0 * diag[0] * tk[0] - tkm1[0]
                tnext[0] = v
                acc[0] += ck * v
            else:
                v = 2.0 * (diag[0] * tk[0] + up[0] * tk[1]) - tkm1[0]
                tnext[0] = v
                acc[0] += ck * v
                for i in range(1, n - 1):
                    v = 2.0 * (diag[i] * tk[i] + lo[i - 1] * tk[i - 1]
                               + up[i] * tk[i + 1]) - tkm1[i]
                    tnext[i] = v
                    acc[i] += ck * v
                v = 2.0 * (diag[n - 1] * tk[n - 1]
                           + lo[n - 2] * tk[n - 2]) - tkm1[n - 1]
                tnext[n - 1] = v
                acc[n - 1] += ck * v
            tmp = tkm1
            tkm1 = tk
            tk = tnext
            tnext = tmp
        return acc

    @numba.njit(cache=True)
    def _nb_taylor_apply(diag, lo, up, psi, dt, nsub, max_order):
        n = psi.shape[0]
        h = dt / nsub
        acc = psi.copy()
        term = np.empty_like(psi)
        nxt = np.empty_like(psi)
        for _ in range(nsub):
            for i in range(n):
                term[i] = acc[i]
            converged = False
            for k in range(1, max_order + 1):
                scale = h / k
                if n == 1:
                    nxt[0] = diag[0] * term[0] * scale
                else:
                    nxt[0] = (diag[0] * term[0] + up[0] * term[1]) * scale
                    for i in range(1, n - 1):
                        nxt[i] = (diag[i] * term[i] + lo[i - 1] * term[i - 1]
                                  + up[i] * term[i + 1]) * scale
                    nxt[n - 1] = (diag[n - 1] * term[n - 1]
                                  + lo[n - 2] * term[n - 2]) * scale
                tmp = term
                term = nxt
                nxt = tmp
                tn = 0.0
                an = 0.0
                for i in range(n):
                    acc[i] += term[i]
                    tn += term[i].real * term[i].real + term[i].imag * term[i].imag
                    an += acc[i].real * acc[i].real + acc[i].imag * acc[i].imag
                if tn <= _TAYLOR_CUT_SQ * an:
                    converged = True
                    break
            if not converged:
                return acc, 1
        return acc, 0

    @numba.njit(cache=True)
    def _nb_phase_apply(psi, n_min, phi0, center, linear):
        out = np.empty_like(psi)
        for i in range(psi.shape[0]):
            d = (n_min + i) - center
            arg = (phi0 * d * d + linear * d) % _TWO_PI
            out[i] = psi[i] * complex(math.cos(arg), -math.sin(arg))
        return out

    _NUMBA_IMPL = {
        "tridiag_matvec": _nb_tridiag_matvec,
        "cheb_apply": _nb_cheb_apply,
        "taylor_apply": _nb_taylor_apply,
        "phase_apply": _nb_phase_apply,
    }
else:  # pragma: no cover
    _NUMBA_IMPL = None


IMPLEMENTATIONS = {"numpy": _NUMPY_IMPL}
if _NUMBA_IMPL is not None:
    IMPLEMENTATIONS["numba"] = _NUMBA_IMPL

if _HAVE_NUMBA and os.environ.get("FOCKLENS_NUMBA", "1") != "0":
    ACTIVE_BACKEND = "numba"
else:
    ACTIVE_BACKEND = "numpy"

_active = IMPLEMENTATIONS[ACTIVE_BACKEND]
tridiag_matvec = _active["tridiag_matvec"]
cheb_apply = _active["cheb_apply"]
taylor_apply = _active["taylor_apply"]
phase_apply = _active["phase_apply"]
