"""Batched adaptive Simpson quadrature.

Many integrals over different intervals (and with different integrand
parameters) are refined together, one numpy pass per bisection level.
"""
import numpy as np

from .errors import QuadratureNonConvergence

MAX_PANELS = 2**24
_EPS = np.finfo(float).eps


def adaptive_simpson(f, a, b, tol=1e-10, max_panels=MAX_PANELS, h0=np.pi / 16):
    """Integrate ``f`` over each interval ``[a[k], b[k]]``.

    ``f(t, owner)`` is called with an array of abscissae and the matching
    array of interval indices, so the integrand can look up per-interval
    parameters.  ``tol`` is the absolute tolerance for each integral.  Each
    interval is first cut into panels no longer than ``h0`` so that an
    oscillating integrand cannot fool the error estimate on the first pass.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    a, b = np.broadcast_arrays(a, b)
    n = a.size
    total = np.zeros(n)
    if n == 0:
        return total
    a = a.ravel()
    b = b.ravel()
    sign = np.where(b < a, -1.0, 1.0)
    lo_end = np.minimum(a, b)
    length = np.abs(b - a)

    m = np.maximum(1, np.ceil(length / h0)).astype(np.int64)
    m[length == 0] = 0
    owner = np.repeat(np.arange(n), m)
    if owner.size == 0:
        return total
    k = np.arange(owner.size) - np.repeat(np.cumsum(m) - m, m)
    mo = m[owner]
    lo = lo_end[owner] + length[owner] * k / mo
    hi = lo_end[owner] + length[owner] * (k + 1) / mo
    ptol = tol / mo
    mid = 0.5 * (lo + hi)
    fa = f(lo, owner)
    fb = f(hi, owner)
    fm = f(mid, owner)
    whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb)
    used = owner.size

    while owner.size:
        lm = 0.5 * (lo + mid)
        rm = 0.5 * (mid + hi)
        flm = f(lm, owner)
        frm = f(rm, owner)
        left = (mid - lo) / 6.0 * (fa + 4.0 * flm + fm)
        right = (hi - mid) / 6.0 * (fm + 4.0 * frm + fb)
        both = left + right
        delta = both - whole
        ok = (
            (np.abs(delta) <= 15.0 * ptol)
            | (np.abs(delta) <= 64.0 * _EPS * (np.abs(left) + np.abs(right)))
            | ((hi - lo) <= 1e-13 * (1.0 + np.abs(lo)))
        )
        if ok.any():
            total += np.bincount(owner[ok], weights=(both + delta / 15.0)[ok], minlength=n)
        nk = ~ok
        if not nk.any():
            break
        used += 2 * int(nk.sum())
        if used > max_panels:
            raise QuadratureNonConvergence(
                f"adaptive Simpson exceeded {max_panels} panels (tol={tol:g})"
            )
        lo, hi, mid = (
            np.concatenate((lo[nk], mid[nk])),
            np.concatenate((mid[nk], hi[nk])),
            np.concatenate((lm[nk], rm[nk])),
        )
        fa, fb, fm = (
            np.concatenate((fa[nk], fm[nk])),
            np.concatenate((fm[nk], fb[nk])),
            np.concatenate((flm[nk], frm[nk])),
        )
        whole = np.concatenate((left[nk], right[nk]))
        ptol = np.concatenate((ptol[nk], ptol[nk])) * 0.5
        owner = np.concatenate((owner[nk], owner[nk]))

    return sign * total


def integrate(func, a, b, tol=1e-10, **kw):
    """Scalar convenience wrapper: ``func`` takes an array of abscissae."""
    out = adaptive_simpson(lambda t, _owner: func(t), a, b, tol=tol, **kw)
    return float(out[0]) if np.ndim(a) == 0 and np.ndim(b) == 0 else out
