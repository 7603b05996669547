"""Embedded Dormand-Prince 5(4) integrator with PI step-size control."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import StiffnessError

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _B4

# PI controller exponents (Gustafsson), order of the error estimator is 4
_BETA1 = 0.7 / 5
_BETA2 = 0.4 / 5
_SAFETY = 0.9


@dataclass
class OdeSolution:
    t: np.ndarray
    y: np.ndarray  # shape (n_steps + 1, dim)
    n_rejected: int


def dopri45(f, t0, y0, t_end, rtol=1e-8, atol=1e-30, h0=None, post_step=None, max_steps=2_000_000):
    """Integrate y' = f(t, y) from t0 to t_end.

    Parameters
    ----------
    f : callable
        Right-hand side ``f(t, y) -> ndarray``.
    rtol, atol : float
        Error tolerances, the weighted RMS norm of the local error must stay below 1.
    post_step : callable, optional
        ``post_step(t, y) -> y`` applied after each accepted step (clipping etc.).

    Returns
    -------
    OdeSolution
        Accepted steps, endpoints included.
    """
    y = np.array(y0, dtype=float)
    t = float(t0)
    ts, ys = [t], [y.copy()]
    k1 = np.asarray(f(t, y), dtype=float)
    span = t_end - t0
    if span <= 0:
        return OdeSolution(np.array(ts), np.array(ys), 0)
    if h0 is None:
        sc = atol + rtol * np.abs(y)
        d0 = np.sqrt(np.mean((y / sc) ** 2))
        d1 = np.sqrt(np.mean((k1 / sc) ** 2))
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h0 = min(max(h0, 1e-10 * span), span)
    h = h0
    err_prev = 1.0
    n_rej = 0
    k = np.empty((7, y.size))
    for _ in range(max_steps):
        if t >= t_end:
            break
        last = t + h >= t_end
        if last:
            h = t_end - t
        k[0] = k1
        for i in range(1, 7):
            yi = y + h * (np.dot(_A[i], k[:i]))
            k[i] = f(t + _C[i] * h, yi)
        y_new = yi  # stage 7 argument is the 5th-order solution (FSAL)
        err_vec = h * (_E @ k)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((err_vec / sc) ** 2)))
        if not np.isfinite(err):
            err = 1e10
        if err <= 1.0:
            t = t_end if last else t + h
            y = y_new
            k1 = k[6].copy()
            if post_step is not None:
                y2 = post_step(t, y)
                if y2 is not y:
                    y = y2
                    k1 = np.asarray(f(t, y), dtype=float)
            ts.append(t)
            ys.append(y.copy())
            err = max(err, 1e-10)
            fac = _SAFETY * err ** (-_BETA1) * err_prev**_BETA2
            h = h * min(5.0, max(0.2, fac))
            err_prev = err
        else:
            n_rej += 1
            h = h * max(0.2, _SAFETY * err ** (-1 / 5))
        if h < 1e-14 * max(1.0, abs(t)):
            raise StiffnessError(f"step size underflow at t = {t:.17g}")
    else:
        raise StiffnessError(f"maximum step count exceeded at t = {t:.17g}")
    return OdeSolution(np.array(ts), np.array(ys), n_rej)
