"""Manufactured problems for the convergence and adaptivity experiments.

Forcings are derived analytically from the exact solutions.  For separable
time-dependent solutions u = T(t) S(x, y) with polynomial T and a power
kernel, the memory convolution has the closed form

    int_0^t K(t - s) T(s) ds = scale * sum_m c_m B(tau, m+1) t^(tau+m),

with B the Beta function, which keeps the rate studies free of consistency
error from numerical convolution.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import beta as beta_fn

from .forms import ModelParams, reaction_value
from .memory import KernelSpec

__all__ = [
    "StationaryProblem",
    "TransientProblem",
    "stationary_forcing",
    "sine_stationary",
    "sine_transient",
    "lshape_case1",
    "lshape_case2",
    "moving_bump",
    "bump_center",
]


@dataclass
class StationaryProblem:
    params: ModelParams
    f: object
    g: object = None
    exact: object = None
    exact_grad: object = None          # (x, y) -> (ux, uy)
    domain: str = "unit-square"


@dataclass
class TransientProblem:
    params: ModelParams
    f: object                          # f(x, y, t)
    u0: object
    kernel: KernelSpec = None
    g: object = None                   # g(x, y, t)
    exact: object = None               # u(x, y, t)
    exact_grad: object = None          # (x, y, t) -> (ux, uy)
    domain: str = "unit-square"


def stationary_forcing(u, grad, lap, params):
    """f = alpha u^d (ux + uy) - nu lap(u) - beta c(u)."""
    def f(x, y):
        U = u(x, y)
        ux, uy = grad(x, y)
        return (params.alpha * U ** params.delta * (ux + uy)
                - params.nu * lap(x, y)
                - params.beta * reaction_value(U, params))
    return f


def sine_stationary(params):
    """u = sin(pi x) sin(pi y) on the unit square (homogeneous data)."""
    pi = np.pi

    def u(x, y):
        return np.sin(pi * x) * np.sin(pi * y)

    def grad(x, y):
        return (pi * np.cos(pi * x) * np.sin(pi * y),
                pi * np.sin(pi * x) * np.cos(pi * y))

    def lap(x, y):
        return -2.0 * pi ** 2 * np.sin(pi * x) * np.sin(pi * y)

    return StationaryProblem(
        params=params, f=stationary_forcing(u, grad, lap, params),
        g=None, exact=u, exact_grad=grad, domain="unit-square")


# time polynomial of the benchmark solution: 1 - t^2 + t^3
_T_COEFFS = np.array([1.0, 0.0, -1.0, 1.0])


def _poly(coeffs, t):
    out = np.zeros_like(np.asarray(t, dtype=float))
    for m, c in enumerate(coeffs):
        if c:
            out = out + c * np.asarray(t, dtype=float) ** m
    return out


def _poly_deriv(coeffs, t):
    dc = [m * c for m, c in enumerate(coeffs)][1:]
    return _poly(np.asarray(dc), t) if len(dc) else np.zeros_like(t)


def kernel_convolution_poly(kernel, coeffs, t):
    """int_0^t K(t-s) P(s) ds for polynomial P via the Beta identity."""
    if not kernel.is_power:
        raise ValueError("closed-form convolution needs a power kernel")
    tau = kernel.exponent
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for m, c in enumerate(coeffs):
        if c:
            out = out + c * beta_fn(tau, m + 1) * t ** (tau + m)
    return kernel.scale * out


def sine_transient(params, kernel=None):
    """u = (t^3 - t^2 + 1) sin(pi x) sin(pi y) on the unit square."""
    pi = np.pi
    if params.eta > 0 and kernel is None:
        raise ValueError("eta > 0 requires a kernel")

    S = lambda x, y: np.sin(pi * x) * np.sin(pi * y)
    Sx = lambda x, y: pi * np.cos(pi * x) * np.sin(pi * y)
    Sy = lambda x, y: pi * np.sin(pi * x) * np.cos(pi * y)
    lapS = lambda x, y: -2.0 * pi ** 2 * np.sin(pi * x) * np.sin(pi * y)

    def exact(x, y, t):
        return _poly(_T_COEFFS, t) * S(x, y)

    def exact_grad(x, y, t):
        T = _poly(_T_COEFFS, t)
        return (T * Sx(x, y), T * Sy(x, y))

    def f(x, y, t):
        T = _poly(_T_COEFFS, t)
        dT = _poly_deriv(_T_COEFFS, t)
        U = T * S(x, y)
        out = (dT * S(x, y)
               + params.alpha * U ** params.delta * T * (Sx(x, y) + Sy(x, y))
               - params.nu * T * lapS(x, y)
               - params.beta * reaction_value(U, params))
        if params.eta > 0:
            out = out - params.eta * kernel_convolution_poly(
                kernel, _T_COEFFS, t) * lapS(x, y)
        return out

    return TransientProblem(
        params=params, f=f, u0=lambda x, y: S(x, y), kernel=kernel,
        g=None, exact=exact, exact_grad=exact_grad, domain="unit-square")


def lshape_case1(params):
    """Smooth bump with a high gradient near the reentrant corner:
    u = x y (1-x)(1-y) exp(-50((x-0.025)^2 + (y-0.025)^2)) on the L-shape."""
    a = 0.025

    def parts(x, y):
        P = (x - x * x) * (y - y * y)
        Px = (1.0 - 2.0 * x) * (y - y * y)
        Py = (x - x * x) * (1.0 - 2.0 * y)
        Pxx = -2.0 * (y - y * y)
        Pyy = -2.0 * (x - x * x)
        E = np.exp(-50.0 * ((x - a) ** 2 + (y - a) ** 2))
        Ex = -100.0 * (x - a) * E
        Ey = -100.0 * (y - a) * E
        Exx = (-100.0 + 100.0 ** 2 * (x - a) ** 2) * E
        Eyy = (-100.0 + 100.0 ** 2 * (y - a) ** 2) * E
        return P, Px, Py, Pxx, Pyy, E, Ex, Ey, Exx, Eyy

    def u(x, y):
        P = (x - x * x) * (y - y * y)
        E = np.exp(-50.0 * ((x - a) ** 2 + (y - a) ** 2))
        return P * E

    def grad(x, y):
        P, Px, Py, Pxx, Pyy, E, Ex, Ey, Exx, Eyy = parts(x, y)
        return (Px * E + P * Ex, Py * E + P * Ey)

    def lap(x, y):
        P, Px, Py, Pxx, Pyy, E, Ex, Ey, Exx, Eyy = parts(x, y)
        return (Pxx * E + 2.0 * Px * Ex + P * Exx +
                Pyy * E + 2.0 * Py * Ey + P * Eyy)

    return StationaryProblem(
        params=params, f=stationary_forcing(u, grad, lap, params),
        g=u, exact=u, exact_grad=grad, domain="l-shape")


def lshape_case2(params):
    """Corner singularity u = (x^2 + y^2)^(1/4) on the L-shape."""

    def r2(x, y):
        return np.maximum(x * x + y * y, 1e-300)

    def u(x, y):
        return r2(x, y) ** 0.25

    def grad(x, y):
        s = r2(x, y) ** -0.75
        return (0.5 * x * s, 0.5 * y * s)

    def lap(x, y):
        return 0.25 * r2(x, y) ** -0.75

    return StationaryProblem(
        params=params, f=stationary_forcing(u, grad, lap, params),
        g=u, exact=u, exact_grad=grad, domain="l-shape")


def bump_center(t):
    """Center of the moving singularity at time t."""
    return 0.3 + 0.4 * t, 0.3 + 0.4 * t


def moving_bump(params):
    """Moving time singularity u = s(t) exp(-50 r^2(x, y, t)) on the unit
    square with r^2 = (x - 0.4t - 0.3)^2 + (y - 0.4t - 0.3)^2; memory-free."""
    if params.eta != 0.0:
        raise ValueError("the moving-bump benchmark is defined with eta = 0")

    def s_fn(t):
        t = np.asarray(t, dtype=float)
        q1 = 0.98 * t + 0.01
        q2 = 1.01 - 0.98 * t
        return np.where(t < 0.5,
                        1.0 - np.exp(-50.0 * q1 ** 2),
                        1.0 - np.exp(-50.0 * q2 ** 2))

    def s_dt(t):
        t = np.asarray(t, dtype=float)
        q1 = 0.98 * t + 0.01
        q2 = 1.01 - 0.98 * t
        return np.where(t < 0.5,
                        100.0 * 0.98 * q1 * np.exp(-50.0 * q1 ** 2),
                        -100.0 * 0.98 * q2 * np.exp(-50.0 * q2 ** 2))

    def parts(x, y, t):
        cx, cy = bump_center(t)
        dx, dy = x - cx, y - cy
        E = np.exp(-50.0 * (dx * dx + dy * dy))
        return dx, dy, E

    def exact(x, y, t):
        _, _, E = parts(x, y, t)
        return s_fn(t) * E

    def exact_grad(x, y, t):
        dx, dy, E = parts(x, y, t)
        s = s_fn(t)
        return (-100.0 * s * dx * E, -100.0 * s * dy * E)

    def lap(x, y, t):
        dx, dy, E = parts(x, y, t)
        return (-200.0 + 100.0 ** 2 * (dx * dx + dy * dy)) * E

    def u_t(x, y, t):
        dx, dy, E = parts(x, y, t)
        # d/dt of the center shifts r^2 by -0.8 (dx + dy)
        return s_dt(t) * E + s_fn(t) * 40.0 * (dx + dy) * E

    def f(x, y, t):
        U = exact(x, y, t)
        ux, uy = exact_grad(x, y, t)
        return (u_t(x, y, t)
                + params.alpha * U ** params.delta * (ux + uy)
                - params.nu * s_fn(t) * lap(x, y, t)
                - params.beta * reaction_value(U, params))

    return TransientProblem(
        params=params, f=f, u0=lambda x, y: exact(x, y, 0.0),
        kernel=None, g=exact, exact=exact, exact_grad=exact_grad,
        domain="unit-square")
