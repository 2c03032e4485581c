"""Weakly singular kernels, convolution-quadrature weights, and history.

The weight omega[k, j] is the double average of the kernel over the time-step
rectangle,

    omega_kj = (1 / (tau_k tau_j)) * int_{t_{k-1}}^{t_k} int_{t_{j-1}}^{min(t, t_j)}
               K(t - s) ds dt,

with a closed form for power kernels K(t) = s t^(tau-1) through the second
antiderivative G(x) = s x^(tau+1) / (tau (tau+1)).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

__all__ = [
    "KernelSpec",
    "MemoryWeights",
    "History",
    "weights_be",
    "weights_cn",
    "cn_memory_value",
    "history_action",
    "discrete_positivity_check",
    "PositivityReport",
    "export_weights_csv",
]


@dataclass(frozen=True)
class KernelSpec:
    """Memory kernel. ``power``: K(t) = scale * t^(exponent-1) with
    exponent in (0, 1]; ``constant``: K = scale; ``custom``: a user callable
    that must come with an integrability statement."""
    kind: str = "power"
    exponent: float = 0.5
    scale: float = None
    func: object = None
    integrable_certified: bool = False

    def __post_init__(self):
        if self.kind not in ("power", "constant", "custom"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "power":
            if not 0 < self.exponent <= 1:
                raise ValueError("power exponent must lie in (0, 1]")
            if self.scale is None:
                object.__setattr__(self, "scale", 1.0 / math.gamma(self.exponent))
        elif self.kind == "constant":
            object.__setattr__(self, "exponent", 1.0)
            if self.scale is None:
                object.__setattr__(self, "scale", 1.0)
        else:
            if self.func is None:
                raise ValueError("custom kernel needs a callable")
            if not self.integrable_certified:
                raise ValueError("custom kernel requires integrable_certified=True")
        if self.scale is not None and self.scale <= 0:
            raise ValueError("kernel scale must be positive")

    @property
    def is_power(self):
        return self.kind in ("power", "constant")

    def __call__(self, t):
        if self.is_power:
            t = np.asarray(t, dtype=float)
            return self.scale * t ** (self.exponent - 1.0)
        return self.func(t)

    def antiderivative(self, x):
        """int_0^x K(r) dr, closed form for power kernels."""
        if self.is_power:
            x = np.asarray(x, dtype=float)
            return self.scale * x ** self.exponent / self.exponent
        val, _ = quad(self.func, 0.0, float(x), epsabs=1e-14, epsrel=1e-12,
                      limit=200)
        return val

    def second_antiderivative(self, x):
        if not self.is_power:
            raise ValueError("closed form only for power kernels")
        x = np.asarray(x, dtype=float)
        tau = self.exponent
        return self.scale * x ** (tau + 1.0) / (tau * (tau + 1.0))


@dataclass
class MemoryWeights:
    """Lower-triangular omega table over a fixed time grid.

    ``table[k-1, j-1]`` holds omega_kj for 1 <= j <= k <= N; entries above
    the diagonal are zero.
    """
    times: np.ndarray
    table: np.ndarray

    @property
    def taus(self):
        return np.diff(self.times)

    @property
    def n_steps(self):
        return len(self.times) - 1

    def row(self, k):
        """omega_{k,1..k} as a vector (k is 1-based)."""
        return self.table[k - 1, :k]


def _power_weights(times, kernel):
    t = np.asarray(times, dtype=float)
    taus = np.diff(t)
    n = len(taus)
    G = kernel.second_antiderivative
    table = np.zeros((n, n))
    for k in range(1, n + 1):
        tk, tk1 = t[k], t[k - 1]
        j = np.arange(1, k)
        if len(j):
            num = (G(tk - t[j - 1]) - G(tk - t[j]) -
                   G(tk1 - t[j - 1]) + G(tk1 - t[j]))
            table[k - 1, :k - 1] = num / (taus[k - 1] * taus[j - 1])
        table[k - 1, k - 1] = G(taus[k - 1]) / taus[k - 1] ** 2
    return table


def _numeric_weight(times, kernel, k, j):
    """Adaptive double integration of the weight definition (1-based k, j)."""
    t = np.asarray(times, dtype=float)
    tk1, tk = t[k - 1], t[k]
    tj1, tj = t[j - 1], t[j]

    def inner(tt):
        hi = min(tt, tj)
        if hi <= tj1:
            return 0.0
        # substitute r = tt - s to put the singularity at the endpoint r -> 0
        val, _ = quad(kernel, tt - hi, tt - tj1, epsabs=1e-14, epsrel=1e-11,
                      limit=200)
        return val

    val, _ = quad(inner, tk1, tk, epsabs=1e-14, epsrel=1e-10, limit=200)
    return val / ((tk - tk1) * (tj - tj1))


def weights_be(times, kernel):
    """Convolution-quadrature weight table for the backward Euler scheme."""
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or len(t) < 2 or np.any(np.diff(t) <= 0):
        raise ValueError("time grid must be strictly increasing")
    if kernel.is_power:
        table = _power_weights(t, kernel)
        if np.any(table < -1e-14 * max(1.0, np.abs(table).max())):
            raise ValueError("negative weight for a power kernel")
        np.maximum(table, 0.0, out=table)
    else:
        n = len(t) - 1
        table = np.zeros((n, n))
        for k in range(1, n + 1):
            for j in range(1, k + 1):
                table[k - 1, j - 1] = _numeric_weight(t, kernel, k, j)
    return MemoryWeights(times=t, table=table)


def weights_cn(times, kernel):
    """Weight table for the Crank-Nicolson scheme (identical to backward
    Euler); CN applies the weights to half-step averages."""
    return weights_be(times, kernel)


def cn_memory_value(weights, k, psi_half):
    """J(psi) = (1/2) sum_{j<=k} omega_kj tau_j psi^{j-1/2} for scalar or
    vector samples psi_half[j-1] = (psi(t_j) + psi(t_{j-1})) / 2."""
    psi = np.asarray(psi_half, dtype=float)
    if psi.shape[0] < k:
        raise ValueError("need half-step values through step k")
    w = weights.row(k) * weights.taus[:k]
    return 0.5 * np.tensordot(w, psi[:k], axes=(0, 0))


class History:
    """Per-step records of the fields entering the memory sum (backward
    Euler: u^j; Crank-Nicolson: the half-step averages)."""

    def __init__(self):
        self.records = []

    def add(self, item):
        self.records.append(item)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, j):
        return self.records[j]


def history_action(actions, weights, k, eta, implicit_share=1.0):
    """Explicit memory load and implicit diagonal coefficient at step k.

    ``actions[j-1]`` is the stiffness action A @ u_j of history entry j on the
    current mesh (j = 1 .. k-1).  Returns (vec, coeff) with
    vec = eta * sum_{j<k} omega_kj tau_j actions[j-1] and
    coeff = eta * omega_kk tau_k * implicit_share, the factor multiplying the
    stiffness action of the unknown inside the Newton system.
    """
    taus = weights.taus
    row = weights.row(k)
    coeff = eta * row[k - 1] * taus[k - 1] * implicit_share
    if k == 1 or eta == 0.0:
        dim = actions[0].shape[0] if len(actions) else None
        vec = np.zeros(dim) if dim is not None else 0.0
        if len(actions) < k - 1:
            if eta != 0.0 and k > 1:
                raise ValueError("missing history record")
        return vec, coeff
    if len(actions) < k - 1:
        raise ValueError("missing history record")
    stack = np.asarray(actions[:k - 1])
    vec = eta * ((row[:k - 1] * taus[:k - 1]) @ stack)
    return vec, coeff


@dataclass
class PositivityReport:
    min_value: float
    tolerance: float
    violations: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.violations


def discrete_positivity_check(weights, trials=100, rng=None, tol=1e-12):
    """Empirical check that the quadratic form
    sum_k sum_{j<=k} omega_kj tau_j tau_k xi_j xi_k stays non-negative."""
    rng = np.random.default_rng(rng)
    taus = weights.taus
    n = weights.n_steps
    lower = weights.table * np.outer(taus, taus)
    min_val = np.inf
    violations = []
    for trial in range(trials):
        xi = rng.standard_normal(n)
        val = float(xi @ (lower @ xi))
        scale = max(1.0, float(np.abs(lower).max() * (xi @ xi)))
        min_val = min(min_val, val)
        if val < -tol * scale:
            violations.append((trial, val))
    return PositivityReport(min_value=min_val, tolerance=tol,
                            violations=violations)


def export_weights_csv(path, weights):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "j", "omega"])
        for k in range(1, weights.n_steps + 1):
            for j in range(1, k + 1):
                writer.writerow([k, j, repr(weights.table[k - 1, j - 1])])
