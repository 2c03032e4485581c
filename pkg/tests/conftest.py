import numpy as np
import pytest
from scipy.integrate import quad

from gbhdg.dgspace import DofMap
from gbhdg.forms import ModelParams
from gbhdg.mesh import build_structured


@pytest.fixture
def square4():
    return build_structured("unit-square", 4)


@pytest.fixture
def dm_p1(square4):
    return DofMap(square4, 1)


@pytest.fixture
def dm_p2(square4):
    return DofMap(square4, 2)


@pytest.fixture
def params_default():
    return ModelParams(alpha=1.0, nu=1.0, beta=1.0, gamma=0.5, delta=1,
                       penalty=10.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def numeric_weight_oracle(times, kernel_fn, k, j):
    """Independent double-integration oracle for the convolution weights:
    (1/(tau_k tau_j)) int_{t_{k-1}}^{t_k} int_{t_{j-1}}^{min(t,t_j)} K(t-s) ds dt,
    inner integral substituted to put the kernel singularity at an endpoint.
    """
    t = np.asarray(times, dtype=float)
    tk1, tk = t[k - 1], t[k]
    tj1, tj = t[j - 1], t[j]

    def inner(tt):
        hi = min(tt, tj)
        if hi <= tj1:
            return 0.0
        val, _ = quad(kernel_fn, tt - hi, tt - tj1, epsabs=1e-14,
                      epsrel=1e-11, limit=200)
        return val

    val, _ = quad(inner, tk1, tk, epsabs=1e-14, epsrel=1e-10, limit=200)
    return val / ((tk - tk1) * (tj - tj1))
