import math

import numpy as np
import pytest
from scipy.integrate import quad, solve_ivp

from critmass.model import Parameters
from critmass.variational import ObjectiveSpec, estimate_constant


def lane_emden_cstar():
    """C_* for d=3 from the n=3 Lane-Emden profile, independent of the maximizer.

    At m = 4/3 the Euler-Lagrange equation makes h^{1/3} a multiple of the
    potential minus a constant on the support, so h = θ^3 with θ solving
    θ'' + 2θ'/ξ = -θ^3. The quotient H/(N^{2/3} P) is scale free.
    """
    def rhs(x, y):
        return [y[1], -y[0] ** 3 - 2 * y[1] / x]

    hit = lambda x, y: y[0]
    hit.terminal, hit.direction = True, -1
    x0 = 1e-6
    y0 = [1 - x0 ** 2 / 6, -x0 / 3]
    sol = solve_ivp(rhs, (x0, 20), y0, events=hit, dense_output=True, rtol=1e-12, atol=1e-14)
    xi1 = sol.t_events[0][0]
    th = lambda x: max(sol.sol(x)[0], 0.0) if x > x0 else 1.0
    N = 4 * math.pi * quad(lambda x: th(x) ** 3 * x * x, 0, xi1, limit=200, epsabs=1e-13)[0]
    P = 4 * math.pi * quad(lambda x: th(x) ** 4 * x * x, 0, xi1, limit=200, epsabs=1e-13)[0]
    # the potential of h = θ^3 is 4π(θ + c) inside, matching N/ξ1 at the edge
    c = N / (4 * math.pi * xi1)
    H = 4 * math.pi * (P + c * N)
    return H / (N ** (2.0 / 3.0) * P)


@pytest.fixture(scope="session")
def cstar_oracle():
    return lane_emden_cstar()


@pytest.fixture(scope="session")
def params3():
    return Parameters.intersection(3)


@pytest.fixture(scope="session")
def cstar_result():
    return estimate_constant(ObjectiveSpec.cstar(3), n=512)


@pytest.fixture(scope="session")
def cstar_256():
    return estimate_constant(ObjectiveSpec.cstar(3), n=256)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
