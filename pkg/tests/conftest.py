import numpy as np
import pytest
from hypothesis import settings

from nesslab.kernel import make_kernel
from nesslab.spectral import charfn_mixture

settings.register_profile("nesslab", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("nesslab")

MIX_W = (0.5, 0.5)
MIX_T = (0.2, 7 / 15)


@pytest.fixture(scope="session")
def iso():
    return make_kernel("isotropic")


@pytest.fixture(scope="session")
def linear_half():
    return make_kernel("linear", a=0.5)


@pytest.fixture(scope="session")
def reservoir():
    return charfn_mixture(MIX_W, MIX_T)


@pytest.fixture(scope="session")
def ness(iso, reservoir):
    from nesslab.steady import solve_ness

    return solve_ness(reservoir, iso, 0.5, tol=1e-12)


def unit_energy_mixture(rng: np.random.Generator, components: int = 3):
    w = rng.dirichlet(np.ones(components))
    T = rng.uniform(0.05, 1.0, components)
    T /= 3.0 * np.dot(w, T)
    return w / w.sum(), T
