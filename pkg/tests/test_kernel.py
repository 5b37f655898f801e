import numpy as np
import pytest

from nesslab.errors import DomainError, InvalidKernelError
from nesslab.kernel import (
    AngularKernel,
    contraction_factor,
    gtw_decay_rate,
    kernel_from_config,
    lambda0_as_printed,
    make_kernel,
    moment_decay_rate,
    sample_cosine,
)


def test_isotropic_normalised_and_even(iso):
    assert 0.5 * np.dot(iso.weights, iso.b_nodes) == pytest.approx(1.0, abs=1e-14)
    assert iso.is_even
    assert abs(iso.first_moment()) < 1e-15


def test_contraction_factor_even_kernel_exact(iso):
    assert contraction_factor(iso, 0.5) == 0.75
    assert gtw_decay_rate(iso, 0.5) == 0.25


def test_contraction_factor_linear_kernel(linear_half):
    # (1 - g) + g/4 int (1+s)(1+s/2) ds = 0.4 + 0.6 * 7/12
    assert contraction_factor(linear_half, 0.6) == pytest.approx(0.75, abs=1e-14)


def test_linear_kernel_with_a_zero_is_even():
    k = make_kernel("linear", a=0.0)
    assert k.is_even
    assert contraction_factor(k, 0.3) == 1 - 0.15


def test_moment_decay_rate_carries_gamma(iso, linear_half):
    assert moment_decay_rate(iso, 0.5) == pytest.approx(0.25)
    assert lambda0_as_printed(iso) == pytest.approx(0.5)
    # first moment of 1 + s/2 is 1/6
    assert linear_half.first_moment() == pytest.approx(1 / 6, abs=1e-14)
    assert moment_decay_rate(linear_half, 0.6) == pytest.approx(0.3 * (1 - 1 / 6))


@pytest.mark.parametrize("gamma", [0.0, 1.0, -0.1, 1.5])
def test_gamma_outside_open_interval(iso, gamma):
    with pytest.raises(DomainError):
        contraction_factor(iso, gamma)
    with pytest.raises(DomainError):
        moment_decay_rate(iso, gamma)


def test_invalid_kernels():
    with pytest.raises(InvalidKernelError):
        make_kernel("linear", a=1.5)
    with pytest.raises(InvalidKernelError):
        make_kernel("linear")
    with pytest.raises(InvalidKernelError):
        make_kernel("cubic")
    with pytest.raises(DomainError):
        make_kernel("isotropic", node_count=8)
    nodes, weights = np.polynomial.legendre.leggauss(32)
    with pytest.raises(InvalidKernelError, match="normalised"):
        AngularKernel(lambda s: 2.0 + 0 * s, nodes, weights, True)
    with pytest.raises(InvalidKernelError, match="nonnegative"):
        AngularKernel(lambda s: 1.0 + 1.5 * s, nodes, weights, False)
    with pytest.raises(InvalidKernelError, match="even"):
        AngularKernel(lambda s: 1.0 + 0.5 * s, nodes, weights, True)


def test_config_round_trip(linear_half):
    k = kernel_from_config(linear_half.to_config())
    assert k.name == "linear" and k.params == {"a": 0.5}
    with pytest.raises(InvalidKernelError):
        kernel_from_config({"kind": "isotropic", "extra": 1})


@pytest.mark.parametrize("a", [0.0, 0.5, -0.8])
def test_sample_cosine_moments(a):
    k = make_kernel("linear", a=a)
    s = sample_cosine(k, np.random.default_rng(1), 400_000)
    assert s.min() >= -1 and s.max() <= 1
    # density (1 + a s)/2: mean a/3, second moment 1/3
    se = np.sqrt(1 / 3 / s.size)
    assert abs(s.mean() - a / 3) < 5 * se
    assert abs(np.mean(s * s) - 1 / 3) < 5 * se
