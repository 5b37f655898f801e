import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nesslab.errors import DomainError, IllConditionedFitError, MetricDomainError
from nesslab.metrics import gtw_distance, moments, radial_w2
from nesslab.spectral import RadialCharFn, charfn_maxwellian, charfn_mixture, density_maxwellian

from conftest import unit_energy_mixture


@pytest.mark.parametrize("T", [0.1, 1 / 3, 0.5, 1.0])
def test_maxwellian_moments(T):
    m = moments(charfn_maxwellian(T))
    assert m.m2 == pytest.approx(3 * T, rel=1e-10)
    assert m.m4 == pytest.approx(15 * T * T, rel=5e-9)


def test_mixture_moments():
    m = moments(charfn_mixture([0.5, 0.5], [0.2, 7 / 15]))
    assert m.m2 == pytest.approx(1.0, abs=1e-10)
    assert m.m4 == pytest.approx(7.5 * (0.04 + (7 / 15) ** 2), abs=1e-9)


def test_moment_fit_rejects_coarse_grid():
    with pytest.raises(IllConditionedFitError):
        moments(charfn_maxwellian(0.3, n=16, r_max=16.0))


def test_gtw_against_dense_evaluation():
    f = charfn_mixture([0.5, 0.5], [0.2, 7 / 15])
    g = charfn_maxwellian(1 / 3)
    r = np.linspace(1e-4, 16, 2_000_001)
    exact = np.max(np.abs(0.5 * np.exp(-0.1 * r * r) + 0.5 * np.exp(-7 / 30 * r * r) - np.exp(-r * r / 6)) / r**2)
    assert gtw_distance(f, g) == pytest.approx(exact, rel=1e-5)
    fine = gtw_distance(charfn_mixture([0.5, 0.5], [0.2, 7 / 15], n=20480), charfn_maxwellian(1 / 3, n=20480))
    assert gtw_distance(f, g) == pytest.approx(fine, rel=1e-5)


def test_gtw_requires_matched_energy():
    with pytest.raises(MetricDomainError):
        gtw_distance(charfn_maxwellian(0.3), charfn_maxwellian(0.4))
    assert gtw_distance(charfn_maxwellian(0.3), charfn_maxwellian(0.4), check_moments=False) > 0


@given(st.integers(0, 2**32 - 1))
def test_gtw_metric_axioms(seed):
    rng = np.random.default_rng(seed)
    f, g, h = (charfn_mixture(*unit_energy_mixture(rng)) for _ in range(3))
    assert gtw_distance(f, f) == 0.0
    assert gtw_distance(f, g) == pytest.approx(gtw_distance(g, f), rel=1e-14)
    assert gtw_distance(f, h) <= gtw_distance(f, g) + gtw_distance(g, h) + 1e-15


def test_w2_samples():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((200_000, 3))
    assert radial_w2(x, x) == 0.0
    # speeds scale with sqrt(T)
    assert radial_w2(x, 0.5 * x) == pytest.approx(0.5 * math.sqrt(np.mean(np.sum(x * x, axis=1))), rel=1e-12)


def test_w2_unequal_sizes_exact():
    # quantile functions: a is 1 on (0,1/2) and 3 after; b is 2 everywhere
    assert radial_w2(np.array([1.0, 3.0]), np.array([2.0, 2.0, 2.0])) == pytest.approx(1.0)
    assert radial_w2(np.array([0.0, 3.0]), np.array([0.0, 0.0, 3.0])) == pytest.approx(math.sqrt(9 / 6))


def test_w2_densities_match_closed_form():
    a, b = density_maxwellian(1.0, 10.0), density_maxwellian(0.25, 10.0)
    assert radial_w2(a, b) == pytest.approx(math.sqrt(3) * 0.5, rel=1e-4)
    x = 0.5 * np.random.default_rng(4).standard_normal((400_000, 3))
    assert radial_w2(x, b) < 5e-3


def test_w2_bad_input():
    with pytest.raises(DomainError):
        radial_w2(np.array([]), np.array([1.0]))
    with pytest.raises(DomainError):
        radial_w2(np.ones((4, 2)), np.ones(4))


def test_charfn_reused_between_metrics_is_untouched():
    phi = charfn_maxwellian(1 / 3)
    before = phi.values.copy()
    gtw_distance(phi, charfn_mixture([0.5, 0.5], [0.2, 7 / 15]))
    moments(phi)
    assert np.array_equal(before, phi.values) and isinstance(phi, RadialCharFn)
