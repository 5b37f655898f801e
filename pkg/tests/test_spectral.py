import numpy as np
import pytest
from hypothesis import given, strategies as st

from nesslab.errors import ConfigError, DomainError, RangeError, ShapeError, TruncationError
from nesslab.metrics import moments
from nesslab.spectral import (
    RadialCharFn,
    RadialDensity,
    charfn_maxwellian,
    charfn_mixture,
    density_maxwellian,
    density_mixture,
    gain,
    interpolate,
    inverse_transform,
    maxwellian_density,
    phi_map,
)

from conftest import unit_energy_mixture


def test_maxwellian_charfn_values():
    phi = charfn_maxwellian(0.4)
    assert phi.values[0] == 1.0
    assert np.allclose(phi.values, np.exp(-0.2 * phi.r**2), atol=1e-15)
    assert phi.n == 2048 and phi.r_max == 16.0


def test_charfn_validation():
    with pytest.raises(DomainError):
        RadialCharFn(1.0, np.r_[0.9, np.zeros(10)])
    with pytest.raises(DomainError):
        RadialCharFn(1.0, np.r_[1.0, 1.1, np.zeros(10)])
    with pytest.raises(ShapeError):
        RadialCharFn(1.0, np.ones(3))
    with pytest.raises(DomainError):
        charfn_maxwellian(-1.0)
    with pytest.raises(ConfigError, match="reservoir.weights"):
        charfn_mixture([0.5, 0.6], [0.2, 0.3])


def test_values_are_read_only():
    phi = charfn_maxwellian(0.3)
    with pytest.raises(ValueError):
        phi.values[3] = 0.0


def test_interpolation_accuracy():
    T = 1 / 3
    phi = charfn_maxwellian(T)
    r = np.random.default_rng(0).uniform(0, 16, 5000)
    assert np.max(np.abs(interpolate(phi, r) - np.exp(-0.5 * T * r * r))) < 1e-10
    assert interpolate(phi, 0.0) == 1.0
    with pytest.raises(RangeError):
        interpolate(phi, 16.5)
    with pytest.raises(RangeError):
        interpolate(phi, -0.1)


@pytest.mark.parametrize("T", [0.2, 1 / 3, 0.8])
def test_gain_fixes_maxwellian(iso, linear_half, T):
    # Q+(M_T, M_T) = M_T for every normalised kernel
    phi = charfn_maxwellian(T)
    for k in (iso, linear_half):
        assert np.max(np.abs(gain(phi, phi, k).values - phi.values)) < 1e-11


def test_gain_moment_oracle(iso):
    # r^4 coefficient of the gain: (c_f + c_g)/3 + a_f a_g / 6 with a = m2/6, c = m4/120
    f = charfn_mixture([0.3, 0.7], [0.1, 0.5])
    g = charfn_maxwellian(0.6)
    mf, mg, mq = moments(f), moments(g), moments(gain(f, g, iso))
    assert mq.m2 == pytest.approx(0.5 * (mf.m2 + mg.m2), abs=1e-9)
    c = (mf.m4 / 120 + mg.m4 / 120) / 3 + (mf.m2 / 6) * (mg.m2 / 6) / 6
    assert mq.m4 == pytest.approx(120 * c, abs=1e-8)


def test_phi_map_maxwellian_reservoir(iso):
    M = charfn_maxwellian(1 / 3)
    assert np.max(np.abs(phi_map(M, M, iso, 0.5).values - M.values)) < 1e-11


def test_grid_mismatch(iso):
    with pytest.raises(ShapeError):
        gain(charfn_maxwellian(0.3), charfn_maxwellian(0.3, n=1024), iso)


@given(st.integers(0, 2**32 - 1))
def test_gain_keeps_charfn_properties(iso, seed):
    w, T = unit_energy_mixture(np.random.default_rng(seed))
    f = charfn_mixture(w, T)
    q = gain(f, f, iso)
    assert q.values[0] == 1.0
    assert np.max(np.abs(q.values)) <= 1.0 + 1e-12
    # collisions conserve energy
    assert moments(q).m2 == pytest.approx(1.0, abs=1e-9)


def test_inverse_transform_maxwellian():
    T = 1 / 3
    f = inverse_transform(charfn_maxwellian(T), v_max=6.0)
    assert f.mass() == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(f.values - maxwellian_density(f.v, T))) < 1e-12
    assert f.moment(2) == pytest.approx(3 * T, rel=1e-9)


def test_inverse_transform_mixture():
    f = inverse_transform(charfn_mixture([0.5, 0.5], [0.2, 7 / 15]), v_max=8.0)
    ref = density_mixture([0.5, 0.5], [0.2, 7 / 15], 8.0)
    assert np.max(np.abs(f.values - ref.values)) < 1e-9


def test_inverse_transform_truncation():
    with pytest.raises(TruncationError):
        inverse_transform(charfn_maxwellian(0.001), v_max=1.0)
    with pytest.raises(TruncationError):
        # speed grid far too short to hold the mass
        inverse_transform(charfn_maxwellian(1.0), v_max=1.0)


def test_density_helpers():
    f = density_maxwellian(0.5, 8.0)
    assert f.mass() == pytest.approx(1.0, abs=1e-10)
    assert f.moment(2) == pytest.approx(1.5, rel=1e-9)
    assert f.moment(4) == pytest.approx(15 * 0.25, rel=1e-8)
    assert f.at(9.0) == 0.0
    with pytest.raises(DomainError):
        RadialDensity(1.0, -np.ones(10))
