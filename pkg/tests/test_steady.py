import numpy as np
import pytest

from nesslab import steady
from nesslab.errors import ContractionViolationError, DomainError
from nesslab.kernel import contraction_factor
from nesslab.metrics import gtw_distance, moments
from nesslab.spectral import charfn_maxwellian, charfn_mixture, phi_map
from nesslab.steady import a_priori_bound, iterations_needed, solve_ness

# fourth moment of the NESS for b = 1, gamma = 1/2 and the default mixture:
# c = c_R/3 + 1/108 with c = m4/120, c_R = 7.5 (0.2^2 + (7/15)^2)/120
M4_NESS = 120 * (7.5 * (0.04 + (7 / 15) ** 2) / 120 / 3 + 1 / 108)


def test_analytic_fourth_moment(ness):
    m = moments(ness.phi_inf)
    assert m.m2 == pytest.approx(1.0, abs=1e-10)
    assert m.m4 == pytest.approx(M4_NESS, abs=1e-8)
    assert M4_NESS == pytest.approx(79 / 45, abs=1e-14)


def test_iteration_count_matches_bound(iso, reservoir):
    rep = solve_ness(reservoir, iso, 0.5, tol=1e-10)
    assert rep.converged
    assert rep.iterations == iterations_needed(0.75, rep.history[0], 1e-10)
    assert rep.certified_error <= 1e-10
    assert rep.residual <= rep.certified_error


def test_ratios_below_contraction_factor(ness):
    assert ness.ratios and max(ness.ratios) <= 0.75 + 1e-6
    assert ness.history[0] > 0


def test_start_independence(iso, reservoir, ness):
    start = charfn_mixture([0.25, 0.75], [0.1, (1 / 3 - 0.025) / 0.75])
    other = solve_ness(reservoir, iso, 0.5, tol=1e-12, start=start)
    assert gtw_distance(other.phi_inf, ness.phi_inf) < 1e-11
    with pytest.raises(DomainError, match="start"):
        solve_ness(reservoir, iso, 0.5, start=charfn_mixture([0.25, 0.75], [0.1, 0.4]))


def test_maxwellian_reservoir_one_iteration(iso):
    R = charfn_maxwellian(1 / 3)
    rep = solve_ness(R, iso, 0.5)
    assert rep.iterations == 1 and rep.residual <= 1e-8
    assert gtw_distance(rep.phi_inf, R) <= 1e-8


def test_linear_kernel_ness(linear_half, reservoir):
    rep = solve_ness(reservoir, linear_half, 0.6, tol=1e-10)
    lam = contraction_factor(linear_half, 0.6)
    assert max(rep.ratios) <= lam + 1e-6
    assert moments(rep.phi_inf).m2 == pytest.approx(1.0, abs=1e-9)
    # the fixed point is a fixed point
    assert gtw_distance(phi_map(rep.phi_inf, reservoir, linear_half, 0.6), rep.phi_inf) < 1e-10


def test_a_priori_bound_contract():
    assert a_priori_bound(0.5, 1.0, 3) == pytest.approx(0.125 / 0.5)
    for lam in (0.0, 1.0, 1.2):
        with pytest.raises(DomainError):
            a_priori_bound(lam, 1.0, 1)


def test_rejects_reservoir_without_unit_energy(iso):
    with pytest.raises(DomainError):
        solve_ness(charfn_maxwellian(0.5), iso, 0.5)
    with pytest.raises(DomainError):
        solve_ness(charfn_maxwellian(1 / 3), iso, 0.5, tol=0.0)


def test_violation_is_detected(iso, reservoir, monkeypatch):
    # pretend the map contracts far faster than it does
    monkeypatch.setattr(steady, "contraction_factor", lambda k, g: 0.3)
    with pytest.raises(ContractionViolationError):
        solve_ness(reservoir, iso, 0.5)


def test_budget_exhaustion_flags_unconverged(iso, reservoir):
    rep = solve_ness(reservoir, iso, 0.5, tol=1e-12, max_iter=5)
    assert not rep.converged and rep.iterations == 5
    s = rep.summary()
    assert set(s) >= {"iterations", "certified_error", "m2", "m4"}
    assert np.isfinite(s["fixed_point_residual"])
