import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from nesslab.dsmc import (
    MixtureCollision,
    OUReservoirs,
    ParticleEnsemble,
    apply_collisions,
    collide_step,
    draw_collisions,
    ou_step,
    post_collision,
    reduce_ou_reservoirs,
    replica_seeds,
    replica_stats,
    run_coupled,
    run_dsmc,
    run_replicas,
    sample_initial,
)
from nesslab.errors import ConfigError, DomainError
from nesslab.metrics import radial_w2

vec = arrays(np.float64, 3, elements=st.floats(-10, 10))


@given(vec, vec, vec)
def test_post_collision_conserves_momentum_and_energy(v, w, direction):
    n = np.linalg.norm(direction)
    sigma = direction / n if n > 1e-3 else np.array([0.0, 0.0, 1.0])
    a, b = post_collision(v, w, sigma)
    assert np.allclose(a + b, v + w, atol=1e-12)
    assert np.dot(a, a) + np.dot(b, b) == pytest.approx(np.dot(v, v) + np.dot(w, w), rel=1e-12, abs=1e-12)


def test_post_collision_rejects_non_unit_sigma():
    with pytest.raises(DomainError):
        post_collision(np.zeros(3), np.ones(3), np.array([1.0, 1.0, 0.0]))


def test_reduce_ou_reservoirs():
    assert reduce_ou_reservoirs([(1, 0.2), (1, 0.6)]) == pytest.approx((2.0, 0.4))
    assert OUReservoirs(((3.0, 1.0), (1.0, 0.2))).effective == pytest.approx((4.0, 0.8))
    with pytest.raises(ConfigError):
        reduce_ou_reservoirs([])
    with pytest.raises(ConfigError):
        reduce_ou_reservoirs([(1.0, -0.2)])


def test_internal_collisions_conserve_totals(iso):
    rng = np.random.default_rng(5)
    vel = sample_initial({"kind": "mixture", "weights": [0.4, 0.6], "temps": [0.1, 1.0]}, 10_001, rng)
    p0, e0 = vel.sum(axis=0), np.sum(vel * vel)
    for _ in range(20):
        apply_collisions(vel, draw_collisions(vel.shape[0], iso, rng, 0.05, 0.0))
    assert np.allclose(vel.sum(axis=0), p0, atol=1e-9)
    assert np.sum(vel * vel) == pytest.approx(e0, rel=1e-12)


def test_each_particle_collides_at_most_once(iso):
    rng = np.random.default_rng(6)
    n = 2001
    d = draw_collisions(n, iso, rng, 0.05, 0.5, (0.5, 0.5), (0.2, 7 / 15))
    touched = np.concatenate([d.pairs_a, d.pairs_b, d.res_idx])
    assert np.unique(touched).size == touched.size
    # event counts are Binomial(n, dt) overall
    counts = [draw_collisions(n, iso, rng, 0.05, 0.5).res_idx.size for _ in range(400)]
    assert np.mean(counts) == pytest.approx(n * 0.05 * 0.5, rel=0.05)


def test_reservoir_only_dynamics_keep_matching_maxwellian(iso):
    # gamma = 1 and R = M_{1/3}: a Maxwellian at the same temperature is stationary
    rng = np.random.default_rng(7)
    ens = ParticleEnsemble(np.sqrt(1 / 3) * rng.standard_normal((50_000, 3)), rng)
    res = MixtureCollision((1.0,), (1 / 3,), 1.0)
    for _ in range(100):
        collide_step(ens, iso, res, 0.05)
    _, m2, m4 = ens.observables()
    assert m2 == pytest.approx(1.0, abs=0.02)
    assert m4 == pytest.approx(15 / 9, abs=0.06)
    assert ens.time == pytest.approx(5.0)


def test_collide_step_dt_limit(iso):
    rng = np.random.default_rng(0)
    ens = ParticleEnsemble(rng.standard_normal((10, 3)), rng)
    with pytest.raises(ConfigError):
        collide_step(ens, iso, MixtureCollision((1.0,), (1 / 3,), 0.5), 0.1)


def test_ensemble_validation():
    rng = np.random.default_rng(0)
    with pytest.raises(DomainError):
        ParticleEnsemble(np.zeros((4, 2)), rng)
    with pytest.raises(DomainError):
        ParticleEnsemble(np.full((4, 3), np.nan), rng)


def test_ou_step_is_exact_in_distribution():
    rng = np.random.default_rng(8)
    ens = ParticleEnsemble(np.zeros((200_000, 3)), rng)
    ou_step(ens, 2.0, 0.4, 0.3)
    # from rest, the law after t is centred Gaussian with variance T (1 - e^{-2 eta t})
    var = 0.4 * (1 - np.exp(-1.2))
    assert ens.velocities.var() == pytest.approx(var, rel=0.01)


def test_sample_initial_laws():
    rng = np.random.default_rng(9)
    v = sample_initial({"kind": "maxwellian", "T": 0.5, "shift": [1.0, 0, 0]}, 100_000, rng)
    assert v.mean(axis=0) == pytest.approx([1.0, 0, 0], abs=0.01)
    s = sample_initial({"kind": "shell", "energy": 2.0}, 100, rng)
    assert np.allclose(np.sum(s * s, axis=1), 2.0)
    with pytest.raises(ConfigError):
        sample_initial({"kind": "cube"}, 10, rng)
    with pytest.raises(ConfigError):
        sample_initial({"kind": "maxwellian", "T": 0.5, "colour": 1}, 10, rng)


SMALL = {"n_particles": 4000, "t_end": 2.0, "record_every": 10}


def test_run_is_deterministic():
    a, b = run_dsmc({**SMALL, "seed": 11}), run_dsmc({**SMALL, "seed": 11})
    assert np.array_equal(a.m2, b.m2) and np.array_equal(a.mean_velocity, b.mean_velocity)
    c = run_dsmc({**SMALL, "seed": 12})
    assert not np.array_equal(a.m2, c.m2)


def test_unknown_run_keys():
    with pytest.raises(ConfigError):
        run_dsmc({"particles": 10})
    with pytest.raises(ConfigError):
        run_dsmc({"dt": 0.1})


def test_replicas_independent_of_worker_count():
    seeds = replica_seeds(3, 4)
    assert len(set(seeds)) == 4
    serial = run_replicas({**SMALL, "seed": 3}, replicas=2, workers=1)
    pooled = run_replicas({**SMALL, "seed": 3}, replicas=2, workers=2)
    for a, b in zip(serial, pooled):
        assert np.array_equal(a.m2, b.m2)
    mean, se = replica_stats([1.0, 2.0, 3.0])
    assert mean == 2.0 and se == pytest.approx(1 / np.sqrt(3))


def test_momentum_relaxes_at_reservoir_rate():
    run = run_dsmc({"n_particles": 50_000, "t_end": 8.0, "record_every": 10, "seed": 2,
                    "init": {"kind": "maxwellian", "T": 1 / 3, "shift": [1.0, 0.0, 0.0]}})
    slope = np.polyfit(run.times, np.log(run.mean_velocity[:, 0]), 1)[0]
    assert -slope == pytest.approx(0.25, rel=0.05)


def test_collisions_do_not_expand_w2():
    # two coupled ensembles under internal collisions only: W2 must not grow
    cfg = {"n_particles": 20_000, "t_end": 3.0, "record_every": 50, "seed": 4, "snapshot_times": [0.0, 3.0],
           "reservoir": {"kind": "mixture", "weights": [1.0], "temps": [1 / 3], "gamma": 0.0},
           "init": {"kind": "maxwellian", "T": 1.0}}
    a, b = run_coupled(cfg, {"kind": "shell", "energy": 3.0})
    w0 = radial_w2(a.snapshots[0.0], b.snapshots[0.0])
    w1 = radial_w2(a.snapshots[3.0], b.snapshots[3.0])
    assert w1 <= w0 * 1.02


def test_ou_energy_gap():
    cfg = {"n_particles": 20_000, "dt": 0.01, "t_end": 0.5, "record_every": 10, "seed": 5,
           "reservoir": {"kind": "ou", "pairs": [[1.0, 0.2], [1.0, 0.6]], "collisions": False},
           "init": {"kind": "maxwellian", "T": 1.0}}
    run = run_dsmc(cfg)
    gap = run.m2 - 1.2
    assert gap / gap[0] == pytest.approx(np.exp(-4.0 * run.times), abs=0.02)
