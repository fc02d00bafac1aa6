import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pwlab.core import DensityField, GridSpec, ParticleModel, density
from pwlab.equivariance import (EnsembleState, coefficient_uniqueness_experiment, continuity_residual,
                                equilibrium_ensemble, ks_distance, marginal_cdf, transport_ensemble)
from pwlab.errors import DegenerateEnsemble, OutOfSpan
from pwlab.guidance import IntegratorOptions
from pwlab.potentials import Free, Harmonic
from pwlab.schrodinger import evolve, gaussian_packet, harmonic_ground_state, plane_wave

OPTS = IntegratorOptions(dt=1e-2)


@pytest.fixture(scope="module")
def ground_record():
    g = GridSpec((128,), (-8.0,), (8.0,))
    m = ParticleModel((1.0,))
    v = Harmonic((1.0,))
    return evolve(harmonic_ground_state(g, v, m), v, m, 0.5, 1e-4, 100), m


def test_ensemble_state_validation():
    with pytest.raises(ValueError):
        EnsembleState(np.empty((0, 1)))
    with pytest.raises(ValueError):
        EnsembleState(np.zeros((2, 1)), [0.5, 0.6])
    assert EnsembleState(np.zeros((4, 1))).weight_array().sum() == pytest.approx(1.0)


def test_stationary_state_residual(ground_record):
    rec, m = ground_record
    assert continuity_residual(rec, m, 2) < 1e-6


def test_residual_small_and_mass_sensitive(moving_record, unit_mass):
    k = len(moving_record.snapshots) // 2
    good = continuity_residual(moving_record, unit_mass, k)
    wrong = continuity_residual(moving_record, unit_mass.scaled(2.0), k)
    assert good < 1e-4
    assert wrong / good > 1e2


def test_residual_needs_neighbours(free_record, unit_mass):
    with pytest.raises(OutOfSpan):
        continuity_residual(free_record, unit_mass, 0)
    with pytest.raises(OutOfSpan):
        continuity_residual(free_record, unit_mass, len(free_record.snapshots) - 1)


def test_residual_field_marks_valid_nodes(free_record, unit_mass):
    value, field = continuity_residual(free_record, unit_mass, 5, return_field=True)
    assert field.shape == free_record.grid.shape
    assert np.isfinite(value)


def test_marginal_cdf_is_monotone(grid1d):
    edges, cdf = marginal_cdf(density(gaussian_packet(grid1d, [0.0], [0.0], [1.0])), 0)
    assert np.all(np.diff(cdf) >= 0) and cdf[0] == pytest.approx(0.0) and cdf[-1] == pytest.approx(1.0)


def test_ks_of_exact_quantiles_is_small(grid1d):
    rho = density(gaussian_packet(grid1d, [0.0], [0.0], [1.0]))
    edges, cdf = marginal_cdf(rho, 0)
    q = np.interp((np.arange(2000) + 0.5) / 2000, cdf, edges)
    assert ks_distance(q[:, None], rho)[0] < 2e-3


def test_equilibrium_transport(moving_record, unit_mass):
    n = 3000
    ens = equilibrium_ensemble(moving_record.snapshots[0], n, 5)
    res = transport_ensemble(moving_record, unit_mass, ens, OPTS)
    ks = ks_distance(res.points, density(moving_record.snapshots[-1]), res.weights)
    assert ks.max() < 3 / math.sqrt(n) + 0.01
    assert math.fsum(res.weights) + res.dropped_weight == pytest.approx(1.0, abs=1e-12)


def test_cluster_stays_out_of_equilibrium(moving_record, unit_mass):
    rng = np.random.default_rng(1)
    ens = EnsembleState(-2.0 + 0.05 * (rng.random((500, 1)) - 0.5))
    res = transport_ensemble(moving_record, unit_mass, ens, OPTS)
    assert ks_distance(res.points, density(moving_record.snapshots[-1])).max() > 0.2


def test_plane_wave_single_point():
    g = GridSpec((64,), (0.0,), (10.0,))
    m = ParticleModel((1.0,))
    rec = evolve(plane_wave(g, [2]), Free(), m, 1.0, 1e-2, 1)
    res = transport_ensemble(rec, m, EnsembleState([[3.0]]), OPTS)
    assert res.points[0, 0] == pytest.approx(3.0 + 2 * np.pi * 2 / 10.0, abs=1e-12)


@settings(max_examples=10, deadline=None)
@given(w=st.lists(st.floats(0.01, 1.0), min_size=4, max_size=4))
def test_weight_conservation_with_drops(w):
    g = GridSpec((64,), (0.0,), (2 * np.pi,))
    m = ParticleModel((1.0,))
    from pwlab.core import WaveFunction

    rec = evolve(WaveFunction(g, np.sin(g.axis(0)) + 0.3j * np.sin(2 * g.axis(0))), Free(), m, 0.1, 1e-2, 1)
    weights = np.array(w) / math.fsum(w)
    pts = [[1.0], [2.0], [4.0], [5.0]]
    res = transport_ensemble(rec, m, EnsembleState(pts, weights), IntegratorOptions(dt=1e-2, node_floor=1e-8))
    assert math.fsum(res.weights) + res.dropped_weight == pytest.approx(1.0, abs=1e-12)
    assert len(res.kept) + len(res.dropped) == 4


def test_too_much_dropped_weight_raises():
    g = GridSpec((64,), (0.0,), (2 * np.pi,))
    m = ParticleModel((1.0,))
    from pwlab.core import WaveFunction

    rec = evolve(WaveFunction(g, np.sin(g.axis(0)) + 0j), Free(), m, 0.1, 1e-2, 1)
    with pytest.raises(DegenerateEnsemble) as info:
        transport_ensemble(rec, m, EnsembleState([[1.0], [np.pi + 1e-3]]), IntegratorOptions(dt=1e-2, node_floor=1e-8))
    assert info.value.dropped_weight == pytest.approx(0.5)


def test_wrong_mass_breaks_equivariance(moving_record, unit_mass):
    rep = coefficient_uniqueness_experiment(moving_record, unit_mass, 2.0, 3000, 2, OPTS)
    assert rep["ks_control_max"] < 3 / math.sqrt(3000) + 0.01
    assert rep["ratio"] > 5


def test_stationary_state_cannot_detect_mass(ground_record):
    rec, m = ground_record
    rep = coefficient_uniqueness_experiment(rec, m, 2.0, 2000, 3, OPTS)
    assert rep["ks_wrong_max"] == pytest.approx(rep["ks_control_max"], abs=1e-6)


def test_mass_scale_one_rejected(free_record, unit_mass):
    with pytest.raises(ValueError):
        coefficient_uniqueness_experiment(free_record, unit_mass, 1.0, 10, 0)
