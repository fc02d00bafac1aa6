import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pwlab.core import GridSpec, ParticleModel, WaveFunction
from pwlab.errors import NodeProximity, OutOfSpan
from pwlab.guidance import IntegratorOptions, integrate_ensemble, integrate_guidance
from pwlab.potentials import Free
from pwlab.schrodinger import EvolutionRecord, evolve, free_gaussian_velocity, free_gaussian_width, plane_wave


def test_free_gaussian_spreading_law(free_record, unit_mass):
    # X(t) = x0 * sigma(t) / sigma(0)
    opts = IntegratorOptions(dt=1e-3)
    for x0 in (-1.5, 0.3, 2.0):
        tr = integrate_guidance(free_record, unit_mass, [x0], opts)
        exact = x0 * free_gaussian_width(1.0, 1.0, tr.times) / 1.0
        assert np.abs(tr.points[:, 0] - exact).max() < 1e-5


def test_moving_packet_velocity_matches_closed_form(moving_record, unit_mass):
    tr = integrate_guidance(moving_record, unit_mass, [-1.0], IntegratorOptions(store_velocities=True))
    vel = free_gaussian_velocity(tr.points[:, 0], -2.0, 1.5, 1.0, 1.0, tr.times)
    err = np.abs(tr.velocities[:, 0] - vel)
    # exact at snapshot times; linear blending in time costs O(spacing^2) in between
    assert err[::10].max() < 1e-8
    assert err.max() < 1e-4


def test_ground_state_is_at_rest():
    from pwlab.potentials import Harmonic
    from pwlab.schrodinger import harmonic_ground_state

    g = GridSpec((128,), (-8.0,), (8.0,))
    m = ParticleModel((1.0,))
    v = Harmonic((1.0,))
    rec = evolve(harmonic_ground_state(g, v, m), v, m, 0.5, 1e-4, 100)
    trajs = integrate_ensemble(rec, m, [[-1.0], [0.2], [1.7]], IntegratorOptions(dt=0.01))
    for tr in trajs:
        assert np.abs(tr.points - tr.points[0]).max() < 1e-8


def test_plane_wave_uniform_drift():
    g = GridSpec((64,), (0.0,), (10.0,))
    m = ParticleModel((2.0,))
    rec = evolve(plane_wave(g, [3]), Free(), m, 0.5, 1e-2, 1)
    tr = integrate_guidance(rec, m, [1.0], IntegratorOptions(dt=1e-2))
    k = 2 * np.pi * 3 / 10.0
    np.testing.assert_allclose(tr.points[:, 0], 1.0 + k / 2.0 * tr.times, atol=1e-12)


@settings(max_examples=10, deadline=None)
@given(a=st.floats(-3, 3), gap=st.floats(1e-3, 2.0))
def test_no_crossing_in_1d(moving_record, unit_mass, a, gap):
    trajs = integrate_ensemble(moving_record, unit_mass, [[a], [a + gap]], IntegratorOptions(dt=1e-2))
    n = min(len(t.times) for t in trajs)
    assert np.all(trajs[0].points[:n, 0] < trajs[1].points[:n, 0])


def test_results_in_input_order_with_workers(moving_record, unit_mass):
    starts = np.linspace(-3, 2, 9)[:, None]
    serial = integrate_ensemble(moving_record, unit_mass, starts, IntegratorOptions(dt=1e-2))
    threaded = integrate_ensemble(moving_record, unit_mass, starts, IntegratorOptions(dt=1e-2, workers=3))
    for a, b in zip(serial, threaded):
        np.testing.assert_array_equal(a.points, b.points)
    np.testing.assert_array_equal([t.points[0, 0] for t in threaded], starts[:, 0])


def _standing_wave_record():
    g = GridSpec((64,), (0.0,), (2 * np.pi,))
    m = ParticleModel((1.0,))
    psi = WaveFunction(g, np.sin(g.axis(0)) + 0j)
    return evolve(psi, Free(), m, 0.1, 1e-2, 1), m


def test_node_start_fails_alone():
    rec, m = _standing_wave_record()
    opts = IntegratorOptions(dt=1e-2, node_floor=1e-8)
    trajs = integrate_ensemble(rec, m, [[1.0], [np.pi + 1e-3], [2.0]], opts)
    assert trajs[0].ok and trajs[2].ok
    assert isinstance(trajs[1].error, NodeProximity)
    with pytest.raises(NodeProximity):
        integrate_guidance(rec, m, [np.pi + 1e-3], opts)


def test_span_and_step_checks(free_record, unit_mass):
    with pytest.raises(OutOfSpan):
        integrate_guidance(free_record, unit_mass, [0.0], IntegratorOptions(t_final=2.0))
    with pytest.raises(ValueError):
        integrate_guidance(free_record, unit_mass, [0.0], IntegratorOptions(dt=0.05))
    with pytest.raises(ValueError):
        integrate_ensemble(free_record, unit_mass, [[50.0]])
