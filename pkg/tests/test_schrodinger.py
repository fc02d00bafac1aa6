import numpy as np
import pytest

from pwlab.core import GridSpec, ParticleModel, WaveFunction
from pwlab.errors import PacketTruncated
from pwlab.potentials import Free, GaussianBarrier, Harmonic
from pwlab.schrodinger import (SplitStepPropagator, analytic_free_gaussian, evolve, expected_energy, gaussian_packet,
                               harmonic_coherent_state, harmonic_ground_energy, harmonic_ground_state, plane_wave,
                               plane_wave_momentum, step_splitstep)


def _phase_aligned_error(a: np.ndarray, b: np.ndarray) -> float:
    """Max |a - e^{i phi} b| with the best global phase phi."""
    phi = np.angle(np.vdot(b, a))
    return float(np.abs(a - np.exp(1j * phi) * b).max())


def test_free_gaussian_matches_analytic(grid1d, unit_mass):
    psi0 = gaussian_packet(grid1d, [-1.0], [1.0], [1.0])
    rec = evolve(psi0, Free(), unit_mass, 1.0, 1e-3, 100)
    exact = analytic_free_gaussian(grid1d, [-1.0], [1.0], [1.0], [1.0], 1.0)
    assert np.abs(rec.snapshots[-1].amplitudes - exact.amplitudes).max() < 1e-8


def test_norm_conserved_per_step_with_barrier(grid1d, unit_mass):
    psi = gaussian_packet(grid1d, [-3.0], [2.0], [0.7])
    prop = SplitStepPropagator(grid1d, GaussianBarrier(5.0, 0.5, (0.0,)), unit_mass, 1e-3)
    for _ in range(50):
        psi = prop.step(psi)
        assert abs(psi.norm() - 1) < 1e-12


def test_plane_wave_is_stationary_in_density():
    g = GridSpec((64,), (0.0,), (8.0,))
    m = ParticleModel((1.0,))
    psi = plane_wave(g, [2])
    out = step_splitstep(psi, Free(), m, 0.05)
    k = plane_wave_momentum(g, [2])[0]
    np.testing.assert_allclose(out.amplitudes, psi.amplitudes * np.exp(-0.5j * k**2 * 0.05), atol=1e-13)


def test_ground_state_energy_and_stationarity():
    g = GridSpec((256,), (-10.0,), (10.0,))
    m = ParticleModel((1.0,))
    v = Harmonic((1.0,))
    psi0 = harmonic_ground_state(g, v, m)
    assert expected_energy(psi0, v, m) == pytest.approx(harmonic_ground_energy(v, m), abs=1e-10)
    rec = evolve(psi0, v, m, 1.0, 1e-3, 1000)
    rho0, rho1 = np.abs(psi0.amplitudes) ** 2, np.abs(rec.snapshots[-1].amplitudes) ** 2
    assert np.abs(rho1 - rho0).max() < 1e-6


def test_energy_drift_small_in_harmonic_well():
    g = GridSpec((256,), (-10.0,), (10.0,))
    m = ParticleModel((1.0,))
    v = Harmonic((1.0,))
    psi0 = harmonic_coherent_state(g, v, m, [1.5], [0.5], 0.0)
    rec = evolve(psi0, v, m, 2.0, 1e-3, 200)
    e = [expected_energy(s, v, m) for s in rec.snapshots]
    assert max(abs(x - e[0]) for x in e) < 1e-6


def test_convergence_order_against_coherent_state():
    # the free propagator is exact in time, so the order is measured in a well
    g = GridSpec((256,), (-10.0,), (10.0,))
    m = ParticleModel((1.0,))
    v = Harmonic((1.0,))
    psi0 = harmonic_coherent_state(g, v, m, [1.0], [0.5], 0.0)
    exact = harmonic_coherent_state(g, v, m, [1.0], [0.5], 1.0).amplitudes
    errs = []
    for dt in (0.02, 0.01, 0.005):
        out = evolve(psi0, v, m, 1.0, dt, 10_000).snapshots[-1].amplitudes
        errs.append(_phase_aligned_error(out, exact))
    for coarse, fine in zip(errs, errs[1:]):
        assert 3.5 <= coarse / fine <= 4.5


def test_time_reversal_by_conjugation(grid1d, unit_mass):
    v = GaussianBarrier(2.0, 0.8, (1.0,))
    psi0 = gaussian_packet(grid1d, [-2.0], [1.0], [1.0])
    fwd = evolve(psi0, v, unit_mass, 1.0, 1e-3, 1000).snapshots[-1]
    back = evolve(WaveFunction(grid1d, np.conj(fwd.amplitudes), 0.0), v, unit_mass, 1.0, 1e-3, 1000).snapshots[-1]
    assert np.abs(np.conj(back.amplitudes) - psi0.amplitudes).max() < 1e-8


def test_record_layout(free_record):
    assert free_record.times[0] == 0.0 and free_record.t_end == pytest.approx(1.0)
    assert len(free_record.snapshots) == 101
    assert np.all(np.diff(free_record.times) > 0)
    man = free_record.manifest()
    assert man["scheme"] == "strang-2" and man["dt"] == 1e-3


def test_zero_span_and_bad_dt(grid1d, unit_mass):
    psi0 = gaussian_packet(grid1d, [0.0], [0.0], [1.0])
    assert len(evolve(psi0, Free(), unit_mass, 0.0).snapshots) == 1
    with pytest.raises(ValueError):
        evolve(psi0, Free(), unit_mass, 1.0, 0.3)
    with pytest.raises(ValueError):
        evolve(psi0, Free(), unit_mass, 1.0, -1e-3)


def test_truncated_packet_rejected(grid1d):
    with pytest.raises(PacketTruncated):
        gaussian_packet(grid1d, [19.0], [0.0], [1.0])
