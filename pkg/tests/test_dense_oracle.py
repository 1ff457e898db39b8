import json
import math

import numpy as np
import pytest

from tests.conftest import random_hamiltonian
from zulf_engine.core.gqsp_planner import plan_from_tau
from zulf_engine.core.sample_schedule import SimulationBudget, schedule
from zulf_engine.core.spin_hamiltonian import PauliTerm, SpinHamiltonian
from zulf_engine.data import tables
from zulf_engine.errors import DomainError, OracleCapError
from zulf_engine.oracle.dense_oracle import (CorrelationTrace, block_encoding_matrices, correlator,
                                             dense_matrix, density_matrix, evolve, fit_lorentzian,
                                             gqsp_crosscheck, observable_diagonal, pauli_string,
                                             prepare_unitary, sample_basis_states, spectrum,
                                             verify_block_encoding)


def test_site_zero_is_the_leftmost_factor():
    z0 = pauli_string(2, [(0, "Z")]).toarray()
    np.testing.assert_allclose(np.diag(z0).real, [1, 1, -1, -1])
    np.testing.assert_allclose(observable_diagonal(SpinHamiltonian(2, ()), "sz"), [1, 0, 0, -1])


def test_hc_pair_spectrum_peaks_at_j(hc_pair):
    times = np.linspace(0.0, 1.0, 400)
    trace = correlator(hc_pair, "uniform", "mz", times)
    assert not trace.is_flat()
    spec = spectrum(trace, gamma2=1.0)
    peaks = spec.peaks()
    positive = peaks[peaks["frequency_hz"] > 10.0]
    assert abs(positive["frequency_hz"].iloc[0] - 140.0) <= spec.bin_width
    assert spec.to_frame().shape[1] == 2


def test_total_sz_is_conserved_for_methane(methane_proton):
    sched = schedule(methane_proton, SimulationBudget(n_points=50))
    trace = correlator(methane_proton, "uniform", "sz", sched.timepoints)
    assert trace.is_flat(1e-10)
    assert trace.values[0].real == pytest.approx(1.0)
    assert list(trace.to_frame().columns) == ["t", "re", "im"]


def test_spectrum_needs_four_samples(hc_pair):
    trace = correlator(hc_pair, "uniform", "mz", [0.0, 0.1, 0.2])
    with pytest.raises(DomainError):
        spectrum(trace, 1.0)


def test_log_spaced_trace_is_resampled(methane_hetero):
    sched = schedule(methane_hetero, SimulationBudget(n_points=64))
    spec = spectrum(correlator(methane_hetero, "uniform", "mz", sched.timepoints), 1.0)
    steps = np.diff(spec.frequencies)
    np.testing.assert_allclose(steps, steps[0])
    assert len(spec.frequencies) & (len(spec.frequencies) - 1) == 0


def test_linewidth_tracks_decay_rate(hc_pair):
    times = np.linspace(0.0, 20.0, 8001)
    trace = correlator(hc_pair, "uniform", "mz", times)
    widths = []
    for gamma2 in (1.0, 2.0):
        spec = spectrum(trace, gamma2)
        fit = fit_lorentzian(spec, 140.0)
        assert fit["center"] == pytest.approx(140.0, abs=0.05)
        assert fit["hwhm"] == pytest.approx(gamma2 / (2 * math.pi), rel=0.05)
        widths.append(fit["hwhm"])
    assert widths[1] / widths[0] == pytest.approx(2.0, rel=0.05)


def test_unknown_observable_and_missing_gammas(random_h):
    h = random_h(np.random.default_rng(1), 3, 5)
    with pytest.raises(DomainError):
        correlator(h, "uniform", "mz", [0.0])
    with pytest.raises(DomainError):
        correlator(h, "uniform", "mx", [0.0])
    with pytest.raises(DomainError):
        density_matrix(h, "ground")


def test_dense_cap():
    with pytest.raises(OracleCapError) as err:
        dense_matrix(SpinHamiltonian(15, ()))
    assert err.value.cap == 14


def test_evolution_is_unitary_and_conserves_energy(random_h):
    rng = np.random.default_rng(3)
    h = random_h(rng, 4, 10)
    psi0 = rng.normal(size=16) + 1j * rng.normal(size=16)
    psi0 /= np.linalg.norm(psi0)
    states = evolve(h, psi0, np.linspace(0, 2.0, 9))
    np.testing.assert_allclose(np.linalg.norm(states, axis=1), 1.0, atol=1e-12)
    mat = dense_matrix(h)
    energies = np.einsum("ti,ij,tj->t", states.conj(), mat, states).real
    np.testing.assert_allclose(energies, energies[0], atol=1e-9)


def test_energy_shift_leaves_correlator_unchanged(hc_pair):
    shifted = SpinHamiltonian(2, hc_pair.terms + (PauliTerm((), 7.3),), hc_pair.sites)
    times = np.linspace(0, 0.05, 11)
    a = correlator(hc_pair, "uniform", "mz", times).values
    b = correlator(shifted, "uniform", "mz", times).values
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_initial_states(methane_hetero):
    for rho0 in ("uniform", "thermal-z", "basis"):
        rho = density_matrix(methane_hetero, rho0)
        assert np.trace(rho).real == pytest.approx(1.0)
        np.testing.assert_allclose(rho, rho.conj().T)
    with pytest.raises(DomainError):
        density_matrix(methane_hetero, "basis", states=[])


def test_thermal_start_differs_from_uniform(hc_pair):
    times = np.linspace(0, 0.02, 5)
    uniform = correlator(hc_pair, "uniform", "mz", times).values
    thermal = correlator(hc_pair, "thermal-z", "mz", times, beta=0.5).values
    assert np.max(np.abs(uniform - thermal)) > 1e-6


@pytest.mark.parametrize("n,expected", [(4, 5), (6, 22), (10, 100)])
def test_basis_state_sample(n, expected):
    states = sample_basis_states(n)
    assert len(states) == expected
    assert len(set(states.tolist())) == expected
    assert all(2 * bin(int(s)).count("1") < n for s in states)
    np.testing.assert_array_equal(states, sample_basis_states(n))


def test_prepare_unitary_first_column():
    coeffs = np.array([0.5, -1.5, 2.0])
    u = prepare_unitary(coeffs, 4)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-12)
    np.testing.assert_allclose(u[:, 0], np.sqrt(np.r_[np.abs(coeffs) / 4.0, 0.0]), atol=1e-12)


def test_block_encoding_for_fixture(hc_pair):
    report = verify_block_encoding(hc_pair)
    assert report.selection_qubits == 2
    assert report.passed


def test_block_encoding_on_random_hamiltonians():
    rng = np.random.default_rng(11)
    for _ in range(50):
        n = int(rng.integers(2, 6))
        limit = min(32, 3 * n + 9 * n * (n - 1) // 2)
        h = random_hamiltonian(rng, n, int(rng.integers(1, limit + 1)))
        report = verify_block_encoding(h)
        assert report.passed, report


def test_block_encoding_walk_is_unitary(random_h):
    h = random_h(np.random.default_rng(5), 3, 7)
    u_h, walk, m = block_encoding_matrices(h)
    assert m == 3
    np.testing.assert_allclose(walk.conj().T @ walk, np.eye(walk.shape[0]), atol=1e-12)
    np.testing.assert_allclose(u_h, u_h.conj().T, atol=1e-12)


def test_block_encoding_caps():
    with pytest.raises(OracleCapError):
        block_encoding_matrices(SpinHamiltonian(7, (PauliTerm(((0, "Z"),), 1.0),)))
    with pytest.raises(OracleCapError):
        block_encoding_matrices(SpinHamiltonian(2, ()))


def test_gqsp_polynomial_matches_evolution_on_the_spectrum(hc_pair):
    eps = 1e-3
    plan = plan_from_tau(2 * math.pi * hc_pair.alpha * 0.01, eps)
    assert gqsp_crosscheck(hc_pair, plan) <= eps


def test_flat_trace_detection():
    trace = CorrelationTrace(np.arange(4.0), np.full(4, 0.25 + 0j), "sz")
    assert trace.is_flat()


def test_magnetization_weights_follow_the_gyromagnetic_table(hc_pair, tmp_path, monkeypatch):
    base = observable_diagonal(hc_pair, "mz")
    ratios = tables.gyromagnetic_ratios()
    ratios["1H"] = dict(ratios["1H"], gamma=2 * ratios["1H"]["gamma"])
    (tmp_path / "gyromagnetic_ratios.json").write_text(json.dumps(ratios))
    monkeypatch.setenv("ZULF_CONFIG_PATH", str(tmp_path))
    np.testing.assert_allclose(observable_diagonal(hc_pair, "mz"), base / 2)
