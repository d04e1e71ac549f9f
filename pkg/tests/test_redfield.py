import math

import numpy as np
import pytest
from scipy.linalg import expm

from ising_probe.bath import BathContext, SpectralDensity
from ising_probe.geometry import ClusterGeometry, Distance, coupling_matrix
from ising_probe.rates import average_rate, occupation
from ising_probe.redfield import (DivergedError, StateInvariantError, build_generator, check_density_matrix,
                                  evolve, expectation_lambda, fit_decay, ghz_state, measure_povm,
                                  oracle_checks, oracle_report, spin_energies)

OHMIC = SpectralDensity.ohmic(1e-3)
RNG = np.random.default_rng(20240611)


def random_density(d, rng=RNG):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def random_hermitian(d, rng=RNG):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return a + a.conj().T


class TestStates:
    def test_single_spin_is_plus_state(self):
        assert np.allclose(ghz_state(1), 0.5)

    def test_pair(self):
        rho = ghz_state(2)
        nz = np.argwhere(np.abs(rho) > 0)
        assert {tuple(x) for x in nz} == {(0, 0), (0, 3), (3, 0), (3, 3)}
        assert np.allclose(rho[np.abs(rho) > 0], 0.5)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_pure_with_four_entries(self, n):
        rho = ghz_state(n)
        assert np.trace(rho @ rho).real == pytest.approx(1.0)
        assert np.count_nonzero(rho) == 4
        assert np.allclose(rho[rho != 0], 0.5)

    def test_size_cap(self):
        with pytest.raises(ValueError):
            ghz_state(5)


class TestMeasurement:
    def test_ghz_at_zero_bias(self):
        assert measure_povm(ghz_state(3), 0.0) == pytest.approx(1.0)
        assert expectation_lambda(ghz_state(3)) == pytest.approx(0.5)

    @pytest.mark.parametrize("phi", [0.0, 0.7, 2.0])
    def test_maximally_mixed(self, phi):
        assert measure_povm(np.eye(8) / 8, phi) == pytest.approx(0.5)

    def test_corrupt_state(self):
        bad = 3 * ghz_state(2)
        with pytest.raises(StateInvariantError):
            measure_povm(bad, 0.0)


class TestHamiltonian:
    @pytest.mark.parametrize("geom", [ClusterGeometry(3, 0, 2.0), ClusterGeometry(4, 1.0, -1.5, Distance.CIRCULAR)])
    def test_flip_gaps(self, geom):
        omega = 1.0
        e = spin_energies(coupling_matrix(geom), omega)
        n = geom.size
        rows = coupling_matrix(geom).sum(axis=1)
        for i in range(n):
            flipped = 1 << (n - 1 - i)
            # all-up is index 0, all-down is the last index
            assert e[flipped] - e[0] == pytest.approx(rows[i] - omega)
            assert e[(2 ** n - 1) ^ flipped] - e[-1] == pytest.approx(rows[i] + omega)


class TestGenerator:
    @pytest.mark.parametrize("secular", [True, False])
    @pytest.mark.parametrize("geom, beta, k", [
        (ClusterGeometry(2, 0, 5.0), 1.0, 1.0),
        (ClusterGeometry(3, 0, 0.4), 2.0, -1.0),
        (ClusterGeometry(3, 1.0, -2.0, Distance.CIRCULAR), 0.5, 0.0),
    ])
    def test_trace_and_hermiticity_preserving(self, geom, beta, k, secular):
        gen = build_generator(geom, 1.0, BathContext(beta, SpectralDensity(1e-3, k)), secular=secular)
        for _ in range(100):
            rho = random_hermitian(gen.dim)
            out = gen.apply(rho)
            assert abs(np.trace(out)) <= 1e-10
            assert np.max(np.abs(out.conj().T - gen.apply(rho.conj().T))) <= 1e-10

    def test_single_spin_amplitude_damping(self):
        beta = 1.3
        gen = build_generator(np.zeros((1, 1)), 1.0, BathContext(beta, OHMIC))
        g = 2 * math.pi * 1e-3 * 1.0
        n = occupation(beta, 1.0)
        up = np.diag([1.0, 0.0]).astype(complex)
        down = np.diag([0.0, 1.0]).astype(complex)
        assert np.allclose(gen.apply(up), np.diag([-g * (n + 1), g * (n + 1)]))
        assert np.allclose(gen.apply(down), np.diag([g * n, -g * n]))
        coh = np.array([[0, 0], [1, 0]], dtype=complex)
        # |down><up| rotates at omega (E_up - E_down = omega) and decays at gamma(2n+1)/2
        assert gen.apply(coh)[1, 0] == pytest.approx(-g * (2 * n + 1) / 2 + 1j * 1.0)

    def test_sub_ohmic_zero_gap_diverges(self):
        with pytest.raises(DivergedError):
            build_generator(ClusterGeometry(2, 0, 1.0), 1.0, BathContext(1.0, SpectralDensity.white()))

    def test_ohmic_zero_gap_is_finite(self):
        gen = build_generator(ClusterGeometry(2, 0, 1.0), 1.0, BathContext(1.0, OHMIC))
        assert np.all(np.isfinite(gen.matrix))

    def test_lamb_shift_option_keeps_trace(self):
        gen = build_generator(ClusterGeometry(2, 0, 3.0), 1.0, BathContext(1.0, OHMIC), lamb_shift=True)
        rho = random_density(4)
        assert abs(np.trace(gen.apply(rho))) <= 1e-10


class TestEvolve:
    def test_time_zero_returns_initial_state(self):
        gen = build_generator(ClusterGeometry(2, 0, 5.0), 1.0, BathContext(1.0, OHMIC))
        rho0 = random_density(4)
        out = evolve(rho0, gen, [0.0])
        assert np.array_equal(out[0], rho0)

    def test_closed_system_is_unitary(self):
        geom = ClusterGeometry(3, 0, 0.7)
        gen = build_generator(geom, 1.0, BathContext(1.0, SpectralDensity(0.0)))
        rho0 = random_density(8)
        times = np.linspace(0, 5, 11)
        out = evolve(rho0, gen, times)
        h = np.diag(gen.energies)
        for t, rho in zip(times, out):
            u = expm(-1j * h * t)
            assert np.allclose(rho, u @ rho0 @ u.conj().T, atol=1e-8)
        lam = [expectation_lambda(r) for r in evolve(ghz_state(3), gen, times)]
        phase = np.unwrap(np.angle(lam))
        assert np.allclose(-np.diff(phase) / np.diff(times), 3.0, rtol=1e-7)

    def test_zero_temperature_relaxes_to_all_down(self):
        b = BathContext(math.inf, OHMIC)
        gen = build_generator(ClusterGeometry(2, 0, 0.0), 1.0, b)
        out = evolve(ghz_state(2), gen, [0.0, 4000.0])
        assert out[-1][3, 3].real == pytest.approx(1.0, abs=1e-9)

    def test_ferro_zero_temperature_coherence_frozen(self):
        b = BathContext(math.inf, OHMIC)
        gen = build_generator(ClusterGeometry(2, 0, 5.0), 1.0, b)
        times = np.linspace(0, 10, 201)
        lam = np.abs([expectation_lambda(r) for r in evolve(ghz_state(2), gen, times)])
        assert np.max(np.abs(lam - 0.5)) < 1e-6

    def test_secular_states_stay_physical(self):
        gen = build_generator(ClusterGeometry(3, 0, -2.0), 1.0, BathContext(0.5, SpectralDensity(0.05, 0.0)))
        for rho in evolve(random_density(8), gen, np.linspace(0, 30, 31)):
            check_density_matrix(rho)

    def test_invariant_checks(self):
        with pytest.raises(StateInvariantError):
            check_density_matrix(np.diag([1.2, -0.2]))
        with pytest.raises(StateInvariantError):
            check_density_matrix(np.diag([0.6, 0.6]))
        with pytest.raises(StateInvariantError):
            check_density_matrix(np.array([[0.5, 0.1], [0.2, 0.5]]))


class TestReport:
    def test_pair_strong_ferro(self):
        b = BathContext(1.0, OHMIC)
        report = oracle_report(ClusterGeometry(2, 0, 5.0), 1.0, b, generators=(True,))
        s = report.summaries[True]
        assert s.rate_rel_dev < 5e-3
        assert s.expected_rate == pytest.approx(average_rate(ClusterGeometry(2, 0, 5.0), 1.0, b).gamma)
        assert all(c.passed for c in oracle_checks(report) if c.enforced)

    def test_ring_of_three(self):
        report = oracle_report(ClusterGeometry(3, 0, 2.0, Distance.CIRCULAR), 1.0, BathContext(1.0, OHMIC),
                               generators=(True,))
        assert report.summaries[True].rate_rel_dev < 5e-3

    def test_detuned_probability(self):
        b = BathContext(1.0, SpectralDensity(0.01))
        report = oracle_report(ClusterGeometry(2, 0, 0.0), 1.0, b, delta_omega=0.2, generators=(True,))
        assert report.summaries[True].max_p_abs_dev < 1e-3
        assert report.times[-1] == pytest.approx(3 / (2 * report.gamma))

    def test_no_bath_constant_coherence(self):
        report = oracle_report(ClusterGeometry(2, 0, 5.0), 1.0, BathContext(1.0, SpectralDensity(0.0)))
        for sec in (True, False):
            assert np.allclose(np.abs(report.lam[sec]), 0.5, atol=1e-9)
            assert report.summaries[sec].fitted_rate == pytest.approx(0.0, abs=1e-9)

    def test_rows(self):
        report = oracle_report(ClusterGeometry(2, 0, 5.0), 1.0, BathContext(1.0, OHMIC), points=50)
        rows = report.rows()
        assert len(rows) == len(report.times)
        assert set(rows[0]) == {"t", "abs_lambda_closed", "p_closed", "abs_lambda_secular", "p_secular",
                                "abs_lambda_nonsecular", "p_nonsecular"}


def test_fit_decay_recovers_rate():
    t = np.linspace(0, 10, 50)
    assert fit_decay(t, 0.5 * np.exp(-0.3 * t - 2j * t)) == pytest.approx(0.3)
