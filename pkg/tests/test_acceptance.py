"""One test per acceptance criterion, each at its stated tolerance."""
import math
import time

import numpy as np
import pytest

from ising_probe.bath import BathContext, SpectralDensity
from ising_probe.estimation import (OptimumStatus, SensingRun, fisher, fisher_numeric, high_beta_approx,
                                    optimize)
from ising_probe.flux import VARIANTS, flux_scenario, relative_error
from ising_probe.geometry import ClusterGeometry, Distance, ProbeSpec
from ising_probe.quadrature import xi_quadrature_oracle
from ising_probe.rates import Regime, average_rate, boundary_rate_term, occupation, xi
from ising_probe.redfield import oracle_checks, oracle_report
from ising_probe.sweep import read_csv, run_figure

A = 1e-3
SPECTRA = {"ohmic": 1.0, "white": 0.0, "one_over_f": -1.0}
SPECTRA_K = {"a": 1.0, "b": 0.0, "c": -1.0}


def run_for(n=2, j=0.0, beta=1.0, k=1.0, t=1.0, clusters=1, alpha=0.0):
    return SensingRun(ProbeSpec(n * clusters, clusters), ClusterGeometry(n, alpha, j),
                      BathContext(beta, SpectralDensity(A, k)), t)


def test_flux_qubit_examples(criterion):
    start = time.perf_counter()
    errors = {name: relative_error(flux_scenario(name)) for name in VARIANTS}
    elapsed = time.perf_counter() - start
    ok = all(e <= 0.10 for e in errors.values()) and elapsed < 1.0
    detail = ", ".join(f"{k} {v:.1%}" for k, v in errors.items()) + f"; {elapsed:.3f} s"
    assert criterion(1, "flux-qubit S_max within 10%, < 1 s", ok, detail)


def test_quadrature_oracle_matrix(criterion):
    start = time.perf_counter()
    worst = 0.0
    points = 0
    for j in (0.0, -5.0, 5.0):
        for k in SPECTRA.values():
            for beta in (1.0, 5.0):
                bath = BathContext(beta, SpectralDensity(A, k))
                closed, regime = xi(j, 1.0, bath)
                assert regime in (Regime.WEAK, Regime.STRONG_ANTIFERRO, Regime.STRONG_FERRO)
                quad = xi_quadrature_oracle(j, 1.0, bath).value
                worst = max(worst, abs(quad / closed - 1))
                points += 1
    elapsed = time.perf_counter() - start
    ok = points >= 12 and worst <= 1e-2 and elapsed < 60
    assert criterion(2, "closed form vs quadrature within 1%, < 1 min", ok,
                     f"{points} points, worst {worst:.2e}, {elapsed:.1f} s")


REDFIELD_CASES = [
    # (n, J, distance, beta, k, amplitude, delta_omega)
    (2, 5.0, Distance.LITERAL, 1.0, 1.0, A, 0.0),
    (2, 0.0, Distance.LITERAL, 1.0, 0.0, 1e-2, 0.2),
    (2, -5.0, Distance.LITERAL, 1.0, 1.0, A, 0.0),
    (2, 3.0, Distance.LITERAL, 2.0, -1.0, A, 0.0),
    (3, 0.2, Distance.CIRCULAR, 1.0, 1.0, A, 0.0),
    (3, 2.0, Distance.CIRCULAR, 1.0, 0.0, A, 0.0),
    (3, -2.0, Distance.CIRCULAR, 2.0, -1.0, A, 0.0),
]


def test_redfield_oracle(criterion):
    start = time.perf_counter()
    regimes = set()
    worst = {"secular_rate": 0.0, "secular_p": 0.0, "nonsecular_rate": 0.0}
    failures = []
    for n, j, dist, beta, k, amp, delta in REDFIELD_CASES:
        geom = ClusterGeometry(n, 0.0, j, dist)
        bath = BathContext(beta, SpectralDensity(amp, k))
        report = oracle_report(geom, 1.0, bath, delta_omega=delta)
        regimes.add(average_rate(geom, 1.0 + delta, bath).regime)
        for c in oracle_checks(report):
            if c.enforced:
                if c.name in worst:
                    worst[c.name] = max(worst[c.name], c.value)
                if not c.passed:
                    failures.append(f"{c.name} n={n} J={j}: {c.value:.2e}")
    elapsed = time.perf_counter() - start
    covered = {Regime.WEAK, Regime.STRONG_FERRO, Regime.STRONG_ANTIFERRO} <= regimes
    ok = not failures and covered and len(REDFIELD_CASES) >= 6 and elapsed < 300
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f"; {elapsed:.0f} s"
    if failures:
        detail += "; " + "; ".join(failures)
    assert criterion(3, "Redfield decay 0.5% secular / 5% non-secular, p within 1e-3", ok, detail)


def test_zero_temperature_limits(criterion):
    checks = []
    for k in SPECTRA.values():
        weak = run_for(j=0.5, beta=math.inf, k=k)
        gm = weak.rates().spins[0].gamma_minus
        checks.append(optimize(weak).s_max == 2 / (math.e * gm))
        af = run_for(j=-5.0, beta=math.inf, k=k)
        s = af.rates().spins[0]
        checks.append(math.isclose(optimize(af).s_max, 2 / (math.e * (s.gamma_minus + s.gamma_plus)), rel_tol=1e-15))
        fm = optimize(run_for(j=5.0, beta=math.inf, k=k))
        checks.append(fm.status is OptimumStatus.UNBOUNDED and math.isinf(fm.s_max))
    assert criterion(4, "zero-temperature limits N/(e g-), N/(e(g- + g+)), unbounded", all(checks),
                     f"{sum(checks)}/{len(checks)} exact")


def test_high_beta_approximation(criterion):
    betas = np.linspace(0.76, 15, 60)  # hbar beta (J - omega) > 3 throughout
    ratios = np.array([optimize(run_for(j=5.0, beta=b)).s_max / high_beta_approx(run_for(j=5.0, beta=b)).value
                       for b in betas])
    # exact n(x) = 1/(e^x - 1) exceeds e^-x, so the ratio approaches 1 from below; 1e-14 absorbs rounding
    monotone = np.all(np.diff(ratios) >= -1e-14) and np.all(ratios <= 1 + 1e-14)
    at5 = optimize(run_for(j=5.0, beta=5.0)).s_max / high_beta_approx(run_for(j=5.0, beta=5.0)).value
    ok = monotone and abs(ratios[-1] - 1) < 1e-12 and abs(at5 - 1) <= 0.02
    assert criterion(5, "high-beta ratio rises monotonically to 1; within 2% at beta = 5", ok,
                     f"ratio {ratios[0]:.4f} -> {ratios[-1]:.12f}, at beta=5 {at5:.10f}")


def test_boundary_behaviour(criterion):
    beta = 1.0
    ohmic = run_for(j=1.0, beta=beta, k=1.0)
    gamma = ohmic.rates().gamma
    expected = 2 * math.pi * A / beta + 2 * math.pi * A * 2.0 * occupation(beta, 2.0)
    ohmic_ok = math.isfinite(gamma) and abs(gamma / expected - 1) <= 1e-9
    zeros = [optimize(run_for(j=1.0, beta=beta, k=k)) for k in (0.0, -1.0)]
    sub_ok = all(o.s_max == 0 and o.regime is Regime.BOUNDARY for o in zeros)
    super_ok = boundary_rate_term(SpectralDensity(A, 2.0), beta) == 0.0
    assert criterion(6, "boundary: Ohmic finite to 1e-9, sub-Ohmic S_max = 0, k = 2 term 0",
                     ohmic_ok and sub_ok and super_ok, f"Ohmic rel dev {abs(gamma / expected - 1):.1e}")


def test_cluster_scaling(criterion):
    beta, j = 10.0, 1.0
    sizes = np.arange(8, 21)
    log_s = [math.log(optimize(run_for(n=int(n), j=j, beta=beta)).s_max) for n in sizes]
    slope = np.polyfit(sizes, log_s, 1)[0]
    ok = abs(slope / (beta * j) - 1) <= 0.03
    assert criterion(7, "log S_max vs cluster size slope = hbar beta J within 3%", ok,
                     f"slope {slope:.4f} vs {beta * j}")


def test_fisher_consistency(criterion):
    rng = np.random.default_rng(7)
    worst = 0.0
    count = 0
    while count < 20:
        n = int(rng.integers(1, 6))
        j = float(rng.uniform(-8, 8))
        beta = float(rng.uniform(0.2, 5))
        k = float(rng.choice([-1.0, 0.0, 1.0]))
        run = run_for(n=n, j=j, beta=beta, k=k)
        g = run.rates().gamma
        if not (math.isfinite(g) and g > 0):
            continue
        run = run.at(t=float(rng.uniform(0.05, 3)) / (n * g))
        worst = max(worst, abs(fisher_numeric(run) / fisher(run) - 1))
        count += 1
    assert criterion(8, "finite-difference Fisher vs closed form within 1e-4", worst <= 1e-4,
                     f"20 points, worst {worst:.1e}")


def _column(text, name):
    return np.array([float(r[name]) if r[name] not in ("", "inf") else math.inf for r in read_csv(text)])


def test_figure_shapes(criterion):
    props = {}
    for letter in "abc":
        files = run_figure(f"fig2{letter}")
        beta = _column(files[f"fig2{letter}_strong_fm.csv"], "beta")
        fm = _column(files[f"fig2{letter}_strong_fm.csv"], "S_max")
        weak = _column(files[f"fig2{letter}_weak.csv"], "S_max")
        af = _column(files[f"fig2{letter}_strong_afm.csv"], "S_max")
        k = SPECTRA_K[letter]
        # gaps: 1 for the uncoupled pair, 6 and 4 for J = -5
        weak_limit = 2 / (math.e * 2 * math.pi * A)
        af_limit = 2 / (math.e * 2 * math.pi * A * (6.0 ** k + 4.0 ** k))
        props[f"fig2{letter} strong-FM increasing"] = bool(np.all(np.diff(fm) > 0))
        props[f"fig2{letter} weak plateau"] = bool(np.all(np.abs(weak[-2:] / weak_limit - 1) <= 1e-3))
        props[f"fig2{letter} AF plateau"] = bool(np.all(np.abs(af[-2:] / af_limit - 1) <= 1e-3))
        props[f"fig2{letter} FM beats weak for beta >= 1"] = bool(np.all(fm[beta >= 1] > weak[beta >= 1]))

    for letter in "def":
        files = run_figure(f"fig2{letter}")
        for curve, text in files.items():
            rows = read_csv(text)
            boundary = [r for r in rows if r["regime"] == "boundary"]
            s = _column(text, "S_max")
            coupling = _column(text, "coupling")
            if letter == "d":
                props[f"{curve} boundary finite"] = len(boundary) == 1 and 0 < float(boundary[0]["S_max"]) < math.inf
                props[f"{curve} non-decreasing in coupling"] = bool(np.all(np.diff(s) >= 0))
            else:
                props[f"{curve} boundary dips to 0"] = len(boundary) == 1 and boundary[0]["S_max"] == "0"
                better = coupling[s > s[0]]
                # advantage over the uncoupled probe only above a critical coupling
                props[f"{curve} advantage above a threshold"] = bool(
                    len(better) > 0 and np.all(s[coupling >= better.min()] > s[0]) and better.min() > 1.0)

    files = run_figure("fig3a")
    n_nn = _column(files["fig3a_alpha_inf.csv"], "cluster_size")
    nn = _column(files["fig3a_alpha_inf.csv"], "collective_coupling")
    full = _column(files["fig3a_alpha_0.csv"], "collective_coupling")
    dip = _column(files["fig3a_alpha_3.csv"], "collective_coupling")
    props["fig3a nearest-neighbour saturates at 2J"] = bool(np.allclose(nn[n_nn >= 3], 10.0))
    props["fig3a all-to-all equals (n-1)J"] = bool(np.allclose(full, (n_nn - 1) * 5.0))
    props["fig3a alpha=3 between the two"] = bool(np.all((dip >= nn - 1e-12) & (dip <= full + 1e-12)))

    files = run_figure("fig1e")
    s_fm = _column(files["fig1e_strong_fm.csv"], "S")
    s_weak = _column(files["fig1e_weak.csv"], "S")
    props["fig1e strong-FM above weak at every t"] = bool(np.all(s_fm > s_weak))

    failed = [k for k, v in props.items() if not v]
    assert criterion(9, "figure-shape properties", not failed,
                     f"{len(props) - len(failed)}/{len(props)} hold" + (f"; failed: {failed}" if failed else ""))

