"""Command-line front end.

Subcommands: ``rates``, ``sweep``, ``figure <preset>``, ``scenario flux
<variant>`` and ``oracle``.  Exit codes: 0 success, 1 oracle tolerance
failure, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from .bath import BathContext, SpectralDensity
from .flux import VARIANTS, flux_scenario, relative_error
from .geometry import ClusterGeometry, Distance, spin_collective_couplings
from .quadrature import ConvergenceError, xi_quadrature_oracle
from .rates import Regime, average_rate
from .redfield import (MAX_SPINS, DivergedError, IntegrationError, StateInvariantError, oracle_checks,
                       oracle_report)
from .sweep import (DEFAULT_SPACING, Axis, ConfigError, Grid, SweepConfig, columns, dump_config,
                    figure_presets, format_number, parse_config, run_figure, run_sweep, serialize)
from .units import UnitSystem

EXIT_OK, EXIT_ORACLE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


class InputError(ValueError):
    pass


def _float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None


def _spectral(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected k,A")
    return _float(parts[0]), _float(parts[1])


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _emit(text: str, out: str | None):
    if out:
        try:
            Path(out).write_text(text)
        except OSError as exc:
            raise InputError(f"cannot write {out}: {exc}") from None
    else:
        sys.stdout.write(text)


def _common(parser: argparse.ArgumentParser):
    parser.add_argument("--json", action="store_true", help="machine-readable JSON output")
    parser.add_argument("--out", help="output file (directory for `figure`)")
    parser.add_argument("--si", action="store_true",
                        help="SI units: rad/s, seconds, kelvin; default is natural units of omega0")


def _physics(parser: argparse.ArgumentParser, defaults: bool = True):
    d = (lambda v: v) if defaults else (lambda v: None)
    parser.add_argument("--n-spins", type=int, default=d(2), help="spins per cluster")
    parser.add_argument("--alpha", type=_float, default=d(0.0), help="power-law exponent (inf: nearest neighbour)")
    parser.add_argument("--coupling", type=_float, default=d(0.0), help="pair coupling J")
    parser.add_argument("--beta", type=_float, default=None, help="inverse temperature (inf: zero temperature)")
    parser.add_argument("--temperature", type=_float, default=None, help="temperature (kelvin with --si)")
    parser.add_argument("--spectral", type=_spectral, default=d((1.0, 1e-3)), help="exponent,amplitude")
    parser.add_argument("--distance", choices=[m.value for m in Distance], default=d(Distance.LITERAL.value))
    parser.add_argument("--omega0", type=_float, default=None, help="spin frequency (required with --si)")
    parser.add_argument("--delta-omega", type=_float, default=d(0.0))


def _omega0(args) -> float:
    if args.omega0 is not None:
        return args.omega0
    if args.si:
        raise InputError("--omega0 is required with --si")
    return 1.0


def _bath(args, omega0: float) -> BathContext:
    units = UnitSystem.si(omega0) if args.si else UnitSystem.natural()
    spectral = SpectralDensity(args.spectral[1], args.spectral[0])
    if args.beta is not None and args.temperature is not None:
        raise InputError("give --beta or --temperature, not both")
    if args.temperature is not None:
        return BathContext.from_temperature(args.temperature, spectral, units)
    return BathContext(1.0 if args.beta is None else args.beta, spectral, units)


def _geometry(args) -> ClusterGeometry:
    return ClusterGeometry(args.n_spins, args.alpha, args.coupling, Distance(args.distance))


def cmd_rates(args) -> int:
    omega0 = _omega0(args)
    omega = omega0 + args.delta_omega
    if not omega > 0:
        raise InputError("omega0 + delta_omega must be positive")
    geom = _geometry(args)
    bundle = average_rate(geom, omega, _bath(args, omega0))
    regime = "mixed" if bundle.regime is None else bundle.regime.value
    spins = [
        {"spin": i + 1, "collective_coupling": s.collective, "regime": s.regime.value,
         "gamma_minus": s.gamma_minus, "gamma_plus": s.gamma_plus,
         "n_minus": s.n_minus, "n_plus": s.n_plus, "xi": s.xi}
        for i, s in enumerate(bundle.spins)
    ]
    if args.json:
        text = json.dumps(_jsonable({"spins": spins, "regime": regime, "Gamma": bundle.gamma}), indent=2) + "\n"
    else:
        keys = list(spins[0])
        lines = ["  ".join(f"{k:>16}" for k in keys)]
        for s in spins:
            cells = [f"{v:>16}" if isinstance(v, (int, str)) else f"{format_number(v):>16}" for v in s.values()]
            lines.append("  ".join(cells))
        lines.append(f"regime: {regime}")
        lines.append(f"Gamma: {format_number(bundle.gamma)}")
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return EXIT_OK


SWEEP_FIELDS = {
    "n_spins": "cluster_size", "clusters": "clusters", "alpha": "alpha", "coupling": "coupling",
    "omega0": "omega0", "delta_omega": "delta_omega", "t": "t", "phi": "phi",
}


def _sweep_config(args) -> SweepConfig:
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise InputError(f"cannot read {args.config}: {exc}") from None
        config = parse_config(text)
        if args.si and not config.si:
            raise InputError("--si conflicts with a natural-unit config")
    else:
        if args.axis is None or args.min is None or args.max is None:
            raise InputError("sweep needs --axis, --min and --max (or --config)")
        axis = Axis(args.axis)
        grid = Grid(args.min, args.max, args.points or 50, args.spacing or DEFAULT_SPACING[axis])
        if args.si and args.omega0 is None:
            raise InputError("--omega0 is required with --si")
        beta = None if args.temperature is not None else (1.0 if args.beta is None else args.beta)
        config = SweepConfig(axis=axis, grid=grid, si=args.si, beta=beta, temperature=args.temperature)

    changes = {}
    if args.config:
        grid_changes = {k: getattr(args, k) for k in ("min", "max", "points", "spacing") if getattr(args, k) is not None}
        if args.axis is not None and Axis(args.axis) is not config.axis:
            raise InputError("--axis conflicts with the config document")
        if grid_changes:
            changes["grid"] = replace(config.grid, **grid_changes)
        if args.beta is not None or args.temperature is not None:
            changes["beta"], changes["temperature"] = args.beta, args.temperature
    for flag, name in SWEEP_FIELDS.items():
        value = getattr(args, flag)
        if value is not None:
            changes[name] = value
    if args.spectral is not None:
        changes["spectral_exponent"], changes["spectral_amplitude"] = args.spectral
    if args.distance is not None:
        changes["distance"] = Distance(args.distance)
    if args.cpmg:
        changes["cpmg"] = True
    if args.json:
        changes["format"] = "json"
    if args.out and not args.dump_config:
        changes["output"] = args.out
    return replace(config, **changes)


def cmd_sweep(args) -> int:
    config = _sweep_config(args)
    if args.dump_config:
        _emit(dump_config(config), args.out)
        return EXIT_OK
    rows = run_sweep(config, args.workers)
    _emit(serialize(rows, columns(config.axis), config.format), config.output)
    return EXIT_OK


def cmd_figure(args) -> int:
    try:
        files = run_figure(args.preset, args.out or ".", "json" if args.json else "csv", args.workers)
    except KeyError as exc:
        raise InputError(exc.args[0]) from None
    for name in files:
        print(Path(args.out or ".") / name)
    return EXIT_OK


def cmd_scenario(args) -> int:
    report = flux_scenario(args.variant)
    info = report.as_dict()
    info["relative_error"] = relative_error(report)
    if args.json:
        text = json.dumps(_jsonable(info), indent=2) + "\n"
    else:
        width = max(len(k) for k in info)
        text = "".join(
            f"{k:<{width}}  {v if isinstance(v, (str, int)) else format_number(v)}\n" for k, v in info.items())
    _emit(text, args.out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    if not 1 <= args.n_spins <= MAX_SPINS:
        raise InputError(f"the oracle handles clusters of 1..{MAX_SPINS} spins")
    omega0 = _omega0(args)
    omega = omega0 + args.delta_omega
    geom = _geometry(args)
    bath = _bath(args, omega0)
    report = oracle_report(geom, omega0, bath, delta_omega=args.delta_omega, points=args.points)
    checks = [(c.name, c.value, c.tolerance, c.enforced, c.passed) for c in oracle_checks(report)]

    # quadrature cross-check of each distinct closed-form rate with open gaps
    from .rates import spin_rate
    for c in sorted({round(float(x), 12) for x in spin_collective_couplings(geom)}):
        sr = spin_rate(c, omega, bath)
        if sr.regime is Regime.BOUNDARY:
            continue
        quad = xi_quadrature_oracle(c, omega, bath).value
        dev = 0.0 if sr.xi == quad == 0 else abs(quad / sr.xi - 1) if sr.xi else math.inf
        checks.append((f"quadrature_xi[J={c:g}]", dev, 1e-2, True, dev <= 1e-2))

    rows = report.rows()
    cols = list(rows[0])
    formatted = [{k: format_number(float(v)) for k, v in r.items()} for r in rows]
    _emit(serialize(formatted, cols, "json" if args.json else "csv"), args.out)
    failed = False
    for name, value, tol, enforced, passed in checks:
        status = ("PASS" if passed else "FAIL") if enforced else "INFO"
        failed |= enforced and not passed
        print(f"{status} {name}: {value:.3e} (tolerance {tol:.1e})", file=sys.stderr)
    return EXIT_ORACLE if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ising-probe", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rates", help="per-spin decay rates and Gamma")
    _common(p)
    _physics(p)
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("sweep", help="sweep one axis and tabulate S_max")
    _common(p)
    _physics(p, defaults=False)
    p.add_argument("--config", help="config document with a [sweep] section")
    p.add_argument("--dump-config", action="store_true", help="print the resolved config document and exit")
    p.add_argument("--axis", choices=[a.value for a in Axis])
    p.add_argument("--min", type=_float)
    p.add_argument("--max", type=_float)
    p.add_argument("--points", type=int)
    p.add_argument("--spacing", choices=["linear", "log"])
    p.add_argument("--clusters", type=int)
    p.add_argument("--t", type=_float, help="sensing time (fixed unless sweeping time)")
    p.add_argument("--phi", type=_float, help="bias phase (default pi/2 - n omega0 t)")
    p.add_argument("--cpmg", action="store_true", help="apply the dynamical decoupling factor")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figure", help="regenerate the data of a figure preset")
    _common(p)
    p.add_argument("preset", help=", ".join(figure_presets()))
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("scenario", help="worked examples")
    scen = p.add_subparsers(dest="scenario", required=True)
    f = scen.add_parser("flux", help="superconducting flux qubits (SI units)")
    _common(f)
    f.add_argument("variant", choices=sorted(VARIANTS))
    f.set_defaults(func=cmd_scenario)

    p = sub.add_parser("oracle", help="Redfield and quadrature cross-checks of the closed form")
    _common(p)
    _physics(p)
    p.set_defaults(coupling=5.0)
    p.add_argument("--points", type=int, default=301, help="minimum number of time samples")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ConfigError, ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (IntegrationError, StateInvariantError, ConvergenceError, DivergedError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
