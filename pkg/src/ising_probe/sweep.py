"""Parameter sweeps, figure presets and their CSV/JSON serialisation."""
from __future__ import annotations

import configparser
import csv
import enum
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .bath import BathContext, SpectralDensity
from .estimation import OptimumStatus, SensingRun, _optimum, high_beta_approx
from .geometry import ClusterGeometry, Distance, ProbeSpec, collective_coupling_uniform, unit_collective_coupling
from .rates import Regime
from .units import UnitSystem


class ConfigError(ValueError):
    pass


class Axis(enum.Enum):
    BETA = "beta"
    COLLECTIVE = "coupling"
    CLUSTER_SIZE = "cluster_size"
    TIME = "time"


DEFAULT_SPACING = {Axis.BETA: "log", Axis.COLLECTIVE: "log", Axis.CLUSTER_SIZE: "linear", Axis.TIME: "log"}


@dataclass(frozen=True)
class Grid:
    min: float
    max: float
    points: int
    spacing: str = "linear"

    def __post_init__(self):
        if self.points < 2:
            raise ConfigError("a grid needs at least 2 points")
        if not self.min < self.max:
            raise ConfigError("grid min must be below max")
        if self.spacing not in ("linear", "log"):
            raise ConfigError(f"unknown spacing {self.spacing!r}")
        if self.spacing == "log" and self.min <= 0:
            raise ConfigError("log spacing needs min > 0")

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.min, self.max, self.points)
        return np.linspace(self.min, self.max, self.points)


@dataclass(frozen=True)
class SweepConfig:
    """One swept axis plus every fixed parameter of the sensing run.

    ``coupling`` is the base pair coupling J, except on the collective
    coupling axis where the swept value is the collective coupling itself and
    J is derived from it.  Numbers are in natural units unless ``si`` is set,
    in which case frequencies are rad/s, times seconds and the bath is given
    by ``temperature`` in kelvin.
    """

    axis: Axis
    grid: Grid
    cluster_size: int = 2
    clusters: int = 1
    alpha: float = 0.0
    distance: Distance = Distance.LITERAL
    coupling: float = 0.0
    beta: float | None = 1.0
    temperature: float | None = None
    spectral_exponent: float = 1.0
    spectral_amplitude: float = 1e-3
    omega0: float = 1.0
    delta_omega: float = 0.0
    t: float = 1.0
    phi: float | None = None
    cpmg: bool = False
    si: bool = False
    output: str | None = None
    format: str = "csv"

    def __post_init__(self):
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown output format {self.format!r}")
        if (self.beta is None) == (self.temperature is None):
            raise ConfigError("give exactly one of beta or temperature")
        if self.axis is Axis.CLUSTER_SIZE and self.grid.min < 1:
            raise ConfigError("cluster sizes start at 1")

    @property
    def units(self) -> UnitSystem:
        return UnitSystem.si(self.omega0) if self.si else UnitSystem.natural()

    def bath(self, beta: float | None = None) -> BathContext:
        spectral = SpectralDensity(self.spectral_amplitude, self.spectral_exponent)
        if beta is not None:
            return BathContext(beta, spectral, self.units)
        if self.beta is not None:
            return BathContext(self.beta, spectral, self.units)
        return BathContext.from_temperature(self.temperature, spectral, self.units)

    def run_at(self, value: float) -> SensingRun:
        size, coupling, t, beta = self.cluster_size, self.coupling, self.t, None
        if self.axis is Axis.CLUSTER_SIZE:
            if value != round(value):
                raise ConfigError(f"cluster size {value} is not an integer")
            size = int(round(value))
        elif self.axis is Axis.COLLECTIVE:
            unit = unit_collective_coupling(size, self.alpha, self.distance)
            if unit == 0:
                raise ConfigError("a single-spin cluster has no collective coupling to sweep")
            coupling = value / unit
        elif self.axis is Axis.TIME:
            t = value
        elif self.axis is Axis.BETA:
            beta = value
        geom = ClusterGeometry(size, self.alpha, coupling, self.distance)
        probe = ProbeSpec(size * self.clusters, self.clusters, self.omega0, self.delta_omega)
        return SensingRun(probe, geom, self.bath(beta), t, self.phi, self.cpmg)


def format_number(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.8e}"


def columns(axis: Axis) -> list[str]:
    cols = [axis.value, "collective_coupling", "regime", "Gamma", "S_max", "t_opt", "S_max_high_beta_approx"]
    if axis is Axis.TIME:
        cols.append("S")
    return cols


def evaluate_point(config: SweepConfig, value: float) -> dict[str, str]:
    """One output row, already formatted."""
    run = config.run_at(value)
    bundle = run.rates()
    opt = _optimum(run, bundle)
    row = {
        config.axis.value: format_number(value),
        "collective_coupling": format_number(collective_coupling_uniform(run.geom)),
        "regime": "mixed" if bundle.regime is None else bundle.regime.value,
        "Gamma": format_number(bundle.gamma),
    }
    if opt.status is OptimumStatus.DIVERGED:
        row["S_max"], row["t_opt"] = "0", "0"
    else:
        row["S_max"], row["t_opt"] = format_number(opt.s_max), format_number(opt.t_opt)
    if all(r is Regime.STRONG_FERRO for r in bundle.regimes):
        row["S_max_high_beta_approx"] = format_number(high_beta_approx(run, bundle).value)
    else:
        row["S_max_high_beta_approx"] = ""
    if config.axis is Axis.TIME:
        n = run.cluster_size
        if math.isinf(bundle.gamma):
            s = 0.0
        else:
            s = run.signal_factor * run.probe.n_spins * n * value * math.exp(-n * bundle.gamma * value)
        row["S"] = format_number(s)
    return row


def _evaluate(args):
    return evaluate_point(*args)


def run_sweep(config: SweepConfig, workers: int = 1) -> list[dict[str, str]]:
    """Evaluate every grid point; rows come back in grid order."""
    jobs = [(config, float(v)) for v in config.grid.values()]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_evaluate, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [_evaluate(j) for j in jobs]


def rows_to_csv(rows: list[dict[str, str]], cols: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _json_value(text: str):
    if text == "":
        return None
    if text in ("inf", "-inf"):
        return text
    try:
        return float(text)
    except ValueError:
        return text


def rows_to_json(rows: list[dict[str, str]]) -> str:
    return json.dumps([{k: _json_value(v) for k, v in r.items()} for r in rows], indent=2) + "\n"


def serialize(rows, cols, fmt: str) -> str:
    return rows_to_json(rows) if fmt == "json" else rows_to_csv(rows, cols)


def write_output(text: str, path: str | Path | None):
    if path is None:
        return
    Path(path).write_text(text)


def read_csv(text: str) -> list[dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))


# Config documents: a single [sweep] section of "key = value unit" lines.

FREQ_UNITS = {"w0": False, "rad_s": True}
TIME_UNITS = {"1/w0": False, "s": True}
BETA_UNITS = {"1/w0": False, "1/J": True}
TEMPERATURE_UNITS = {"K": True}

DIMENSIONAL = {
    "coupling": FREQ_UNITS,
    "omega0": FREQ_UNITS,
    "delta_omega": FREQ_UNITS,
    "spectral_amplitude": FREQ_UNITS,
    "t": TIME_UNITS,
    "beta": BETA_UNITS,
    "temperature": TEMPERATURE_UNITS,
}
AXIS_UNITS = {Axis.BETA: BETA_UNITS, Axis.COLLECTIVE: FREQ_UNITS, Axis.TIME: TIME_UNITS, Axis.CLUSTER_SIZE: None}


def _split_unit(key: str, text: str, table) -> tuple[float, bool]:
    parts = text.split()
    if len(parts) != 2:
        raise ConfigError(f"{key}: expected '<number> <unit>', got {text!r}")
    number, unit = parts
    if unit not in table:
        raise ConfigError(f"{key}: unit {unit!r} not one of {sorted(table)}")
    try:
        return float(number), table[unit]
    except ValueError:
        raise ConfigError(f"{key}: {number!r} is not a number") from None


def _bool(key, text):
    low = text.strip().lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def parse_config(text: str) -> SweepConfig:
    """Parse a config document; mixing natural and SI units is an error."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    if "sweep" not in parser:
        raise ConfigError("config needs a [sweep] section")
    sec = dict(parser["sweep"])
    known = {f.name for f in fields(SweepConfig)} | {"min", "max", "points", "spacing"}
    unknown = set(sec) - known
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")
    try:
        axis = Axis(sec.pop("axis"))
    except (KeyError, ValueError):
        raise ConfigError("axis must be one of " + ", ".join(a.value for a in Axis)) from None

    systems = set()
    kwargs = {}
    grid_table = AXIS_UNITS[axis]
    bounds = []
    for key in ("min", "max"):
        if key not in sec:
            raise ConfigError(f"missing grid {key}")
        raw = sec.pop(key)
        if grid_table is None:
            bounds.append(float(raw))
        else:
            value, is_si = _split_unit(key, raw, grid_table)
            systems.add(is_si)
            bounds.append(value)
    if "points" not in sec:
        raise ConfigError("missing grid points")
    grid = Grid(bounds[0], bounds[1], int(sec.pop("points")), sec.pop("spacing", DEFAULT_SPACING[axis]))

    for key, raw in sec.items():
        if key in DIMENSIONAL:
            if raw.strip().lower() == "none":
                kwargs[key] = None
                continue
            value, is_si = _split_unit(key, raw, DIMENSIONAL[key])
            systems.add(is_si)
            kwargs[key] = value
        elif key in ("cluster_size", "clusters"):
            kwargs[key] = int(raw)
        elif key in ("alpha", "spectral_exponent"):
            kwargs[key] = float(raw)
        elif key == "phi":
            kwargs[key] = None if raw.strip().lower() == "none" else _split_unit(key, raw, {"rad": None})[0]
        elif key in ("cpmg", "si"):
            kwargs[key] = _bool(key, raw)
        elif key == "distance":
            kwargs[key] = Distance(raw.strip())
        elif key == "output":
            kwargs[key] = None if raw.strip().lower() == "none" else raw.strip()
        elif key == "format":
            kwargs[key] = raw.strip()
    if len(systems) > 1:
        raise ConfigError("config mixes natural-unit and SI quantities")
    si = systems.pop() if systems else kwargs.get("si", False)
    if "si" in kwargs and kwargs["si"] != si:
        raise ConfigError("si flag disagrees with the unit suffixes")
    kwargs["si"] = si
    if "temperature" in kwargs and "beta" not in kwargs:
        kwargs["beta"] = None
    return SweepConfig(axis=axis, grid=grid, **kwargs)


def dump_config(config: SweepConfig) -> str:
    """Config document that parses back to an identical SweepConfig."""
    si = config.si
    freq = "rad_s" if si else "w0"
    time = "s" if si else "1/w0"
    beta = "1/J" if si else "1/w0"
    axis_unit = {Axis.BETA: beta, Axis.COLLECTIVE: freq, Axis.TIME: time, Axis.CLUSTER_SIZE: None}[config.axis]

    def with_unit(v, unit):
        return repr(float(v)) if unit is None else f"{float(v)!r} {unit}"

    lines = [
        "[sweep]",
        f"axis = {config.axis.value}",
        f"min = {with_unit(config.grid.min, axis_unit)}",
        f"max = {with_unit(config.grid.max, axis_unit)}",
        f"points = {config.grid.points}",
        f"spacing = {config.grid.spacing}",
        f"cluster_size = {config.cluster_size}",
        f"clusters = {config.clusters}",
        f"alpha = {float(config.alpha)!r}",
        f"distance = {config.distance.value}",
        f"coupling = {with_unit(config.coupling, freq)}",
        f"beta = {'none' if config.beta is None else with_unit(config.beta, beta)}",
    ]
    if config.temperature is not None:
        lines.append(f"temperature = {with_unit(config.temperature, 'K')}")
    lines += [
        f"spectral_exponent = {float(config.spectral_exponent)!r}",
        f"spectral_amplitude = {with_unit(config.spectral_amplitude, freq)}",
        f"omega0 = {with_unit(config.omega0, freq)}",
        f"delta_omega = {with_unit(config.delta_omega, freq)}",
        f"t = {with_unit(config.t, time)}",
        f"phi = {'none' if config.phi is None else with_unit(config.phi, 'rad')}",
        f"cpmg = {str(config.cpmg).lower()}",
        f"si = {str(si).lower()}",
        f"output = {config.output if config.output else 'none'}",
        f"format = {config.format}",
    ]
    return "\n".join(lines) + "\n"


# Figure presets.  Grid ranges, the ring coupling of fig3* and the beta
# values of fig2d-f are free choices; the remaining parameters are fixed.

OHMIC = (1.0, 1e-3)
WHITE = (0.0, 1e-3)
ONE_OVER_F = (-1.0, 1e-3)
SPECTRA = {"a": OHMIC, "b": WHITE, "c": ONE_OVER_F, "d": OHMIC, "e": WHITE, "f": ONE_OVER_F}


@dataclass(frozen=True)
class FigurePreset:
    name: str
    caption: str
    curves: dict = field(default_factory=dict)  # curve name -> SweepConfig


def _base(axis, grid, spectral, **kw) -> SweepConfig:
    k, a = spectral
    return SweepConfig(axis=axis, grid=grid, spectral_exponent=k, spectral_amplitude=a, **kw)


def _fig1e() -> FigurePreset:
    grid = Grid(0.1, 1e4, 200, "log")
    curves = {name: _base(Axis.TIME, grid, OHMIC, coupling=j, beta=1.0)
              for name, j in (("weak", 0.0), ("strong_fm", 5.0))}
    return FigurePreset("fig1e", "J = 5 w0, beta = 1/(hbar w0), f = 0.001 Omega; S(t) for N = 2", curves)


def _fig2_beta(letter) -> FigurePreset:
    grid = Grid(0.1, 10.0, 100, "log")
    curves = {name: _base(Axis.BETA, grid, SPECTRA[letter], coupling=j)
              for name, j in (("weak", 0.0), ("strong_fm", 5.0), ("strong_afm", -5.0))}
    return FigurePreset(f"fig2{letter}", "S_max vs beta for J = 0, +5, -5 w0", curves)


def _fig2_coupling(letter) -> FigurePreset:
    grid = Grid(0.0, 10.0, 201, "linear")
    curves = {f"beta_{b:g}": _base(Axis.COLLECTIVE, grid, SPECTRA[letter], beta=b) for b in (1.0, 10.0)}
    return FigurePreset(f"fig2{letter}", "S_max vs collective coupling", curves)


def _fig3(letter) -> FigurePreset:
    spectral = WHITE if letter == "c" else OHMIC
    grid = Grid(2, 10, 9, "linear")
    curves = {name: _base(Axis.CLUSTER_SIZE, grid, spectral, alpha=a, coupling=5.0, beta=10.0,
                          distance=Distance.CIRCULAR)
              for name, a in (("alpha_inf", math.inf), ("alpha_3", 3.0), ("alpha_0", 0.0))}
    return FigurePreset(f"fig3{letter}", "beta = 10/(hbar w0); ring of n spins, J = 5 w0", curves)


def figure_presets() -> dict[str, FigurePreset]:
    presets = [_fig1e()]
    presets += [_fig2_beta(c) for c in "abc"]
    presets += [_fig2_coupling(c) for c in "def"]
    presets += [_fig3(c) for c in "abc"]
    return {p.name: p for p in presets}


def run_figure(name: str, out_dir: str | Path | None = None, fmt: str = "csv",
               workers: int = 1) -> dict[str, str]:
    """Evaluate every curve of a preset; returns {file name: contents}."""
    presets = figure_presets()
    key = name.lower()
    if key not in presets:
        raise KeyError(f"unknown figure preset {name!r}; choose from {sorted(presets)}")
    preset = presets[key]
    files = {}
    for curve, config in preset.curves.items():
        rows = run_sweep(config, workers)
        suffix = "json" if fmt == "json" else "csv"
        fname = f"{preset.name}_{curve}.{suffix}"
        files[fname] = serialize(rows, columns(config.axis), fmt)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for fname, text in files.items():
            (out / fname).write_text(text)
    return files
