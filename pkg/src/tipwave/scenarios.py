"""Scenario configuration, dispatch, and CSV artifact emission.

Configs are flat ``key = value`` text ('#' starts a comment). A
``preset`` key expands a named bundle of values first; explicit keys
then override it. Initial profiles are polynomial coefficient lists in
ascending powers, evaluated exactly on the grid nodes.

Outputs per run directory:

    snapshots_<field>.csv    t,x,value         (every ``stride`` steps)
    energy_<field>_<tag>.csv t,E,tag           (every step)
    boundary_states.csv      t,eta,psi         (every step)
    spectrum_<family>.csv    n,seed_re,seed_im,refined_re,refined_im,residual
    summary.txt              fitted rates, abscissae, extrema, PASS/FAIL

Identical configs produce byte-identical artifacts.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .energy import EnergyTrace, NoFitError, fit_decay_rate
from .signals import DisturbanceSpec, eval_d, eval_f
from .systems import EsoLoop, ObserverLoop, SingleFieldLoop, boundary_ode_states
from ._kernels_py import (
    LEFT_DIRICHLET_ZERO,
    RIGHT_TIP_MASS,
)
from .wave_core import Grid, SystemParams

__all__ = ["ScenarioConfig", "ConfigError", "parse_config", "serialize_config",
           "run_scenario", "ScenarioResult", "PRESETS", "MODES"]

MODES = ("open_plant", "observer_loop", "eso_loop", "spectrum",
         "reproduce_sec4", "counterexample_sec3")

_EARLY_WINDOW = 2.0  # time units used as the "startup" reference for boundedness


class ConfigError(ValueError):
    """Carries every violation found while parsing a config."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass
class ScenarioConfig:
    mode: str = ""
    m: float = 5.0
    alpha: float = 2.0
    a: float = 2.0
    beta: float = 1.5
    gamma: float = 1.5
    n_cells: int = 100
    r: float = 0.5
    horizon: float = 40.0
    u0: tuple[float, ...] = (0.0,)
    ut0: tuple[float, ...] = (0.0,)
    v0: tuple[float, ...] = (0.0,)
    vt0: tuple[float, ...] = (0.0,)
    q0: tuple[float, ...] = (0.0,)
    qt0: tuple[float, ...] = (0.0,)
    uhat0: tuple[float, ...] = (0.0,)
    uhatt0: tuple[float, ...] = (0.0,)
    d_kind: str = "zero"
    d_amplitude: float = 1.0
    d_frequency: float = 2.0
    d_rate: float = 1.0
    d_constant: float = 1.0
    d_table: tuple[tuple[float, float], ...] = ()
    f_kind: str = "zero"
    f_gain: float = 1.0
    out_dir: str = "out"
    stride: int = 20
    family: str = "A"
    n_max: int = 100
    spectral_summary: bool = True
    threshold_plant_energy_ratio: float | None = None
    threshold_bounded_factor: float | None = None
    warnings: list[str] = field(default_factory=list, compare=False)

    def params(self) -> SystemParams:
        return SystemParams(m=self.m, alpha=self.alpha, a=self.a,
                            beta=self.beta, gamma=self.gamma)

    def grid(self) -> Grid:
        return Grid(n_cells=self.n_cells, r=self.r)

    def disturbance(self) -> DisturbanceSpec:
        return DisturbanceSpec(
            d_kind=self.d_kind, amplitude=self.d_amplitude,
            frequency=self.d_frequency, rate=self.d_rate,
            constant=self.d_constant, table=self.d_table,
            f_kind=self.f_kind, f_gain=self.f_gain)


# reference experiment: m=5, alpha=a=2, beta=gamma=1.5, dt=1/200,
# dx=1/100, cubic initial profiles, tip-sine uncertainty, cos(2t)
# disturbance.
PRESETS: dict[str, dict[str, str]] = {
    "reproduce_sec4": {
        "mode": "eso_loop", "m": "5", "alpha": "2", "a": "2",
        "beta": "1.5", "gamma": "1.5", "n_cells": "100", "r": "0.5",
        "horizon": "40", "u0": "0 0 -3 1", "ut0": "0", "v0": "0 0 0 -2",
        "vt0": "0", "q0": "0", "qt0": "0",
        "f_kind": "sin_of_tip", "d_kind": "cosine",
        "d_amplitude": "1", "d_frequency": "2", "stride": "20",
    },
    # stationary pair under a unit constant disturbance: the observer
    # loop holds it, demonstrating the loss of stabilization.
    "counterexample_sec3": {
        "mode": "observer_loop", "m": "5", "alpha": "2", "a": "2",
        "beta": "1.5", "gamma": "1.5", "n_cells": "100", "r": "0.5",
        "horizon": "20", "u0": "0 1", "ut0": "0",
        "uhat0": "-0.6666666666666666", "uhatt0": "0",
        "f_kind": "zero", "d_kind": "constant", "d_constant": "1",
        "stride": "20",
    },
}

_FLOAT_KEYS = ("m", "alpha", "a", "beta", "gamma", "r", "horizon",
               "d_amplitude", "d_frequency", "d_rate", "d_constant", "f_gain",
               "threshold_plant_energy_ratio", "threshold_bounded_factor")
_INT_KEYS = ("n_cells", "stride", "n_max")
_POLY_KEYS = ("u0", "ut0", "v0", "vt0", "q0", "qt0", "uhat0", "uhatt0")
_STR_KEYS = ("mode", "d_kind", "f_kind", "out_dir", "family")
_BOOL_KEYS = ("spectral_summary",)


def _parse_lines(text: str) -> list[tuple[str, str]]:
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError([f"line {lineno}: expected 'key = value', got {raw!r}"])
        key, value = line.split("=", 1)
        pairs.append((key.strip(), value.strip()))
    return pairs


def parse_config(text: str, overrides: list[str] | None = None) -> ScenarioConfig:
    """Parse and validate a config; collects all violations before raising."""
    pairs = _parse_lines(text)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError([f"override {item!r} is not key=value"])
        key, value = item.split("=", 1)
        pairs.append((key.strip(), value.strip()))

    # presets expand first, wherever they appear; explicit keys override
    expanded: list[tuple[str, str]] = []
    violations: list[str] = []
    explicit: list[tuple[str, str]] = []
    for key, value in pairs:
        if key == "preset" or (key == "mode" and value in PRESETS):
            if value not in PRESETS:
                violations.append(f"unknown preset {value!r}")
                continue
            expanded.extend(PRESETS[value].items())
        else:
            explicit.append((key, value))
    expanded.extend(explicit)

    cfg = ScenarioConfig()
    for key, value in expanded:
        try:
            if key in _FLOAT_KEYS:
                setattr(cfg, key, float(value))
            elif key in _INT_KEYS:
                setattr(cfg, key, int(value))
            elif key in _POLY_KEYS:
                setattr(cfg, key, tuple(float(tok) for tok in value.split()))
            elif key in _STR_KEYS:
                setattr(cfg, key, value)
            elif key in _BOOL_KEYS:
                if value.lower() not in ("true", "false"):
                    raise ValueError(f"expected true/false, got {value!r}")
                setattr(cfg, key, value.lower() == "true")
            elif key == "d_table":
                cfg.d_table = tuple(
                    (float(tok.split(":")[0]), float(tok.split(":")[1]))
                    for tok in value.split())
            else:
                violations.append(f"unknown key {key!r}")
        except (ValueError, IndexError) as exc:
            violations.append(f"bad value for {key!r}: {exc}")

    if cfg.mode not in MODES or cfg.mode in PRESETS:
        if cfg.mode == "":
            violations.append("mode is required (or give a preset)")
        elif cfg.mode not in MODES:
            violations.append(f"unknown mode {cfg.mode!r}; expected one of {MODES}")
    if not cfg.horizon > 0:
        violations.append(f"horizon must be positive, got {cfg.horizon}")
    if cfg.n_cells < 10:
        violations.append(f"n_cells must be >= 10, got {cfg.n_cells}")
    if not 0.0 < cfg.r <= 1.0:
        violations.append(f"Courant ratio must satisfy 0 < r <= 1, got {cfg.r}")
    if cfg.stride < 1:
        violations.append(f"stride must be >= 1, got {cfg.stride}")
    if cfg.family not in spectral.FAMILY_TAGS:
        violations.append(f"unknown family {cfg.family!r}")
    for key in ("m", "alpha", "a", "beta", "gamma"):
        if not getattr(cfg, key) > 0:
            violations.append(f"{key} must be positive, got {getattr(cfg, key)}")
    try:
        cfg.disturbance()
    except ValueError as exc:
        violations.append(str(exc))
    if violations:
        raise ConfigError(violations)

    cfg.warnings = cfg.params().hypothesis_warnings()
    return cfg


def serialize_config(cfg: ScenarioConfig) -> str:
    """Canonical flat text; parse(serialize(cfg)) == cfg."""
    lines = []
    for f in dataclasses.fields(ScenarioConfig):
        if f.name == "warnings":
            continue
        value = getattr(cfg, f.name)
        if value is None:
            continue
        if f.name in _POLY_KEYS:
            text = " ".join(repr(c) for c in value)
        elif f.name == "d_table":
            if not value:
                continue
            text = " ".join(f"{t!r}:{v!r}" for t, v in value)
        elif f.name in _BOOL_KEYS:
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"


def _poly_on_grid(coeffs, grid: Grid):
    x = grid.nodes()
    return np.polynomial.polynomial.polyval(x, np.asarray(coeffs, dtype=float))


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    out_dir: str
    energy_traces: dict[str, EnergyTrace]
    boundary: dict[str, list[float]]
    fitted_rates: dict[str, float]
    abscissae: dict[str, float]
    threshold_failures: list[str]
    summary_path: str


class _SnapshotWriter:
    def __init__(self, path, grid: Grid):
        self.fh = open(path, "w", newline="")
        self.fh.write("t,x,value\n")
        self.x = grid.nodes()

    def write(self, t: float, values) -> None:
        for xj, vj in zip(self.x, values):
            self.fh.write(f"{float(t)!r},{float(xj)!r},{float(vj)!r}\n")

    def close(self):
        self.fh.close()


def _fit_or_none(trace: EnergyTrace) -> float | None:
    try:
        rate, _ = fit_decay_rate(trace)
    except NoFitError:
        return None
    return rate


def run_scenario(config: ScenarioConfig, out_dir: str | None = None) -> ScenarioResult:
    """Run one scenario and write its artifact set."""
    out = out_dir if out_dir is not None else config.out_dir
    os.makedirs(out, exist_ok=True)
    if config.mode == "spectrum":
        return _run_spectrum(config, out)
    return _run_time_domain(config, out)


def _run_spectrum(config: ScenarioConfig, out: str) -> ScenarioResult:
    family = spectral.CharFamily(config.family, config.params())
    spectrum = spectral.compute_spectrum(family, n_max=config.n_max)
    path = os.path.join(out, f"spectrum_{config.family}.csv")
    spectrum.write_csv(path)
    abscissa = spectrum.abscissa()
    worst = max(e.residual for e in spectrum.eigenvalues)
    lines = [f"mode = spectrum", f"family = {config.family}",
             f"n_max = {config.n_max}",
             f"eigenvalues = {len(spectrum.eigenvalues)}",
             f"abscissa = {abscissa!r}",
             f"max_residual = {worst!r}"]
    summary_path = _write_summary(out, config, lines)
    return ScenarioResult(config=config, out_dir=out, energy_traces={},
                          boundary={}, fitted_rates={},
                          abscissae={config.family: abscissa},
                          threshold_failures=[], summary_path=summary_path)


def _build_loop(config: ScenarioConfig):
    grid, params = config.grid(), config.params()
    spec = config.disturbance()
    u0 = _poly_on_grid(config.u0, grid)
    ut0 = _poly_on_grid(config.ut0, grid)
    f0 = eval_f(spec, float(u0[-1])) + eval_d(spec, 0.0)
    if config.mode == "open_plant":
        loop = SingleFieldLoop(grid, params, u0, ut0,
                               LEFT_DIRICHLET_ZERO, RIGHT_TIP_MASS,
                               right_input0=f0)
        tags = {"u": "H1"}
    elif config.mode == "observer_loop":
        loop = ObserverLoop(grid, params, u0, ut0,
                            _poly_on_grid(config.uhat0, grid),
                            _poly_on_grid(config.uhatt0, grid),
                            initial_disturbance=f0)
        tags = {"u": "H1", "uhat": "H2", "err": "H2"}
    else:
        loop = EsoLoop(grid, params, u0, ut0,
                       _poly_on_grid(config.v0, grid), _poly_on_grid(config.vt0, grid),
                       _poly_on_grid(config.q0, grid), _poly_on_grid(config.qt0, grid),
                       initial_disturbance=f0)
        tags = {"u": "H1", "v": "Hbb1", "q": "Hbb1"}
    return loop, spec, tags


def _loop_fields(loop):
    if isinstance(loop, SingleFieldLoop):
        return {"u": loop.field}
    if isinstance(loop, ObserverLoop):
        return {"u": loop.u, "uhat": loop.uhat}
    return {"u": loop.u, "v": loop.v, "q": loop.q}


def _loop_energies(loop) -> dict[str, float]:
    if isinstance(loop, SingleFieldLoop):
        return {"u_H1": loop.energy("H1")}
    out = loop.energies()
    if isinstance(loop, ObserverLoop):
        return {"u_H1": out["u_H1"], "uhat_H2": out["uhat_H2"], "err_H2": out["err_H2"]}
    return out


def _run_time_domain(config: ScenarioConfig, out: str) -> ScenarioResult:
    grid = config.grid()
    loop, spec, _tags = _build_loop(config)
    dt = grid.dt
    n_steps = int(round(config.horizon / dt))

    writers = {name: _SnapshotWriter(os.path.join(out, f"snapshots_{name}.csv"), grid)
               for name in _loop_fields(loop)}
    energies0 = _loop_energies(loop)
    traces = {key: EnergyTrace(space_tag=key.rsplit("_", 1)[1]) for key in energies0}
    boundary = {"t": [], "eta": [], "psi": []}

    for key, value in energies0.items():
        traces[key].append(0.0, value)
    eta0, psi0 = boundary_ode_states(loop)
    boundary["t"].append(0.0)
    boundary["eta"].append(eta0)
    boundary["psi"].append(psi0)
    for name, fld in _loop_fields(loop).items():
        writers[name].write(0.0, fld.curr)

    for k in range(n_steps):
        t_now = k * dt
        if isinstance(loop, SingleFieldLoop):
            f_val = eval_f(spec, loop.traces.latest("value1"))
            loop.step(right_input=f_val + eval_d(spec, t_now))
        elif isinstance(loop, ObserverLoop):
            f_val = eval_f(spec, loop.u_traces.latest("value1"))
            loop.step(disturbance_value=f_val + eval_d(spec, t_now))
        else:
            loop.step(f_value=eval_f(spec, loop.tip_displacement()),
                      d_value=eval_d(spec, t_now))
        t_new = (k + 1) * dt
        for key, value in _loop_energies(loop).items():
            traces[key].append(t_new, value)
        eta, psi = boundary_ode_states(loop)
        boundary["t"].append(t_new)
        boundary["eta"].append(eta)
        boundary["psi"].append(psi)
        if (k + 1) % config.stride == 0 or k + 1 == n_steps:
            for name, fld in _loop_fields(loop).items():
                writers[name].write(t_new, fld.curr)

    for w in writers.values():
        w.close()
    for key, trace in traces.items():
        name, tag = key.rsplit("_", 1)
        trace.write_csv(os.path.join(out, f"energy_{name}_{tag}.csv"))
    with open(os.path.join(out, "boundary_states.csv"), "w", newline="") as fh:
        fh.write("t,eta,psi\n")
        for t, eta, psi in zip(boundary["t"], boundary["eta"], boundary["psi"]):
            fh.write(f"{float(t)!r},{float(eta)!r},{float(psi)!r}\n")

    fitted = {}
    for key, trace in traces.items():
        rate = _fit_or_none(trace)
        if rate is not None:
            fitted[key] = rate

    abscissae: dict[str, float] = {}
    if config.spectral_summary and config.mode in ("observer_loop", "eso_loop"):
        loop_kind = "observer" if config.mode == "observer_loop" else "eso"
        try:
            fams = spectral.loop_families(loop_kind, config.params())
            spectra = [spectral.compute_spectrum(f, n_max=40) for f in fams]
            for f, s in zip(fams, spectra):
                abscissae[f.tag] = s.abscissa()
            abscissae["combined"] = max(abscissae.values())
        except spectral.HypothesisError:
            pass  # counterexample configs may violate the hypotheses

    failures = _check_thresholds(config, traces, boundary)
    lines = _summary_lines(config, traces, boundary, fitted, abscissae, failures)
    summary_path = _write_summary(out, config, lines)
    return ScenarioResult(config=config, out_dir=out, energy_traces=traces,
                          boundary=boundary, fitted_rates=fitted,
                          abscissae=abscissae, threshold_failures=failures,
                          summary_path=summary_path)


def _check_thresholds(config, traces, boundary) -> list[str]:
    failures = []
    if config.threshold_plant_energy_ratio is not None and "u_H1" in traces:
        e = traces["u_H1"].values
        ratio = e[-1] / e[0] if e[0] > 0 else 0.0
        if not ratio <= config.threshold_plant_energy_ratio:
            failures.append(
                f"plant energy ratio {ratio!r} exceeds "
                f"{config.threshold_plant_energy_ratio!r}")
    if config.threshold_bounded_factor is not None:
        ts = np.asarray(boundary["t"])
        early = ts <= _EARLY_WINDOW
        pooled_all, pooled_early = [], []
        for key, trace in traces.items():
            if key == "u_H1":
                continue
            vals = np.asarray(trace.values)
            pooled_all.append(vals.max())
            pooled_early.append(vals[early[: len(vals)]].max())
        psi = np.abs(np.asarray(boundary["psi"]))
        pooled_all.append(psi.max())
        pooled_early.append(psi[early].max())
        if pooled_all:
            sup_all, sup_early = max(pooled_all), max(pooled_early)
            if not sup_all <= config.threshold_bounded_factor * sup_early:
                failures.append(
                    f"boundedness: sup {sup_all!r} exceeds "
                    f"{config.threshold_bounded_factor!r} x early max {sup_early!r}")
    return failures


def _summary_lines(config, traces, boundary, fitted, abscissae, failures):
    lines = [f"mode = {config.mode}"]
    for key in sorted(traces):
        trace = traces[key]
        lines.append(f"energy {key}: initial = {trace.values[0]!r}, "
                     f"final = {trace.values[-1]!r}, max = {max(trace.values)!r}")
    for key in sorted(fitted):
        lines.append(f"fitted energy rate {key} = {fitted[key]!r} "
                     f"(state rate {fitted[key] / 2!r})")
    if boundary["t"]:
        eta = np.abs(np.asarray(boundary["eta"]))
        psi = np.abs(np.asarray(boundary["psi"]))
        lines.append(f"max |eta| = {float(eta.max())!r}, final |eta| = {float(eta[-1])!r}")
        lines.append(f"max |psi| = {float(psi.max())!r}, final |psi| = {float(psi[-1])!r}")
    for tag in sorted(abscissae):
        lines.append(f"spectral abscissa {tag} = {abscissae[tag]!r}")
    for msg in config.warnings:
        lines.append(f"warning: {msg}")
    if failures:
        for msg in failures:
            lines.append(f"FAIL: {msg}")
    else:
        lines.append("thresholds: PASS" if (config.threshold_plant_energy_ratio is not None
                                            or config.threshold_bounded_factor is not None)
                     else "thresholds: none configured")
    return lines


def _write_summary(out, config, lines) -> str:
    path = os.path.join(out, "summary.txt")
    with open(path, "w", newline="") as fh:
        fh.write("# scenario summary\n")
        fh.write(serialize_config(config))
        fh.write("\n")
        for line in lines:
            fh.write(line + "\n")
    return path
