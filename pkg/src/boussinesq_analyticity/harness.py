"""
Experiment orchestration: presets, config files, runs, reports, output files.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .analyticity import RadiusEstimate, fit_radius_shell, radius_from_cascade, resolution_guard
from .bounds import (
    BoundParams,
    CalibrationError,
    IntegrandSeries,
    calibrate_constants,
    check_inductive_bound,
    escalate_A,
    fit_gronwall_constant,
    lower_bound_tau,
)
from .diagnostics import DiagnosticsRecord, derivative_cascade, diagnose, energy_budget
from .dynamics import FlowState, SimulationError, StepControl, initial_state, output_times, run
from .spectral import NOISE_FLOOR, Grid, SpectralField, make_grid, shell_spectrum

log = logging.getLogger(__name__)

PRESETS = ("hydrostatic", "taylor_green", "stratified_shear", "synthetic_radius")

# name -> (default, low, high); integers are seeds
PRESET_PARAMS = {
    "hydrostatic": {"a": (1.0, 0.0, 10.0)},
    "taylor_green": {"a": (1.0, 0.0, 10.0)},
    "stratified_shear": {
        "a": (1.0, 0.0, 10.0),
        "b": (0.5, 0.0, 10.0),
        "epsilon": (0.02, 0.0, 0.5),
        "seed": (1, 0, 2**31 - 1),
    },
    "synthetic_radius": {
        "tau0": (math.log(2.0), 0.05, 5.0),
        "c": (1.0, 0.0, 10.0),
        "seed": (1, 0, 2**31 - 1),
    },
}

PERTURBATION_BAND = 4
RADIUS_SOBOLEV_ORDER = 0

DISCLAIMER = (
    "C0 and C1 are calibrated on this run family, so 'bound holds' verdicts are "
    "consistent by construction; the informative output is the stability of the "
    "calibrated constants under grid and time-step refinement."
)

TIMESERIES_COLUMNS = (
    "t",
    "hk_pair_norm",
    "grad_u_sup",
    "grad_theta_sup",
    "kinetic_energy",
    "theta_l2",
    "tau_shell",
    "tau_ratio",
    "tau_bound",
    "guard_ok",
)


class ConfigError(ValueError):
    category = "config_invalid"


@dataclass(frozen=True)
class RunConfig:
    grid_n: int = 128
    preset: str = "stratified_shear"
    preset_params: dict = field(default_factory=dict)
    k: int = 3
    t_end: float = 1.0
    output_interval: float = 0.05
    cfl: float = 0.5
    cascade_n_max: int = 12
    noise_floor: float = NOISE_FLOOR
    output_dir: str = "run_output"
    A: float = 1.0

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}")
        if self.grid_n < 8 or self.grid_n % 2:
            raise ConfigError("grid_n must be an even integer >= 8")
        if self.k < 3:
            raise ConfigError("k must be >= 3")
        for name in ("t_end", "output_interval", "cfl", "noise_floor"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.cfl > 1.0:
            raise ConfigError("cfl must not exceed 1")
        if not 2 <= self.cascade_n_max <= 12:
            raise ConfigError("cascade_n_max must lie in 2..12")
        if self.A < 1.0:
            raise ConfigError("A must be >= 1")
        resolve_preset_params(self.preset, self.preset_params)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["preset_params"] = resolve_preset_params(self.preset, self.preset_params)
        return d


def resolve_preset_params(preset: str, params: dict) -> dict:
    spec = PRESET_PARAMS[preset]
    unknown = set(params) - set(spec)
    if unknown:
        raise ConfigError(f"unknown parameters for preset {preset}: {sorted(unknown)}")
    out = {}
    for name, (default, lo, hi) in spec.items():
        value = params.get(name, default)
        value = int(value) if isinstance(default, int) else float(value)
        if not lo <= value <= hi:
            raise ConfigError(f"{preset}.{name}={value} outside [{lo}, {hi}]")
        out[name] = value
    return out


def parse_config(text: str) -> RunConfig:
    """Parse ``key = value`` lines; ``preset_params.<name> = value`` sets preset parameters."""
    types = {f.name: f.type for f in fields(RunConfig)}
    kwargs: dict = {}
    params: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key.startswith("preset_params."):
            params[key.split(".", 1)[1]] = value
            continue
        if key not in types or key == "preset_params":
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            if types[key] in ("int", int):
                kwargs[key] = int(value)
            elif types[key] in ("float", float):
                kwargs[key] = float(value)
            else:
                kwargs[key] = value
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from exc
    try:
        return RunConfig(preset_params=params, **kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())


# --------------------------------------------------------------------------
# initial data
# --------------------------------------------------------------------------


def _hermitian(c: np.ndarray) -> np.ndarray:
    flipped = np.conj(np.roll(np.flip(c), 1, axis=(0, 1)))
    return 0.5 * (c + flipped)


def _odd(phase: np.ndarray) -> np.ndarray:
    return phase - np.roll(np.flip(phase), 1, axis=(0, 1))


def _ring_draws(grid: Grid, kmax: int, draw) -> np.ndarray:
    """Random values on the integer wavevectors max|k_i| <= kmax, placed in grid layout.

    ``draw(count)`` returns an array of shape ``(..., count)``.  Values are
    drawn ring by ring in the max-norm, so the draws on a smaller box never
    depend on ``kmax`` and a seed gives the same modes on every grid that
    resolves them.
    """
    side = 2 * kmax + 1
    box = None
    for m in range(kmax + 1):
        ring = [(a, b) for a in range(-m, m + 1) for b in range(-m, m + 1) if max(abs(a), abs(b)) == m]
        vals = np.asarray(draw(len(ring)))
        if box is None:
            box = np.zeros(vals.shape[:-1] + (side, side), dtype=vals.dtype)
        for (a, b), v in zip(ring, np.moveaxis(vals, -1, 0)):
            box[..., a + kmax, b + kmax] = v
    idx = np.arange(-kmax, kmax + 1) % grid.n
    out = np.zeros(box.shape[:-2] + grid.shape, dtype=box.dtype)
    out[..., idx[:, None], idx[None, :]] = box
    return out


def _band_perturbation(grid: Grid, rng: np.random.Generator) -> np.ndarray:
    """Random real field with modes 1 <= |k| <= 4, unit RMS, as coefficients."""
    band = (grid.kmag >= 1) & (grid.kmag <= PERTURBATION_BAND)
    c = _ring_draws(grid, PERTURBATION_BAND, lambda m: rng.standard_normal(m) + 1j * rng.standard_normal(m)) * band
    c = _hermitian(c)
    rms = np.sqrt(np.sum(np.abs(c) ** 2))
    return c / rms


def _cosine(grid: Grid, amplitude: float, k1: int, k2: int) -> np.ndarray:
    """Exact coefficients of amplitude·cos(k1 x1)·cos(k2 x2)."""
    c = np.zeros(grid.shape, dtype=complex)
    weight = amplitude / (2 ** (int(k1 != 0) + int(k2 != 0)))
    for s1 in {k1, -k1}:
        for s2 in {k2, -k2}:
            c[s1 % grid.n, s2 % grid.n] += weight
    return c


def _laplacian(grid: Grid, c: np.ndarray) -> np.ndarray:
    k1, k2 = grid.deriv_wavenumbers
    return -(k1 * k1 + k2 * k2) * c


def build_initial(preset: str, params: dict, grid: Grid) -> FlowState:
    """Analytic initial data for one of the presets (zero-mean ω and θ)."""
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}")
    p = resolve_preset_params(preset, params)
    if preset == "hydrostatic":
        omega = SpectralField.zeros(grid)
        theta = SpectralField(_cosine(grid, p["a"], 0, 1), grid)
    elif preset == "taylor_green":
        psi = _cosine(grid, p["a"], 1, 1)
        omega = SpectralField(_laplacian(grid, psi), grid)
        theta = SpectralField.zeros(grid)
    elif preset == "stratified_shear":
        rng = np.random.default_rng(p["seed"])
        psi = _cosine(grid, p["a"], 0, 1) + p["epsilon"] * _band_perturbation(grid, rng)
        th = _cosine(grid, p["b"], 0, 1) + p["epsilon"] * _band_perturbation(grid, rng)
        omega = SpectralField(_laplacian(grid, psi), grid)
        theta = SpectralField(th, grid)
    else:
        rng = np.random.default_rng(p["seed"])
        envelope = p["c"] * np.exp(-p["tau0"] * grid.kmag) * grid.dealias_mask
        envelope[0, 0] = 0.0
        phases = _ring_draws(grid, grid.k_dealias, lambda m: rng.uniform(0.0, 2.0 * np.pi, (2, m)))
        omega, theta = (SpectralField(envelope * np.exp(1j * _odd(ph)), grid) for ph in phases)
    omega = SpectralField(np.where(grid.dealias_mask, omega.coeffs, 0.0), grid)
    theta = SpectralField(np.where(grid.dealias_mask, theta.coeffs, 0.0), grid)
    for f in (omega, theta):
        if f.coeffs[0, 0] != 0.0:
            raise ConfigError(f"preset {preset} produced a nonzero mean")
    return initial_state(omega, theta)


# --------------------------------------------------------------------------
# runs and reports
# --------------------------------------------------------------------------


@dataclass
class Snapshot:
    record: DiagnosticsRecord
    shell: RadiusEstimate
    ratio: Optional[RadiusEstimate]
    spectrum: tuple
    guard_ok: bool
    tau_bound: Optional[float] = None
    verdict: str = "pending"


@dataclass
class RunReport:
    config: RunConfig
    snapshots: list = field(default_factory=list)
    termination: str = "completed"
    termination_time: Optional[float] = None
    message: str = ""
    A: Optional[float] = None
    B: Optional[float] = None
    C0: Optional[float] = None
    C1: Optional[float] = None
    C0_lemma: Optional[float] = None
    gronwall_fit: Optional[float] = None
    calibration_error: Optional[str] = None
    inductive_min_margin: Optional[float] = None
    inductive_t0_min_margin: Optional[float] = None
    inductive_margins: list = field(default_factory=list)
    energy_residual: Optional[float] = None
    theta_l2_drift: Optional[float] = None
    hk_drift: Optional[float] = None
    lemma_bound_holds: Optional[bool] = None

    @property
    def records(self) -> list[DiagnosticsRecord]:
        return [s.record for s in self.snapshots]

    @property
    def times(self) -> np.ndarray:
        return np.array([s.record.time for s in self.snapshots])

    def verdict_summary(self) -> dict:
        counts = {"holds": 0, "violated": 0, "inconclusive": 0, "pending": 0}
        for s in self.snapshots:
            counts[s.verdict] = counts.get(s.verdict, 0) + 1
        overall = "violated" if counts["violated"] else ("holds" if counts["holds"] else "inconclusive")
        return {"counts": counts, "overall": overall}

    def to_dict(self) -> dict:
        snaps = []
        for s in self.snapshots:
            r = s.record
            snaps.append(
                {
                    "t": r.time,
                    "hk_pair_norm": r.hk_pair_norm,
                    "grad_u_sup": r.grad_u_sup,
                    "grad_theta_sup": r.grad_theta_sup,
                    "kinetic_energy": r.kinetic_energy,
                    "theta_l2": r.theta_l2,
                    "buoyancy_flux": r.buoyancy_flux,
                    "cascade": [[n, v] for n, v in r.cascade],
                    "tau_shell": s.shell.to_dict(),
                    "tau_ratio": s.ratio.to_dict() if s.ratio is not None else None,
                    "tau_bound": s.tau_bound,
                    "guard_ok": s.guard_ok,
                    "verdict": s.verdict,
                }
            )
        return {
            "config": self.config.to_dict(),
            "termination": {"cause": self.termination, "time": self.termination_time, "message": self.message},
            "constants": {
                "A": self.A,
                "B": self.B,
                "C0": self.C0,
                "C1": self.C1,
                "C0_lemma_grid": self.C0_lemma,
                "C0_gronwall_fit": self.gronwall_fit,
                "calibration_error": self.calibration_error,
            },
            "checks": {
                "energy_residual": self.energy_residual,
                "theta_l2_drift": self.theta_l2_drift,
                "hk_drift": self.hk_drift,
                "lemma_bound_holds": self.lemma_bound_holds,
                "inductive_min_margin": self.inductive_min_margin,
                "inductive_t0_min_margin": self.inductive_t0_min_margin,
                "inductive_margins": [[t, n, m] for t, n, m in self.inductive_margins],
            },
            "verdicts": self.verdict_summary(),
            "disclaimer": DISCLAIMER,
            "snapshots": snaps,
        }


def snapshot(state: FlowState, config: RunConfig) -> Snapshot:
    u = list(state.velocity())
    record = diagnose(state.time, u, state.theta, config.k, config.cascade_n_max, config.noise_floor)
    shells, amps = shell_spectrum(*u, state.theta)
    try:
        shell_est = fit_radius_shell(shells, amps, config.noise_floor)
    except ValueError:
        shell_est = RadiusEstimate(0.0, math.nan, None, 0, "shell_fit", True)
    radius_cascade = derivative_cascade(u, state.theta, RADIUS_SOBOLEV_ORDER, 12, noise_floor=config.noise_floor)
    try:
        ratio_est = radius_from_cascade(radius_cascade)
    except ValueError:
        ratio_est = None
    guard = resolution_guard(shell_est, state.grid) and shell_est.tau > 0
    record = replace(record, radius_estimates={"shell_fit": shell_est, "derivative_ratio": ratio_est})
    spectrum = tuple(zip(shells.tolist(), amps.tolist()))
    return Snapshot(record, shell_est, ratio_est, spectrum, guard)


def run_experiment(config: RunConfig) -> RunReport:
    """Build data, fix (A, B), integrate with diagnostics, calibrate, and judge."""
    grid = make_grid(config.grid_n, 2)
    state0 = build_initial(config.preset, config.preset_params, grid)
    report = RunReport(config)
    u0 = list(state0.velocity())
    terms = escalate_A(u0, state0.theta, config.k, config.A, n_probe=min(12, config.cascade_n_max))
    report.A, report.B = terms.A, terms.B

    control = StepControl(cfl=config.cfl, dt_max=config.output_interval, dt_min=1e-8, t_end=config.t_end)
    try:
        run(state0, control, lambda s: report.snapshots.append(snapshot(s, config)), config.output_interval)
    except SimulationError as exc:
        report.termination = exc.category
        report.termination_time = exc.time
        report.message = str(exc)
        log.warning("run stopped: %s", exc)
    else:
        report.termination_time = float(report.times[-1])
    _evaluate(report)
    return report


def _evaluate(report: RunReport) -> None:
    cfg = report.config
    recs = report.records
    if not recs:
        return
    integrand = IntegrandSeries.from_records(recs)
    hk = np.array([r.hk_pair_norm for r in recs])
    report.hk_drift = float(np.max(np.abs(hk - hk[0])) / hk[0]) if hk[0] > 0 else float(np.max(hk))
    th = np.array([r.theta_l2 for r in recs])
    report.theta_l2_drift = float(np.max(np.abs(th - th[0])) / th[0]) if th[0] > 0 else float(np.max(th))
    if len(recs) >= 2:
        report.energy_residual = energy_budget(recs, [r.buoyancy_flux for r in recs])
    report.gronwall_fit = fit_gronwall_constant(hk, integrand)
    cascades = [(r.time, r.cascade) for r in recs]
    try:
        cal = calibrate_constants(hk, cascades, integrand, report.A, report.B, cfg.k, 2)
    except (CalibrationError, ValueError) as exc:
        report.calibration_error = str(exc)
        for s in report.snapshots:
            s.verdict = "inconclusive"
        return
    report.C0, report.C1, report.C0_lemma = cal.C0, cal.C1, cal.C0_lemma
    params = BoundParams(report.A, report.B, cal.C0, cal.C1, cfg.k, 2)
    growth_ok = True
    for s in report.snapshots:
        t = s.record.time
        s.tau_bound = lower_bound_tau(t, params, integrand)
        growth_ok &= s.record.hk_pair_norm <= recs[0].hk_pair_norm * np.exp(cal.C0 * integrand.integral(t))
        if not s.guard_ok:
            s.verdict = "inconclusive"
        else:
            s.verdict = "holds" if s.shell.tau >= s.tau_bound else "violated"
    report.lemma_bound_holds = bool(growth_ok)
    ind = check_inductive_bound(cascades, params, integrand)
    report.inductive_min_margin = ind.min_margin
    report.inductive_t0_min_margin = ind.min_margin_at(recs[0].time)
    report.inductive_margins = ind.as_rows()


# --------------------------------------------------------------------------
# files
# --------------------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x)) if isinstance(x, float) else str(x)


def _json_safe(obj):
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        if math.isnan(obj):
            return None
        return obj
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.generic):
        return _json_safe(obj.item())
    return obj


def report_json(report: RunReport) -> str:
    return json.dumps(_json_safe(report.to_dict()), indent=1, sort_keys=True) + "\n"


def timeseries_rows(report: RunReport) -> list[list[str]]:
    rows = []
    for s in report.snapshots:
        r = s.record
        rows.append(
            [
                _fmt(r.time),
                _fmt(r.hk_pair_norm),
                _fmt(r.grad_u_sup),
                _fmt(r.grad_theta_sup),
                _fmt(r.kinetic_energy),
                _fmt(r.theta_l2),
                _fmt(s.shell.tau),
                _fmt(s.ratio.tau) if s.ratio is not None else "",
                _fmt(s.tau_bound),
                _fmt(s.guard_ok),
            ]
        )
    return rows


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def emit_outputs(report: RunReport, output_dir=None) -> Path:
    """Write timeseries.csv, report.json and plotdata/*.csv; returns the directory."""
    out = Path(output_dir if output_dir is not None else report.config.output_dir)
    try:
        (out / "plotdata").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    _write_csv(out / "timeseries.csv", TIMESERIES_COLUMNS, timeseries_rows(report))
    (out / "report.json").write_text(report_json(report))
    plot = out / "plotdata"
    _write_csv(plot / "tau_shell.csv", ("t", "tau_shell"), [[_fmt(s.record.time), _fmt(s.shell.tau)] for s in report.snapshots])
    _write_csv(
        plot / "tau_ratio.csv",
        ("t", "tau_ratio"),
        [[_fmt(s.record.time), _fmt(s.ratio.tau)] for s in report.snapshots if s.ratio is not None],
    )
    _write_csv(plot / "tau_bound.csv", ("t", "tau_bound"), [[_fmt(s.record.time), _fmt(s.tau_bound)] for s in report.snapshots])
    for i, s in enumerate(report.snapshots):
        _write_csv(plot / f"spectrum_{i:04d}.csv", ("shell", "amplitude"), [[_fmt(j), _fmt(a)] for j, a in s.spectrum])
    return out


def expected_rows(config: RunConfig) -> int:
    return output_times(config.t_end, config.output_interval).size
