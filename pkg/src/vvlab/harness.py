"""Viscosity sweeps against an Euler reference, rate fitting and report files."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import dataclass, field, fields, replace
import json
import logging
import math
import os
from pathlib import Path
import re

import numpy as np

from . import diagnostics as dg
from .audit import InequalityAudit
from .errors import DegenerateBlock, Diverged, EmptyBand, InsufficientPoints
from .flow_solver import FlowState, SolverConfig, Trajectory, solve
from .littlewood_paley import bernstein_audit, build_partition, low_pass, zygmund_norm
from .spectral import Grid, SpectralField, forward_transform, from_function, restrict, sup_norm

logger = logging.getLogger(__name__)

DEFAULT_CEILINGS = {
    "cz": 10.0,
    "gauss": 2.0,
    "c1_norm": 10.0,
    "commutator": 10.0,
    "low_frequency": 10.0,
    "velocity_exp_bound": 3.0,
    "bernstein": 4.0,
}

SWEEP_HEADER = ["n", "nu", "error_sup", "low", "mid", "tail"]


@dataclass(frozen=True)
class ExperimentConfig:
    N: int = 128
    box_length: float = 2 * math.pi
    T: float = 0.5
    dt: float = 0.005
    n_values: tuple[int, ...] = (2, 3, 4, 5, 6)
    alpha: float = 0.9
    seed: int = 0
    omega_sup_target: float = 1.0
    initial_data: str = "random_band(1,4)"
    output_dir: str = "vvlab_out"
    monitor_stride: int = 1
    workers: int = 1
    min_slope: float | None = None
    ceilings: dict = field(default_factory=lambda: dict(DEFAULT_CEILINGS))

    def __post_init__(self):
        if not self.n_values:
            raise ValueError("n_values must be nonempty")
        if any(b <= a for a, b in zip(self.n_values, self.n_values[1:])):
            raise ValueError(f"n_values must be strictly increasing, got {self.n_values}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.T * self.omega_sup_target > 2.0 + 1e-12:
            raise ValueError(
                f"T * omega_sup_target = {self.T * self.omega_sup_target:g} exceeds the short-time guard 2")
        parse_initial_data(self.initial_data)

    @property
    def grid(self) -> Grid:
        return Grid(self.N, self.box_length)

    @property
    def slope_floor(self) -> float:
        return self.alpha / 2 - 0.1 if self.min_slope is None else self.min_slope


def parse_initial_data(text: str) -> tuple:
    text = text.strip()
    if text == "taylor_green":
        return ("taylor_green",)
    m = re.fullmatch(r"random_band\(\s*([0-9.]+)\s*,\s*([0-9.]+)\s*\)", text)
    if m:
        return ("random_band", float(m.group(1)), float(m.group(2)))
    if text.startswith("file:"):
        return ("file", text[5:])
    raise ValueError(f"unrecognised initial_data {text!r}")


_INT_KEYS = {"N", "seed", "monitor_stride", "workers"}
_FLOAT_KEYS = {"box_length", "T", "dt", "alpha", "omega_sup_target", "min_slope"}


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    """Read a flat ``key = value`` file; ``#`` starts a comment.

    ``ceiling_<audit> = x`` overrides one acceptance ceiling and ``n_values``
    takes a comma-separated list.  ``box_length`` accepts the literal ``2pi``.
    """
    known = {f.name for f in fields(ExperimentConfig)}
    kwargs: dict = {}
    ceilings = dict(DEFAULT_CEILINGS)
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            if key.startswith("ceiling_"):
                ceilings[key[len("ceiling_"):]] = float(value)
            elif key == "n_values":
                kwargs[key] = tuple(int(v) for v in value.split(",") if v.strip())
            elif key in _INT_KEYS:
                kwargs[key] = int(value)
            elif key == "box_length" and value.replace(" ", "") in {"2pi", "2*pi"}:
                kwargs[key] = 2 * math.pi
            elif key in _FLOAT_KEYS:
                kwargs[key] = float(value)
            elif key in known:
                kwargs[key] = value
            else:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
    kwargs["ceilings"] = ceilings
    return ExperimentConfig(**kwargs)


def _rescale(omega: SpectralField, target: float) -> SpectralField:
    size = sup_norm(omega)
    return omega * (target / size)


def generate_initial_data(config: ExperimentConfig) -> SpectralField:
    grid = config.grid
    kind = parse_initial_data(config.initial_data)
    if kind[0] == "taylor_green":
        a = grid.scale
        omega = from_function(grid, lambda x, y: -2.0 * np.cos(a * x) * np.cos(a * y))
        return _rescale(omega, config.omega_sup_target)
    if kind[0] == "random_band":
        k_min, k_max = kind[1], kind[2]
        i1, i2 = grid.index
        radius = np.hypot(i1, i2)
        band = (radius >= k_min) & (radius <= k_max) & grid.dealias_mask & (radius > 0)
        if not band.any():
            raise EmptyBand(f"no lattice modes with {k_min} <= |k| <= {k_max}")
        rng = np.random.default_rng(config.seed)
        coeffs = np.zeros(grid.shape, dtype=complex)
        coeffs[band] = rng.standard_normal(band.sum()) + 1j * rng.standard_normal(band.sum())
        samples = (np.fft.ifft2(coeffs) * coeffs.size).real
        omega = forward_transform(samples, grid)
        # drop round-off leaking outside the band, including into the mean
        omega = omega.with_coeffs(np.where(band, omega.coeffs, 0.0))
        return _rescale(omega, config.omega_sup_target)
    samples = np.load(kind[1])
    omega = forward_transform(np.asarray(samples, dtype=float), grid)
    coeffs = np.where(grid.dealias_mask, omega.coeffs, 0.0)
    coeffs[0, 0] = 0.0
    if not np.any(coeffs):
        raise EmptyBand(f"{kind[1]} holds no resolved mean-free content")
    return _rescale(omega.with_coeffs(coeffs), config.omega_sup_target)


# sweep ------------------------------------------------------------------------

@dataclass
class SweepRecord:
    n: int
    nu: float
    error_sup: float
    decomposition: dg.ErrorDecomposition | None = None
    audits: list[InequalityAudit] = field(default_factory=list)
    key_terms: dict[str, float] = field(default_factory=dict)
    failed: bool = False
    message: str = ""


@dataclass
class SweepResult:
    records: list[SweepRecord]
    T: float
    alpha: float
    omega0_sup: float
    v0_sup: float
    reference: dict = field(default_factory=dict)
    global_audits: list[InequalityAudit] = field(default_factory=list)

    def all_audits(self) -> list[InequalityAudit]:
        out = list(self.global_audits)
        for r in self.records:
            out.extend(r.audits)
        return out


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    residual_rms: float
    n_range: tuple[int, int]


def _solver_config(config: ExperimentConfig, grid: Grid, norms=()) -> SolverConfig:
    return SolverConfig(grid=grid, dt=config.dt, t_end=config.T,
                        monitor_stride=config.monitor_stride, monitor_norms=tuple(norms))


def euler_reference(config: ExperimentConfig, omega0: SpectralField) -> Trajectory:
    """Inviscid solve at doubled resolution, spectrally restricted to the sweep grid."""
    fine = Grid(2 * config.N, config.box_length)
    traj = solve(restrict(omega0, fine), 0.0, _solver_config(config, fine))
    coarse = Trajectory(nu=0.0, config=_solver_config(config, config.grid, ("zygmund_v_1",)))
    for state, mon in zip(traj.states, traj.monitors):
        small = FlowState(restrict(state.omega, config.grid), state.t, 0.0)
        coarse.states.append(small)
        rec = dict(mon)
        rec["zygmund_v_1"] = zygmund_norm(small.velocity, 1.0)
        coarse.monitors.append(rec)
    return coarse


def _run_one(config: ExperimentConfig, n: int, omega0: SpectralField, reference: Trajectory) -> SweepRecord:
    nu = 2.0 ** (-2 * n)
    ceil = config.ceilings
    try:
        traj = solve(omega0, nu, _solver_config(config, config.grid))
    except Diverged as exc:
        return SweepRecord(n, nu, math.nan, failed=True, message=str(exc))
    if len(traj.states) != len(reference.states):
        raise RuntimeError("viscous and reference trajectories are not aligned in time")
    error = max(sup_norm(a.velocity - b.velocity) for a, b in zip(traj.states, reference.states))
    final_nu, final = traj.final, reference.final
    decomposition = dg.three_term_split(final_nu.velocity, final.velocity, n)
    key = dg.key_lemma_terms(final_nu, final, n)
    omega_bar = final_nu.omega - low_pass(final.omega, n)
    delta = 2.0 ** (-n * config.alpha)
    gauss = max((dg.gauss_lemma_audit(c, config.T, nu, delta, config.alpha, ceil["gauss"])
                 for c in reference.initial.velocity), key=lambda a: a.implied_constant)
    audits = [
        dg.commutator_lemma_audit(final, omega_bar, n, config.alpha, ceil["commutator"]),
        gauss,
        dg.low_frequency_decay_audit(final.velocity, n, ceil["low_frequency"]),
        dg.max_principle_audit(traj),
        dg.velocity_bound_audit(traj, ceil["velocity_exp_bound"]),
    ]
    audits = [replace(a, name=f"{a.name}[n={n}]") for a in audits]
    return SweepRecord(n, nu, error, decomposition, audits, key)


def _workers(config: ExperimentConfig) -> int:
    env = os.environ.get("VVLAB_WORKERS")
    return max(1, int(env)) if env else max(1, config.workers)


def run_sweep(config: ExperimentConfig) -> SweepResult:
    omega0 = generate_initial_data(config)
    reference = euler_reference(config, omega0)
    workers = _workers(config)
    if workers > 1 and len(config.n_values) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_one, config, n, omega0, reference) for n in config.n_values]
            records = [f.result() for f in futures]
    else:
        records = [_run_one(config, n, omega0, reference) for n in config.n_values]
    for rec in records:
        logger.info("n=%d nu=%.3e error=%.6e", rec.n, rec.nu, rec.error_sup)
    global_audits = [
        dg.cz_audit(omega0, config.ceilings["cz"]),
        dg.c1_norm_audit(reference, config.ceilings["c1_norm"]),
        dg.max_principle_audit(reference),
    ]
    global_audits.extend(_bernstein_audits(omega0, config.ceilings["bernstein"]))
    return SweepResult(
        records=records,
        T=config.T,
        alpha=config.alpha,
        omega0_sup=sup_norm(omega0),
        v0_sup=sup_norm(reference.initial.velocity),
        reference={"grid_points": 2 * config.N, "restricted_to": config.N, "nu": 0.0,
                   "short_time_guard": config.T * config.omega_sup_target},
        global_audits=global_audits,
    )


def _bernstein_audits(omega: SpectralField, bound: float) -> list[InequalityAudit]:
    out = []
    for j in build_partition(omega.grid).active:
        try:
            out.append(bernstein_audit(omega, j, bound))
        except DegenerateBlock:
            continue
    return out


def fit_rate(sweep: SweepResult) -> RateFit:
    recs = [r for r in sweep.records if not r.failed and r.error_sup > 0 and math.isfinite(r.error_sup)]
    if len(recs) < 3:
        raise InsufficientPoints(f"rate fit needs >= 3 successful records, got {len(recs)}")
    x = np.log([r.nu for r in recs])
    y = np.log([r.error_sup for r in recs])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ns = [r.n for r in recs]
    return RateFit(float(slope), float(intercept), float(np.sqrt(np.mean(resid**2))), (min(ns), max(ns)))


def _monotone(errors: list[float], slack: float = 0.05) -> bool:
    """Errors decrease along increasing n, allowing a relative uptick of ``slack``."""
    return all(b <= a * (1.0 + slack) for a, b in zip(errors, errors[1:]))


def acceptance_checks(sweep: SweepResult, fit: RateFit, config: ExperimentConfig) -> dict[str, bool]:
    errors = [r.error_sup for r in sweep.records if not r.failed]
    C, C1 = dg.fit_theorem_constants(sweep, config.alpha)
    ratios = dg.theorem_bound_evaluator(sweep, config.alpha, C, C1)
    return {
        "audits": all(a.passed for a in sweep.all_audits()),
        "slope": fit.slope >= config.slope_floor,
        "monotone": _monotone(errors),
        "theorem_bound": all(r <= 1.0 for r in ratios),
        "no_failed_runs": not any(r.failed for r in sweep.records),
    }


# persistence --------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _finite(x):
    return x if x is None or math.isfinite(x) else None


def emit_report(sweep: SweepResult, fit: RateFit | None, output_dir: str | os.PathLike,
                formats: tuple[str, ...] = ("csv", "json")) -> list[Path]:
    """Write sweep.csv, plotdata.csv, audits.json and rate.json into ``output_dir``."""
    good = [r for r in sweep.records if not r.failed]
    if len(good) < 3 or fit is None:
        raise InsufficientPoints(f"report needs >= 3 successful records, got {len(good)}")
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create report directory {out}: {exc}") from exc
    written = []

    def write(name: str, text: str):
        path = out / name
        try:
            path.write_text(text)
        except OSError as exc:
            raise OSError(f"failed writing {path}: {exc}") from exc
        written.append(path)

    if "csv" in formats:
        lines = [",".join(SWEEP_HEADER)]
        for r in sweep.records:
            d = r.decomposition
            parts = [str(r.n), _fmt(r.nu), _fmt(r.error_sup)]
            parts += [_fmt(d.low), _fmt(d.mid), _fmt(d.tail)] if d else ["nan"] * 3
            lines.append(",".join(parts))
        write("sweep.csv", "\n".join(lines) + "\n")
        plot = ["log2_nu,log_error"]
        plot += [f"{_fmt(math.log2(r.nu))},{_fmt(math.log(r.error_sup))}" for r in good if r.error_sup > 0]
        write("plotdata.csv", "\n".join(plot) + "\n")
    if "json" in formats:
        audits = []
        for a in sweep.all_audits():
            d = a.to_dict()
            d["implied_constant"] = _finite(d["implied_constant"])
            audits.append(d)
        write("audits.json", json.dumps(audits, indent=2, sort_keys=True) + "\n")
        rate = {"slope": fit.slope, "intercept": fit.intercept, "residual_rms": fit.residual_rms,
                "reference": sweep.reference}
        write("rate.json", json.dumps(rate, indent=2, sort_keys=True) + "\n")
    return written


def read_sweep_csv(path: str | os.PathLike) -> list[SweepRecord]:
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SWEEP_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        for row in reader:
            err = float(row["error_sup"])
            dec = dg.ErrorDecomposition(int(row["n"]), float(row["low"]), float(row["mid"]),
                                        float(row["tail"]), math.nan)
            records.append(SweepRecord(int(row["n"]), float(row["nu"]), err, dec,
                                       failed=not math.isfinite(err)))
    return records


# single-lemma audits ------------------------------------------------------------

LEMMAS = ("bernstein", "cz", "gauss", "c1", "commutator", "key", "low_frequency", "max_principle",
          "velocity")


def run_audit(config: ExperimentConfig, lemma: str) -> tuple[list[InequalityAudit], dict]:
    """Audit one lemma on the configured initial data; returns (audits, extra values)."""
    if lemma not in LEMMAS:
        raise ValueError(f"unknown lemma {lemma!r}; choose from {', '.join(LEMMAS)}")
    ceil = config.ceilings
    omega0 = generate_initial_data(config)
    if lemma == "bernstein":
        return _bernstein_audits(omega0, ceil["bernstein"]), {}
    if lemma == "cz":
        return [dg.cz_audit(omega0, ceil["cz"])], {}
    if lemma == "gauss":
        v0 = FlowState(omega0).velocity
        audits = [dg.gauss_lemma_audit(c, config.T, 2.0 ** (-2 * n), 2.0 ** (-n * config.alpha),
                                       config.alpha, ceil["gauss"])
                  for n in config.n_values for c in v0]
        return audits, {}
    euler = solve(omega0, 0.0, _solver_config(config, config.grid, ("zygmund_v_1",)))
    if lemma == "c1":
        return [dg.c1_norm_audit(euler, ceil["c1_norm"])], {}
    if lemma == "max_principle":
        return [dg.max_principle_audit(euler)], {}
    if lemma == "velocity":
        return [dg.velocity_bound_audit(euler, ceil["velocity_exp_bound"])], {}
    if lemma == "low_frequency":
        return [dg.low_frequency_decay_audit(euler.final.velocity, n, ceil["low_frequency"])
                for n in config.n_values], {}
    audits, extra = [], {}
    for n in config.n_values:
        viscous = solve(omega0, 2.0 ** (-2 * n), _solver_config(config, config.grid)).final
        omega_bar = viscous.omega - low_pass(euler.final.omega, n)
        audits.append(replace(dg.commutator_lemma_audit(euler.final, omega_bar, n, config.alpha,
                                                        ceil["commutator"]), name=f"commutator[n={n}]"))
        if lemma == "key":
            extra[f"n={n}"] = dg.key_lemma_terms(viscous, euler.final, n)
    return audits, extra
