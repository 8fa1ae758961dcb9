"""Measured audits of the inequalities behind the vanishing-viscosity estimate.

Every audit reports the smallest constant consistent with the data rather
than assuming one; pass/fail is decided against a configurable ceiling.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy.optimize import brentq

from .audit import InequalityAudit
from .errors import GridMismatch
from .flow_solver import FlowState, Trajectory, heat_semigroup, velocity_nonlinearity
from .littlewood_paley import besov_norm, build_partition, high_pass, homo_block, low_pass, zygmund_norm
from .paraproduct import commutator_value, low_pass_remainder_tau
from .spectral import (
    SpectralField,
    VectorField,
    gradient,
    biot_savart,
    multiply,
    sup_norm,
)


@dataclass(frozen=True)
class ErrorDecomposition:
    n: int
    low: float
    mid: float
    tail: float
    total: float

    @property
    def bound(self) -> float:
        return self.low + self.mid + self.tail


def three_term_split(v_nu: VectorField, v: VectorField, n: int) -> ErrorDecomposition:
    """Split ``v_nu - v`` at frequency ``2^-n`` around ``v_n = S_n v``."""
    if v_nu.grid != v.grid:
        raise GridMismatch(f"{v_nu.grid} vs {v.grid}")
    v_n = low_pass(v, n)
    return ErrorDecomposition(
        n=n,
        low=sup_norm(low_pass(v_nu - v, -n)),
        mid=sup_norm(high_pass(v_nu - v_n, -n)),
        tail=sup_norm(high_pass(v_n - v, -n)),
        total=sup_norm(v_nu - v),
    )


def gauss_lemma_audit(u: SpectralField, t: float, nu: float, delta: float, alpha: float,
                      ceiling: float = 2.0) -> InequalityAudit:
    """Heat-semigroup modulus of continuity against a Gaussian tail plus a Hölder term."""
    if not (t > 0 and nu > 0 and delta > 0):
        raise ValueError("gauss lemma audit needs t, nu, delta > 0")
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    lhs = sup_norm(heat_semigroup(u, t, nu) - u)
    rhs = {
        "tail": sup_norm(u) * math.exp(-delta**2 / (4.0 * nu * t)),
        "holder": delta**alpha * zygmund_norm(u, alpha),
    }
    return InequalityAudit.measure("gauss", lhs, rhs, ceiling, time=t)


def _velocity_gradient_entries(v: VectorField):
    for comp in v:
        yield from gradient(comp)


def cz_audit(omega: SpectralField, ceiling: float = 10.0) -> InequalityAudit:
    """Blockwise ``||D_j grad v|| <= C ||D_j omega||``; reports the worst block."""
    v = biot_savart(omega)
    grads = list(_velocity_gradient_entries(v))
    part = build_partition(omega.grid)
    worst = (0.0, 0.0, 0.0)
    rows = []
    for j in part.active:
        rhs = sup_norm(homo_block(omega, j))
        lhs = max(sup_norm(homo_block(g, j)) for g in grads)
        rows.append((lhs, rhs))
    scale = max((r for _, r in rows), default=0.0)
    for lhs, rhs in rows:
        if rhs > 1e-12 * scale and rhs > 0:
            ratio = lhs / rhs
            if ratio > worst[0]:
                worst = (ratio, lhs, rhs)
    return InequalityAudit.measure("cz", worst[1], {"block_vorticity": worst[2]}, ceiling)


def c1_norm_audit(traj: Trajectory, ceiling: float = 10.0, rate: float = 1.0) -> InequalityAudit:
    """``||v(t)||_{C^1_*}`` against ``||v0|| exp(rate t ||omega0||) + ||omega0||``.

    Requires the ``zygmund_v_1`` monitor; the worst monitor time is reported.
    """
    norms = traj.monitor_series("zygmund_v_1")
    times = traj.monitor_series("time")
    w0 = traj.monitors[0]["sup_omega"]
    v0 = traj.monitors[0]["sup_v"]
    best = None
    for t, lhs in zip(times, norms):
        audit = InequalityAudit.measure(
            "c1_norm", lhs, {"growth": v0 * math.exp(rate * t * w0), "vorticity": w0}, ceiling, time=float(t))
        if best is None or audit.implied_constant > best.implied_constant:
            best = audit
    return best


def max_principle_audit(traj: Trajectory, tolerance: float = 1e-6) -> InequalityAudit:
    """Largest sampled ``sup|omega(t)|`` against the off-grid peak of ``omega0``."""
    sups = traj.monitor_series("sup_omega")
    i = int(np.argmax(sups))
    peak = traj.monitors[0].get("omega0_peak", sups[0])
    return InequalityAudit.measure("max_principle", sups[i], {"initial": peak},
                                   1.0 + tolerance, time=float(traj.monitors[i]["time"]))


def velocity_bound_audit(traj: Trajectory, constant: float = 3.0) -> InequalityAudit:
    """Measured constant ``K`` in ``||v(t)|| <= K ||v0|| exp(constant t ||omega0||)``."""
    w0 = traj.monitors[0]["sup_omega"]
    v0 = traj.monitors[0]["sup_v"]
    best = None
    for m in traj.monitors:
        audit = InequalityAudit.measure("velocity_exp_bound", m["sup_v"],
                                        {"growth": v0 * math.exp(constant * m["time"] * w0)},
                                        constant, time=float(m["time"]))
        if best is None or audit.implied_constant > best.implied_constant:
            best = audit
    return best


def low_frequency_decay_audit(v: VectorField, n: int, ceiling: float = 10.0) -> InequalityAudit:
    """``||S_{-n} P div(v (x) v)|| <= C 2^-n ||v||^2`` by direct spectral evaluation."""
    lhs = sup_norm(low_pass(velocity_nonlinearity(v), -n))
    return InequalityAudit.measure("low_frequency", lhs, {"decay": 2.0**-n * sup_norm(v) ** 2}, ceiling)


def _commutator_sup(v_n: VectorField, w: SpectralField) -> float:
    part = build_partition(w.grid)
    return max(2.0**-j * sup_norm(commutator_value(j, v_n, w)) for j in part.active)


def _componentwise_besov(F, s: float) -> float:
    comps = F.components if isinstance(F, VectorField) else (F,)
    return max(besov_norm(c, s, ignore_mean=True) for c in comps)


def key_lemma_terms(v_nu_state: FlowState, v_state: FlowState, n: int) -> dict[str, float]:
    """Right-hand quantities of the high-frequency estimate for ``omega_nu - S_n omega``.

    Keys ``initial, advect, visc, tau, comm`` are the five terms; ``advect_linf``
    is the L-infinity size of the advected product and ``advect_ratio`` its
    Besov-to-sup ratio, the measured embedding constant.
    """
    if v_nu_state.grid != v_state.grid:
        raise GridMismatch(f"{v_nu_state.grid} vs {v_state.grid}")
    omega, v = v_state.omega, v_state.velocity
    omega_nu, v_nu = v_nu_state.omega, v_nu_state.velocity
    omega_n, v_n = low_pass(omega, n), low_pass(v, n)
    omega_bar = omega_nu - omega_n
    v_bar = v_nu - v_n
    product = v_bar.map(lambda c: multiply(c, omega_nu))
    advect = _componentwise_besov(product, 0.0)
    advect_linf = sup_norm(product)
    return {
        "initial": besov_norm(omega_bar, -1.0),
        "advect": advect,
        "visc": v_nu_state.nu * besov_norm(gradient(omega_n), 0.0),
        "tau": _componentwise_besov(low_pass_remainder_tau(v, omega, n), 0.0),
        "comm": _commutator_sup(v_n, omega_bar),
        "advect_linf": advect_linf,
        "advect_ratio": advect / advect_linf if advect_linf > 0 else 0.0,
    }


def commutator_lemma_audit(v_state: FlowState, omega_bar: SpectralField, n: int, alpha: float,
                           ceiling: float = 10.0) -> InequalityAudit:
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    v_n = low_pass(v_state.velocity, n)
    lhs = _commutator_sup(v_n, omega_bar)
    rhs = {"decay": 2.0 ** (-n * alpha), "besov": n * besov_norm(omega_bar, -1.0)}
    return InequalityAudit.measure("commutator", lhs, rhs, ceiling, time=v_state.t)


# convergence-rate bound -------------------------------------------------------

def _log_theorem_bound(nu, T, alpha, C, C1):
    nu = np.asarray(nu, dtype=float)
    return (math.log(C) + math.log(T + 1.0) + C1 * T + 0.5 * alpha * np.log(nu)
            + C * math.expm1(C1 * T) * (-0.5 * np.log2(nu)))


def theorem_bound(nu, T: float, alpha: float, C: float, C1: float):
    """``C (T+1) e^{C1 T} nu^{alpha/2} (e^{C (e^{C1 T} - 1)})^{-log2(nu)/2}``."""
    return np.exp(_log_theorem_bound(nu, T, alpha, C, C1))


def technical_bound(n, t: float, alpha: float, C: float, C1: float):
    """The same bound written in the cutoff index, ``nu = 2^{-2n}`` (without the T+1 factor)."""
    n = np.asarray(n, dtype=float)
    return C * math.exp(C1 * t) * 2.0 ** (-n * alpha) * np.exp(C * n * math.expm1(C1 * t))


def _successful(sweep):
    return [r for r in sweep.records if not r.failed]


def theorem_bound_evaluator(sweep, alpha: float, C: float, C1: float) -> list[float]:
    """Ratio measured error / bound for every successful record of ``sweep``."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    recs = _successful(sweep)
    nus = np.array([r.nu for r in recs])
    errs = np.array([r.error_sup for r in recs])
    with np.errstate(divide="ignore"):
        log_ratio = np.log(errs) - _log_theorem_bound(nus, sweep.T, alpha, C, C1)
    return [float(x) for x in np.exp(log_ratio)]


def fit_theorem_constants(sweep, alpha: float, C1: float | None = None) -> tuple[float, float]:
    """Smallest ``C`` (with ``C1 = sup|omega0|`` unless given) making every ratio <= 1."""
    recs = _successful(sweep)
    if C1 is None:
        C1 = sweep.omega0_sup
    nus = np.array([r.nu for r in recs])
    errs = np.array([r.error_sup for r in recs])
    if not np.all(errs > 0):
        raise ValueError("theorem constants need strictly positive errors")

    def worst(log_c):
        return float(np.max(np.log(errs) - _log_theorem_bound(nus, sweep.T, alpha, math.exp(log_c), C1)))

    lo, hi = -50.0, 50.0
    root = brentq(worst, lo, hi, xtol=1e-14)
    C = math.exp(root) * (1.0 + 1e-9)
    while worst(math.log(C)) > 0:
        C *= 1.0 + 1e-9
    return C, C1
