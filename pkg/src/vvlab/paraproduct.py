"""Bony paraproduct calculus, block commutators and the tau_n / r_n remainders.

Products are accumulated in physical space and 2/3-rule truncated once at the
end; truncation is linear, so this equals the sum of dealiased products.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .littlewood_paley import build_partition, homo_block, low_pass
from .spectral import (
    SpectralField,
    VectorField,
    advect,
    apply_multiplier,
    check_divergence_free,
    dealias,
    divergence,
    forward_transform,
    inverse_transform,
    multiply,
    partial,
    sup_norm,
)


@dataclass(frozen=True)
class BonyDecomposition:
    t_fg: SpectralField
    t_gf: SpectralField
    remainder: SpectralField

    def total(self) -> SpectralField:
        return self.t_fg + self.t_gf + self.remainder


def _to_field(values: np.ndarray, like: SpectralField) -> SpectralField:
    return dealias(forward_transform(values, like.grid))


def _inhom_values(F: SpectralField) -> dict[int, np.ndarray]:
    part = build_partition(F.grid)
    return {j: inverse_transform(apply_multiplier(F, part.inhomogeneous(j)))
            for j in part.inhomogeneous_active}


def paraproduct(f: SpectralField, g: SpectralField) -> SpectralField:
    """``T_f g = sum_{j >= 1} S_{j-1} f * Delta_j g``."""
    part = build_partition(f.grid)
    acc = np.zeros(f.grid.shape)
    for j in range(1, part.j_max + 1):
        low = inverse_transform(apply_multiplier(f, part.psi(j - 1)))
        high = inverse_transform(apply_multiplier(g, part.phi(j)))
        acc = acc + low * high
    return _to_field(acc, f)


def remainder(f: SpectralField, g: SpectralField) -> SpectralField:
    """``R(f, g) = sum_{|i-j| <= 1} Delta_i f * Delta_j g``, symmetric bit-for-bit."""
    a, b = _inhom_values(f), _inhom_values(g)
    idx = sorted(a)
    acc = np.zeros(f.grid.shape)
    for i in idx:
        acc = acc + a[i] * b[i]
        if i + 1 in a:
            acc = acc + (a[i] * b[i + 1] + a[i + 1] * b[i])
    return _to_field(acc, f)


def bony_decompose(f: SpectralField, g: SpectralField) -> BonyDecomposition:
    return BonyDecomposition(paraproduct(f, g), paraproduct(g, f), remainder(f, g))


@dataclass(frozen=True)
class CommutatorReport:
    """``[Delta_j, v.grad] w`` and its three-piece paraproduct split.

    ``split`` holds, summed over components m: the commutator with ``T_{v^m} d_m``,
    the commutator with ``T_{d_m .} v^m`` and the commutator with
    ``d_m R(v^m, .)``.
    """

    j: int
    value: SpectralField
    split: tuple[SpectralField, SpectralField, SpectralField]


def commutator_value(j: int, v: VectorField, w: SpectralField) -> SpectralField:
    """``D_j(v.grad w) - v.grad(D_j w)`` with dealiased products."""
    return homo_block(advect(v, w), j) - advect(v, homo_block(w, j))


def commutator_block(j: int, v: VectorField, w: SpectralField) -> CommutatorReport:
    check_divergence_free(v)
    wj = homo_block(w, j)
    value = commutator_value(j, v, w)

    def block(F):
        return homo_block(F, j)

    para_low = None
    para_high = None
    rem = None
    for m, vm in enumerate(v):
        a = block(paraproduct(vm, partial(w, m))) - paraproduct(vm, partial(wj, m))
        b = block(paraproduct(partial(w, m), vm)) - paraproduct(partial(wj, m), vm)
        c = block(partial(remainder(vm, w), m)) - partial(remainder(vm, wj), m)
        para_low = a if para_low is None else para_low + a
        para_high = b if para_high is None else para_high + b
        rem = c if rem is None else rem + c
    return CommutatorReport(j, value, (para_low, para_high, rem))


def _product(v, omega: SpectralField):
    if isinstance(v, VectorField):
        return v.map(lambda c: multiply(c, omega))
    return multiply(v, omega)


def low_pass_remainder_tau(v, omega: SpectralField, n: int):
    """``tau_n = S_n(v omega) - (S_n v)(S_n omega)``; componentwise for vectors.

    Expanding the mollifier integral defining ``r_n`` with ``S_n f = psi_n^ * f``
    and unit mass of the kernel, the cross terms cancel and leave this form.
    """
    omega_n = low_pass(omega, n)
    return low_pass(_product(v, omega), n) - _product(low_pass(v, n), omega_n)


def mollifier_remainder_r(v, omega: SpectralField, n: int):
    """``r_n = tau_n + (v - v_n)(omega - omega_n)``."""
    v_hi = v - low_pass(v, n)
    omega_hi = omega - low_pass(omega, n)
    return low_pass_remainder_tau(v, omega, n) + _product(v_hi, omega_hi)


def localized_vorticity_residual(v: VectorField, omega: SpectralField, n: int, j: int,
                                 relative: bool = False) -> float:
    """Sup norm of LHS - RHS of the block-localised, low-passed Euler vorticity equation.

    With ``d_t omega = -v.grad omega`` substituted, the equation reads
    ``d_t D_j w_n + v_n.grad D_j w_n + [D_j, v_n.grad] w_n = -div D_j tau_n``.
    ``relative`` divides by ``sup |v.grad omega|``, the size of the unlocalised
    tendency, so blocks where every term vanishes do not amplify round-off.
    """
    check_divergence_free(v)
    v_n = low_pass(v, n)
    omega_n = low_pass(omega, n)
    tendency = advect(v, omega)
    d_t = -homo_block(low_pass(tendency, n), j)
    transport = advect(v_n, homo_block(omega_n, j))
    comm = commutator_value(j, v_n, omega_n)
    rhs = -divergence(homo_block(low_pass_remainder_tau(v, omega, n), j))
    resid = sup_norm(d_t + transport + comm - rhs)
    if not relative:
        return resid
    scale = sup_norm(tendency)
    return resid / scale if scale > 0 else resid
