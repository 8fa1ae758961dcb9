"""Dyadic partition of unity and the Littlewood-Paley operators built on it.

The annulus profile is ``phi(xi) = chi(|xi|/2) - chi(|xi|)`` where ``chi`` is a
C-infinity smoothstep equal to 1 on ``r <= 3/4`` and 0 on ``r >= 4/3``.  All
operators are exact Fourier multipliers on the grid lattice.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

from .audit import InequalityAudit
from .errors import DegenerateBlock, NonZeroMean
from .spectral import Field, Grid, SpectralField, VectorField, apply_multiplier, gradient, sup_norm

INNER = 3.0 / 4.0
OUTER = 4.0 / 3.0


def _bump(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smoothstep(r):
    """``chi(r)``: 1 for r <= 3/4, 0 for r >= 4/3, smooth and decreasing between."""
    t = (OUTER - np.asarray(r, dtype=float)) / (OUTER - INNER)
    a, b = _bump(t), _bump(1.0 - t)
    return a / (a + b)


def annulus_profile(r):
    """``phi`` as a function of ``|xi|``; supported in [3/4, 8/3]."""
    r = np.asarray(r, dtype=float)
    return smoothstep(r / 2.0) - smoothstep(r)


@dataclass(frozen=True, eq=False)
class DyadicPartition:
    grid: Grid
    j_min: int
    j_max: int
    blocks: dict[int, np.ndarray]
    low_pass: dict[int, np.ndarray]

    @property
    def active(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def phi(self, j: int) -> np.ndarray:
        table = self.blocks.get(j)
        if table is None:
            return np.zeros(self.grid.shape)
        return table

    def psi(self, n: int) -> np.ndarray:
        """Multiplier of ``S_n``: ``1 - sum_{j >= n} phi_j`` on the lattice."""
        if n > self.j_max:
            return np.ones(self.grid.shape)
        return self.low_pass[max(n, self.j_min)]

    def inhomogeneous(self, j: int) -> np.ndarray:
        if j < -1:
            return np.zeros(self.grid.shape)
        if j == -1:
            return self.psi(0)
        return self.phi(j)

    @property
    def inhomogeneous_active(self) -> range:
        return range(-1, max(self.j_max, -1) + 1)


@lru_cache(maxsize=16)
def build_partition(grid: Grid) -> DyadicPartition:
    kmax, kmin = grid.max_frequency, grid.min_frequency
    j_max = math.floor(math.log2(kmax / INNER))
    j_min = math.ceil(math.log2(kmin / (2 * OUTER)))
    knorm = grid.k_norm
    blocks = {}
    for j in range(j_min, j_max + 1):
        table = annulus_profile(knorm * 2.0**-j)
        table.flags.writeable = False
        blocks[j] = table
    low_pass = {}
    tail = np.zeros(grid.shape)
    for n in range(j_max, j_min - 1, -1):
        tail = tail + blocks[n]
        table = 1.0 - tail
        table.flags.writeable = False
        low_pass[n] = table
    return DyadicPartition(grid, j_min, j_max, blocks, low_pass)


def _each(F: Field, fn):
    if isinstance(F, VectorField):
        return F.map(fn)
    return fn(F)


def homo_block(F: Field, j: int):
    """Homogeneous block: multiply by ``phi(2^-j xi)``."""
    part = build_partition(F.grid)
    return _each(F, lambda f: apply_multiplier(f, part.phi(j)))


def inhom_block(F: Field, j: int):
    """Inhomogeneous block: ``psi_0`` for j = -1, zero below, ``phi_j`` above."""
    part = build_partition(F.grid)
    return _each(F, lambda f: apply_multiplier(f, part.inhomogeneous(j)))


def low_pass(F: Field, n: int):
    """``S_n``: multiply by ``psi_n``."""
    part = build_partition(F.grid)
    return _each(F, lambda f: apply_multiplier(f, part.psi(n)))


def high_pass(F: Field, n: int):
    """``Id - S_n``."""
    part = build_partition(F.grid)
    return _each(F, lambda f: apply_multiplier(f, 1.0 - part.psi(n)))


@dataclass(frozen=True)
class BesovSpec:
    """Index triple of a homogeneous Besov space; only p = q = inf is implemented."""

    s: float
    p: float = math.inf
    q: float = math.inf

    def __post_init__(self):
        if self.p != math.inf or self.q != math.inf:
            raise ValueError("only the B^s_{inf,inf} scale is implemented")


def _mean_check(F: Field):
    for f in (F.components if isinstance(F, VectorField) else (F,)):
        if abs(f.mean) > 1e-12 * max(sup_norm(f), 1e-300):
            raise NonZeroMean(f"homogeneous norm of a field with mean {f.mean!r}")


def besov_norm(F: Field, spec: BesovSpec | float, ignore_mean: bool = False) -> float:
    """``sup_j 2^{js} ||Delta_j F||_inf`` over the lattice-active blocks.

    For ``s <= 0`` a nonzero mean raises :class:`NonZeroMean` unless
    ``ignore_mean`` is set, in which case the (invisible) mean is simply dropped.
    """
    s = spec.s if isinstance(spec, BesovSpec) else float(spec)
    if s <= 0 and not ignore_mean:
        _mean_check(F)
    part = build_partition(F.grid)
    best = 0.0
    for j in part.active:
        best = max(best, 2.0 ** (j * s) * sup_norm(homo_block(F, j)))
    return best


def zygmund_norm(F: Field, s: float) -> float:
    """``sup_{j >= -1} 2^{js} ||Delta_j F||_inf`` with the inhomogeneous blocks."""
    part = build_partition(F.grid)
    best = 0.0
    for j in part.inhomogeneous_active:
        best = max(best, 2.0 ** (j * s) * sup_norm(inhom_block(F, j)))
    return best


def bernstein_audit(F: SpectralField, j: int, bound: float = 4.0) -> InequalityAudit:
    block = homo_block(F, j)
    size = sup_norm(block)
    if size < 1e-14:
        raise DegenerateBlock(f"block {j} has sup norm {size:.3e}")
    grad = sup_norm(gradient(block))
    return InequalityAudit.measure(
        f"bernstein[j={j}]", grad, {"scaled_block": 2.0**j * size},
        ceiling=bound, floor=1.0 / bound,
    )
