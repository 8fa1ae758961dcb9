import numpy as np
import pytest

from vvlab.spectral import Grid, SpectralField


def random_field(grid, rng, k_max=None, decay=1.0, mean_free=True):
    """Real random field, band-limited under the 2/3 cutoff (or |k| <= k_max)."""
    mask = grid.dealias_mask.copy()
    if k_max is not None:
        mask &= grid.k_norm <= k_max * grid.scale
    if mean_free:
        mask &= grid.k_norm > 0
    coeffs = np.zeros(grid.shape, dtype=complex)
    amp = (1.0 + grid.k_norm[mask]) ** -decay
    coeffs[mask] = amp * (rng.standard_normal(mask.sum()) + 1j * rng.standard_normal(mask.sum()))
    # Hermitian part: c(k) -> (c(k) + conj(c(-k))) / 2 keeps the band exact
    mirrored = np.roll(np.flip(coeffs, axis=(0, 1)), 1, axis=(0, 1))
    return SpectralField(grid, 0.5 * (coeffs + np.conj(mirrored)), True)


@pytest.fixture
def grid64():
    return Grid(64)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


_ACCEPTANCE = {}


def record_criterion(label, passed, detail=""):
    _ACCEPTANCE[label] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[label]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}")
