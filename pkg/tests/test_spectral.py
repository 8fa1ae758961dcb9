import numpy as np
import pytest

from vvlab.errors import GridMismatch, NonZeroMean
from vvlab.spectral import (
    Grid,
    VectorField,
    biot_savart,
    constant,
    curl,
    dealias,
    divergence,
    forward_transform,
    from_function,
    gradient,
    helmholtz_project,
    inv_laplacian,
    inverse_transform,
    laplacian,
    multiply,
    partial,
    peak_norm,
    perp_gradient,
    restrict,
    sup_norm,
)

from conftest import random_field


class TestGrid:
    @pytest.mark.parametrize("n", [4, 12, 63, 100])
    def test_rejects_bad_sizes(self, n):
        with pytest.raises(ValueError):
            Grid(n)

    def test_lattice_is_symmetric(self, grid64):
        i1, i2 = grid64.index
        keys = set(zip(i1.ravel(), i2.ravel()))
        nyq = grid64.n_points // 2
        for a, b in keys:
            if abs(a) != nyq and abs(b) != nyq:
                assert (-a, -b) in keys

    def test_dealias_cutoff(self, grid64):
        i1, i2 = grid64.index
        kept = np.maximum(np.abs(i1), np.abs(i2))[grid64.dealias_mask]
        assert kept.max() == 21


class TestTransforms:
    def test_constant(self, grid64):
        F = forward_transform(np.full(grid64.shape, 3.0), grid64)
        expected = np.zeros(grid64.shape)
        expected[0, 0] = 3.0
        np.testing.assert_allclose(F.coeffs, expected, atol=1e-15)

    def test_single_cosine(self, grid64):
        F = from_function(grid64, lambda x, y: np.cos(x))
        assert F.coeffs[1, 0] == pytest.approx(0.5, abs=1e-15)
        assert F.coeffs[-1, 0] == pytest.approx(0.5, abs=1e-15)
        rest = F.coeffs.copy()
        rest[1, 0] = rest[-1, 0] = 0
        assert np.abs(rest).max() < 1e-15

    def test_round_trip(self, grid64, rng):
        f = rng.standard_normal(grid64.shape)
        back = inverse_transform(forward_transform(f, grid64))
        assert np.abs(back - f).max() <= 1e-12 * np.abs(f).max()

    def test_hermitian_for_real_input(self, grid64, rng):
        assert forward_transform(rng.standard_normal(grid64.shape), grid64).is_hermitian()

    def test_plancherel(self, grid64, rng):
        f = rng.standard_normal(grid64.shape)
        F = forward_transform(f, grid64)
        assert np.sum(np.abs(F.coeffs) ** 2) == pytest.approx(np.mean(f**2), rel=1e-12)

    def test_size_errors(self, grid64):
        with pytest.raises(ValueError):
            forward_transform(np.zeros((24, 24)))
        with pytest.raises(GridMismatch):
            forward_transform(np.zeros((32, 32)), grid64)


class TestOperators:
    def test_gradient_cos(self, grid64):
        x, y = grid64.coordinates
        g = gradient(from_function(grid64, lambda x, y: np.cos(x)))
        np.testing.assert_allclose(g.u1.values(), -np.sin(x), atol=1e-13)
        np.testing.assert_allclose(g.u2.values(), 0.0, atol=1e-13)

    def test_perp_gradient_cos_y(self, grid64):
        x, y = grid64.coordinates
        g = perp_gradient(from_function(grid64, lambda x, y: np.cos(y)))
        np.testing.assert_allclose(g.u1.values(), np.sin(y), atol=1e-13)
        np.testing.assert_allclose(g.u2.values(), 0.0, atol=1e-13)

    def test_second_derivatives_sum_to_laplacian(self, grid64, rng):
        F = random_field(grid64, rng)
        lhs = partial(partial(F, 0), 0) + partial(partial(F, 1), 1)
        assert sup_norm(lhs - laplacian(F)) <= 1e-12 * sup_norm(laplacian(F))

    def test_inv_laplacian_cos2x(self, grid64):
        x, _ = grid64.coordinates
        out = inv_laplacian(from_function(grid64, lambda x, y: np.cos(2 * x)))
        np.testing.assert_allclose(out.values(), -np.cos(2 * x) / 4, atol=1e-15)

    def test_inv_laplacian_rejects_mean(self, grid64):
        with pytest.raises(NonZeroMean):
            inv_laplacian(constant(grid64, 1.0))

    def test_inv_laplacian_round_trip(self, grid64, rng):
        F = random_field(grid64, rng)
        assert sup_norm(laplacian(inv_laplacian(F)) - F) <= 1e-12 * sup_norm(F)

    @pytest.mark.parametrize("fn,expected", [
        (lambda x, y: np.cos(x), lambda x, y: (0 * x, np.sin(x))),
        (lambda x, y: np.cos(y), lambda x, y: (-np.sin(y), 0 * y)),
    ])
    def test_biot_savart_single_modes(self, grid64, fn, expected):
        x, y = grid64.coordinates
        v = biot_savart(from_function(grid64, fn))
        e1, e2 = expected(x, y)
        np.testing.assert_allclose(v.u1.values(), e1, atol=1e-13)
        np.testing.assert_allclose(v.u2.values(), e2, atol=1e-13)

    def test_biot_savart_random(self, grid64):
        rng = np.random.default_rng(5)
        for _ in range(100):
            w = random_field(grid64, rng)
            v = biot_savart(w)
            scale = sup_norm(w)
            assert sup_norm(curl(v) - w) <= 1e-12 * scale
            assert sup_norm(divergence(v)) <= 1e-12 * scale

    def test_biot_savart_rejects_mean(self, grid64):
        with pytest.raises(NonZeroMean):
            biot_savart(constant(grid64, 0.3))

    def test_linearity(self, grid64, rng):
        F, G = random_field(grid64, rng), random_field(grid64, rng)
        a, b = 1.7, -0.4
        for op in (laplacian, inv_laplacian, lambda f: gradient(f).u1, lambda f: biot_savart(f).u2, dealias):
            lhs, rhs = op(a * F + b * G), a * op(F) + b * op(G)
            assert sup_norm(lhs - rhs) <= 1e-12 * max(sup_norm(op(F)), sup_norm(op(G)))

    def test_operators_preserve_hermitian_symmetry(self, grid64, rng):
        F = random_field(grid64, rng)
        for out in (laplacian(F), inv_laplacian(F), *gradient(F), *biot_savart(F), dealias(F)):
            assert out.is_hermitian()


class TestDealiasAndNorms:
    def test_band_limited_unchanged(self, grid64, rng):
        F = random_field(grid64, rng)
        np.testing.assert_array_equal(dealias(F).coeffs, F.coeffs)

    def test_removes_high_modes(self, grid64):
        F = from_function(grid64, lambda x, y: np.cos(25 * x))
        assert sup_norm(dealias(F)) < 1e-13

    def test_sup_norm_cos(self, grid64):
        assert sup_norm(from_function(grid64, lambda x, y: np.cos(x))) == pytest.approx(1.0, abs=1e-15)

    def test_sup_norm_homogeneous(self, grid64, rng):
        F = random_field(grid64, rng)
        for c in (-2.5, 0.1, 7.0):
            assert sup_norm(c * F) == pytest.approx(abs(c) * sup_norm(F), rel=1e-14)

    def test_product_matches_pointwise(self, grid64, rng):
        F, G = random_field(grid64, rng, k_max=10), random_field(grid64, rng, k_max=10)
        np.testing.assert_allclose(multiply(F, G).values(), F.values() * G.values(), atol=1e-12)

    def test_peak_norm_finds_off_grid_max(self):
        grid = Grid(8)
        F = from_function(grid, lambda x, y: np.cos(x - 0.3))
        assert sup_norm(F) < 1.0
        assert peak_norm(F) == pytest.approx(1.0, abs=1e-12)


class TestProjection:
    def test_kills_gradients(self, grid64, rng):
        g = gradient(random_field(grid64, rng))
        assert sup_norm(helmholtz_project(g)) <= 1e-12 * sup_norm(g)

    def test_idempotent(self, grid64, rng):
        V = VectorField(random_field(grid64, rng), random_field(grid64, rng))
        once = helmholtz_project(V)
        assert sup_norm(helmholtz_project(once) - once) <= 1e-12 * sup_norm(V)

    def test_keeps_divergence_free(self, grid64, rng):
        v = biot_savart(random_field(grid64, rng))
        assert sup_norm(helmholtz_project(v) - v) <= 1e-12 * sup_norm(v)


def test_restrict_round_trip(rng):
    small, big = Grid(32), Grid(64)
    F = random_field(small, rng)
    np.testing.assert_array_equal(restrict(restrict(F, big), small).coeffs, F.coeffs)
    assert peak_norm(F) >= sup_norm(F)
