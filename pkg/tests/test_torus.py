"""Domain, Fourier calculus and heat-flow contracts."""

import json
import pathlib

import numpy as np
import pytest

from dklab import (
    FourierFunction,
    TorusDomain,
    carre_du_champ,
    generator_L,
    heat_semigroup,
    product,
    random_fourier_suite,
    wrap,
)
from oracles import gamma_by_defining_identity

FIXTURES = pathlib.Path(__file__).parent / "fixtures" / "frozen.json"


@pytest.fixture(scope="module")
def frozen():
    return json.loads(FIXTURES.read_text())


def grid(n=1024):
    return np.arange(n) / n


class TestTorusDomain:
    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError):
            TorusDomain(100)

    def test_rejects_too_small(self):
        with pytest.raises(ValueError):
            TorusDomain(4)

    def test_wrap_reduces_mod_one(self):
        x = np.array([-0.25, 0.0, 1.25, 3.5])
        assert np.allclose(wrap(x), [0.75, 0.0, 0.25, 0.5])


class TestFourierFunction:
    def test_evaluation_is_exact(self):
        f = FourierFunction.from_modes(mean=2.0, cos={1: 0.5}, sin={3: -0.25})
        x = grid()
        expected = 2.0 + 0.5 * np.cos(2 * np.pi * x) - 0.25 * np.sin(6 * np.pi * x)
        assert np.allclose(f.evaluate(x), expected, atol=1e-14)

    def test_sample_matches_evaluate(self):
        dom = TorusDomain(64)
        f = FourierFunction.from_modes(mean=1.0, cos={2: 0.3}, sin={5: 0.7})
        assert np.allclose(f.sample(dom), f.evaluate(dom.grid()), atol=1e-13)

    def test_from_grid_roundtrip(self):
        dom = TorusDomain(128)
        f = FourierFunction.from_modes(mean=0.2, cos={1: 1.0, 7: 0.1}, sin={3: -0.4})
        g = FourierFunction.from_grid(f.sample(dom))
        assert abs(g.mean - f.mean) < 1e-14
        assert np.allclose(g.cos_coeffs[:7], f.cos_coeffs, atol=1e-13)

    def test_product_is_exact(self):
        f = FourierFunction.from_modes(cos={1: 1.0})
        fg = product(f, f)  # cos^2 = 1/2 + cos(2.)/2
        assert abs(fg.mean - 0.5) < 1e-14
        assert abs(fg.cos_coeffs[1] - 0.5) < 1e-14
        assert np.all(np.abs(fg.sin_coeffs) < 1e-14)


class TestGenerator:
    def test_constant_maps_to_zero(self):
        out = generator_L(FourierFunction.constant(5.0))
        assert out.mean == 0.0
        assert np.allclose(out.evaluate(grid()), 0.0)

    def test_cos_eigenfunction(self):
        f = FourierFunction.from_modes(cos={1: 1.0})
        out = generator_L(f)
        assert np.allclose(out.evaluate(grid()), -4 * np.pi**2 * np.cos(2 * np.pi * grid()), atol=1e-10)

    def test_sin_two_eigenfunction(self):
        f = FourierFunction.from_modes(sin={2: 1.0})
        out = generator_L(f)
        assert np.allclose(out.evaluate(grid()), -16 * np.pi**2 * np.sin(4 * np.pi * grid()), atol=1e-9)

    def test_laplacian_has_zero_mean(self):
        for f in random_fourier_suite(3, 5):
            assert generator_L(f).mean == 0.0


class TestHeatSemigroup:
    def test_constant_fixed_point(self):
        dom = TorusDomain(64)
        f = FourierFunction.constant(3.3)
        for t in (0.0, 0.1, 2.0):
            out = heat_semigroup(dom, f, 1.0, t)
            assert out.mean == 3.3
            assert np.allclose(out.evaluate(grid()), 3.3)

    def test_eigenfunction_decay(self):
        dom = TorusDomain(64)
        f = FourierFunction.from_modes(cos={1: 1.0})
        t = 0.13
        out = heat_semigroup(dom, f, 1.0, t)
        assert abs(out.cos_coeffs[0] - np.exp(-2 * np.pi**2 * t)) < 1e-15

    def test_negative_time_rejected(self):
        dom = TorusDomain(64)
        with pytest.raises(ValueError):
            heat_semigroup(dom, FourierFunction.constant(1.0), 1.0, -0.1)

    def test_matches_fd_oracle(self, frozen):
        # frozen explicit-Euler solve on 4096 cells (see make_fixtures.py)
        dom = TorusDomain(4096)
        f = FourierFunction.from_modes(cos={1: 1.0}, sin={2: 1.0})
        out = heat_semigroup(dom, f, diffusivity=2.0, t=0.1)
        ref = frozen["heat_fd"]
        assert abs(out.mean - ref["mean"]) < 1e-6
        assert abs(out.cos_coeffs[0] - ref["a1"]) < 1e-6
        assert abs(out.sin_coeffs[1] - ref["b2"]) < 1e-6
        assert abs(out.sin_coeffs[0] - ref["b1"]) < 1e-6
        assert abs(out.cos_coeffs[1] - ref["a2"]) < 1e-6

    def test_semigroup_property_exact_on_coefficients(self):
        dom = TorusDomain(64)
        for f in random_fourier_suite(11, 4):
            one = heat_semigroup(dom, heat_semigroup(dom, f, 1.7, 0.03), 1.7, 0.07)
            two = heat_semigroup(dom, f, 1.7, 0.10)
            denom = np.maximum(np.abs(two.cos_coeffs), 1e-300)
            assert np.all(np.abs(one.cos_coeffs - two.cos_coeffs) / denom < 1e-12)
            denom = np.maximum(np.abs(two.sin_coeffs), 1e-300)
            assert np.all(np.abs(one.sin_coeffs - two.sin_coeffs) / denom < 1e-12)

    def test_mass_conservation(self):
        dom = TorusDomain(64)
        for f in random_fourier_suite(12, 6):
            assert heat_semigroup(dom, f, 2.5, 0.4).mean == f.mean


class TestCarreDuChamp:
    def test_constant_gives_zero(self):
        g = FourierFunction.from_modes(cos={2: 1.0})
        out = carre_du_champ(FourierFunction.constant(4.0), g)
        assert np.allclose(out.evaluate(grid()), 0.0, atol=1e-14)

    def test_sin_squared_gradient(self):
        f = FourierFunction.from_modes(sin={1: 1.0})
        out = carre_du_champ(f)
        x = grid()
        assert np.allclose(out.evaluate(x), 4 * np.pi**2 * np.cos(2 * np.pi * x) ** 2, atol=1e-9)

    def test_nonnegative(self):
        for f in random_fourier_suite(21, 6):
            lo, _ = carre_du_champ(f).extrema()
            assert lo >= -1e-10

    def test_defining_identity(self):
        # Gamma(f,g) = (1/2)(L(fg) - f Lg - g Lf), evaluated spectrally
        fs = random_fourier_suite(31, 3)
        gs = random_fourier_suite(32, 3)
        x = grid(2048)
        for f, g in zip(fs, gs):
            direct = carre_du_champ(f, g).evaluate(x)
            identity = gamma_by_defining_identity(f, g).evaluate(x)
            assert np.max(np.abs(direct - identity)) < 1e-10


class TestDiffusionAndGradientProperties:
    def test_diffusion_property_square(self):
        # L(f^2) = 2 f Lf + 2 Gamma f for psi(u) = u^2
        x = grid(2048)
        for f in random_fourier_suite(41, 5):
            lhs = generator_L(product(f, f)).evaluate(x)
            rhs = 2 * product(f, generator_L(f)).evaluate(x) + 2 * carre_du_champ(f).evaluate(x)
            assert np.max(np.abs(lhs - rhs)) < 1e-8

    def test_gradient_bound_flat_space(self):
        # Gamma(P_t f) <= P_t(Gamma f), pointwise, zero-curvature case
        dom = TorusDomain(128)
        x = grid(1024)
        rng = np.random.Generator(np.random.Philox(key=(51, 0)))
        for f in random_fourier_suite(51, 8):
            t = float(rng.uniform(0.001, 0.3))
            ptf = heat_semigroup(dom, f, 1.0, t)
            lhs = carre_du_champ(ptf).evaluate(x)
            rhs = heat_semigroup(dom, carre_du_champ(f), 1.0, t).evaluate(x)
            assert np.all(lhs <= rhs + 1e-10)
