import numpy as np
from numpy.testing import assert_allclose, assert_array_equal
from django.test import SimpleTestCase

from Main.exceptions import FilterError, NonFiniteError, ShapeError, SpectrumError
from .arrays import inner, norm
from .convolution import CirculantMap, circulant_adjoint, circulant_apply, embed_kernel, uniform_kernel
from .fourier import ComplexSpectrum, dft, energy, idft, is_hermitian_mask, self_conjugate_mask
from .frames import FrameSpec, TightFrame, analysis_matrix, check_orthonormal_filter, frame_analysis, frame_synthesis
from .gradients import (
    GradientMap,
    HaarBlockMap,
    gradient_ops,
    h_function,
    haar_block_adjoint,
    haar_block_apply,
    total_variation,
)
from .linear import DenseMap, adjoint_mismatch, check_adjoint, semi_orthogonality_constant


def naive_dft(x):
    n = x.size
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) @ x


def naive_circular_convolution(kernel, x):
    rows, cols = x.shape
    out = np.zeros_like(x)
    for k in range(rows):
        for l in range(cols):
            for m in range(rows):
                for n in range(cols):
                    out[k, l] += kernel[m, n] * x[(k - m) % rows, (l - n) % cols]
    return out


class FourierTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(7)

    def test_impulse_has_flat_spectrum(self):
        x = np.zeros(8)
        x[0] = 1.0
        assert_allclose(dft(x).data, np.ones(8))

    def test_constant_concentrates_at_dc(self):
        expected = np.zeros(8)
        expected[0] = 8.0
        assert_allclose(dft(np.ones(8)).data, expected, atol=1e-12)

    def test_round_trip_and_naive_oracle(self):
        x = self.rng.standard_normal(16)
        spectrum = dft(x)
        assert_allclose(spectrum.data, naive_dft(x), atol=1e-10)
        assert_allclose(idft(spectrum), x, atol=1e-12)

    def test_parseval(self):
        x = self.rng.standard_normal((8, 8))
        self.assertAlmostEqual(energy(dft(x)), norm(x) ** 2, delta=1e-10 * norm(x) ** 2)

    def test_general_length_falls_back(self):
        x = self.rng.standard_normal(12)
        assert_allclose(idft(dft(x)), x, atol=1e-12)

    def test_non_finite_input_rejected(self):
        with self.assertRaises(NonFiniteError):
            dft(np.array([1.0, np.nan]))

    def test_non_hermitian_spectrum_rejected(self):
        with self.assertRaises(SpectrumError):
            ComplexSpectrum(np.array([1.0, 1j, 0.0, 0.0]))
        with self.assertRaises(SpectrumError):
            idft(np.array([1.0, 1j, 0.0, 0.0]))

    def test_masks(self):
        mask = np.zeros(8, dtype=bool)
        mask[[1, 7]] = True
        self.assertTrue(is_hermitian_mask(mask))
        mask[7] = False
        self.assertFalse(is_hermitian_mask(mask))
        assert_array_equal(np.flatnonzero(self_conjugate_mask((8,))), [0, 4])


class CirculantTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(11)

    def test_delta_kernel_is_identity(self):
        x = self.rng.standard_normal(8)
        delta = np.zeros(8)
        delta[0] = 1.0
        assert_allclose(circulant_apply(delta, x), x, atol=1e-14)
        assert_allclose(circulant_apply(np.ones((1, 1)), x.reshape(2, 4)), x.reshape(2, 4), atol=1e-14)

    def test_three_tap_average(self):
        out = circulant_apply(np.full(3, 1.0 / 3.0), np.array([3.0, 0.0, 0.0]))
        assert_allclose(out, np.ones(3), atol=1e-14)

    def test_matches_naive_convolution(self):
        kernel = self.rng.standard_normal((3, 3))
        x = self.rng.standard_normal((8, 8))
        oracle = naive_circular_convolution(embed_kernel(kernel, x.shape), x)
        assert_allclose(circulant_apply(kernel, x), oracle, atol=1e-10)

    def test_kernel_centre_moves_to_origin(self):
        embedded = embed_kernel(np.arange(1.0, 10.0).reshape(3, 3), (6, 6))
        self.assertEqual(embedded[0, 0], 5.0)
        self.assertEqual(embedded[-1, -1], 1.0)
        self.assertEqual(embedded[1, 1], 9.0)

    def test_adjoint_consistency(self):
        operator = CirculantMap(uniform_kernel(3), (8, 8))
        self.assertLess(adjoint_mismatch(operator), 1e-10)
        x = self.rng.standard_normal((8, 8))
        assert_allclose(operator.adjoint(x), circulant_adjoint(uniform_kernel(3), x), atol=1e-12)

    def test_uniform_kernel_validation(self):
        self.assertAlmostEqual(uniform_kernel(7).sum(), 1.0)
        with self.assertRaises(ShapeError):
            uniform_kernel(4)

    def test_shape_mismatch(self):
        operator = CirculantMap(uniform_kernel(3), (8, 8))
        with self.assertRaises(ShapeError):
            operator.apply(np.zeros((4, 4)))


class LinearMapTests(SimpleTestCase):
    def test_composition_and_adjoint(self):
        rng = np.random.default_rng(3)
        a = DenseMap(rng.standard_normal((5, 4)))
        b = DenseMap(rng.standard_normal((4, 6)))
        check_adjoint(a @ b)
        check_adjoint((a @ b).H)
        check_adjoint(2.0 * a)

    def test_semi_orthogonality_of_scaled_rotation(self):
        q, _ = np.linalg.qr(np.random.default_rng(4).standard_normal((6, 6)))
        operator = DenseMap(np.sqrt(3.0) * q)
        self.assertAlmostEqual(semi_orthogonality_constant(operator), 3.0, places=10)


class FrameTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(5)

    def test_symlet_filter_is_orthonormal(self):
        check_orthonormal_filter(FrameSpec().lowpass)
        with self.assertRaises(FilterError):
            FrameSpec(lowpass=(1.0, 1.0))

    def test_level_matrix_is_orthogonal(self):
        w = analysis_matrix(16, FrameSpec().lowpass)
        assert_allclose(w @ w.T, np.eye(16), atol=1e-12)

    def test_haar_constant_image(self):
        spec = FrameSpec.haar()
        y = np.full((4, 4), 3.0)
        coefficients = frame_analysis(spec, y)
        assert_allclose(coefficients[:2, :2], np.full((2, 2), 6.0))
        self.assertAlmostEqual(norm(coefficients[:2, :2]), norm(coefficients))
        assert_allclose(frame_synthesis(spec, coefficients), spec.kappa * y)

    def test_symlet_frame_is_tight(self):
        frame = TightFrame(FrameSpec(), (32, 32))
        self.assertEqual(frame.kappa, 4)
        self.assertLessEqual(frame.tightness_error(trials=10), 1e-8)

    def test_frame_adjoint(self):
        frame = TightFrame(FrameSpec(levels=2), (16, 16))
        self.assertLess(adjoint_mismatch(frame, trials=20), 1e-10)
        self.assertAlmostEqual(semi_orthogonality_constant(frame.H), 4.0, places=8)

    def test_analysis_synthesis_is_scaled_projection(self):
        frame = TightFrame(FrameSpec(levels=2), (16, 16))
        c = self.rng.standard_normal(frame.output_shape)
        projected = frame.apply(frame.adjoint(c)) / frame.kappa
        assert_allclose(frame.apply(frame.adjoint(projected)) / frame.kappa, projected, atol=1e-10)

    def test_indivisible_shape(self):
        with self.assertRaises(ShapeError):
            TightFrame(FrameSpec(levels=4), (24, 24))


class GradientTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(9)

    def test_constant_image(self):
        g0, g1, g1t, g2 = gradient_ops(np.full((4, 4), 2.5))
        assert_allclose(g0, 5.0)
        for g in (g1, g1t, g2):
            assert_allclose(g, 0.0)

    def test_vertical_ramp(self):
        ramp = np.repeat(np.arange(4.0)[:, None], 4, axis=1)
        _, g1, _, _ = gradient_ops(ramp)
        assert_allclose(g1[:3], 1.0)
        assert_allclose(g1[3], 1.0 - 4)

    def test_stencils_match_direct_evaluation(self):
        y = self.rng.standard_normal((8, 8))
        g0, g1, g1t, g2 = gradient_ops(y)
        n = 8
        for k in range(n):
            for l in range(n):
                a, b = y[k, l], y[k, (l + 1) % n]
                c, d = y[(k + 1) % n, l], y[(k + 1) % n, (l + 1) % n]
                self.assertAlmostEqual(g0[k, l], (a + b + c + d) / 2, delta=1e-12)
                self.assertAlmostEqual(g1[k, l], (d - b + c - a) / 2, delta=1e-12)
                self.assertAlmostEqual(g2[k, l], (d - b - c + a) / 2, delta=1e-12)
        assert_allclose(g1t, gradient_ops(y.T)[1].T, atol=1e-12)

    def test_gradient_maps_adjoint(self):
        for which in range(4):
            self.assertLess(adjoint_mismatch(GradientMap(which, (8, 8)), trials=20), 1e-10)

    def test_haar_blocks_orthogonal(self):
        y = self.rng.standard_normal((8, 8))
        v = self.rng.standard_normal((8, 8))
        for i in range(4):
            assert_allclose(haar_block_adjoint(i, haar_block_apply(i, y)), y, atol=1e-10)
            assert_allclose(haar_block_apply(i, haar_block_adjoint(i, v)), v, atol=1e-10)
            self.assertAlmostEqual(
                inner(haar_block_apply(i, y), v), inner(y, haar_block_adjoint(i, v)), delta=1e-12
            )
            check_adjoint(HaarBlockMap(i, (8, 8)))

    def test_haar_block_of_constant(self):
        for i in range(4):
            out = haar_block_apply(i, np.full((6, 6), 1.5))
            assert_allclose(out[:3, :3], 3.0)
            out[:3, :3] = 0.0
            assert_allclose(out, 0.0)

    def test_total_variation_splits_over_phases(self):
        y = self.rng.standard_normal((8, 8))
        split = sum(h_function(haar_block_apply(i, y)) for i in range(4))
        self.assertAlmostEqual(total_variation(y), split, delta=1e-10)

    def test_odd_side_rejected(self):
        with self.assertRaises(ShapeError):
            haar_block_apply(0, np.zeros((5, 5)))
