import numpy as np
from numpy.testing import assert_allclose
from django.test import SimpleTestCase, override_settings

from Main.exceptions import InfeasibleSetError, NonOrthonormalBasisError, SemiOrthogonalityError, SpectrumError
from Operators.arrays import inner, norm
from Operators.convolution import CirculantMap
from Operators.frames import DEFAULT_SHIFTS, FrameSpec, TightFrame
from Operators.linear import DenseMap, IdentityMap
from oracle.references import prox_oracle, subgrad_check
from .base import Conjugate, ScaledSquaredNorm, ZeroFunction, moreau_conjugate_prox
from .catalog import (
    DistancePower,
    Indicator,
    L1Norm,
    PhiDistance,
    SemiOrthogonalComposition,
    Separable,
    SquaredResidual,
    distance_shrinkage,
    prox_distance_power,
    prox_l1,
    prox_phi_distance,
    prox_quadratic,
    prox_semiorthogonal,
    prox_separable,
)
from .projectors import (
    BoxMaskProjector,
    EnergyBallProjector,
    FourierMagnitudeProjector,
    FourierPhaseProjector,
    FourierZeroProjector,
    MeanHyperplaneProjector,
    PointProjector,
    SymmetryMidpointProjector,
    TimeMaskProjector,
    project_energy_ball,
    project_fourier_phase,
    project_mean_hyperplane,
)
from .scalar import AbsPower, ZeroScalar, solve_power_shrinkage
from .tv import TotalVariationBlock, prox_tv_block, prox_tv_i


def rotation(theta):
    return np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])


def assert_firmly_nonexpansive(case, operator, shape, pairs=100, seed=0, scale=3.0):
    rng = np.random.default_rng(seed)
    for _ in range(pairs):
        x = scale * rng.standard_normal(shape)
        y = scale * rng.standard_normal(shape)
        px, py = operator(x), operator(y)
        case.assertLessEqual(norm(px - py) ** 2, inner(x - y, px - py) + 1e-10)


class ScalarFunctionTests(SimpleTestCase):
    def test_soft_threshold(self):
        phi = AbsPower(1.0, 1.0)
        self.assertAlmostEqual(float(phi.prox(3.0)), 2.0)
        self.assertEqual(float(phi.prox(0.0)), 0.0)
        self.assertEqual(float(phi.prox(-0.5)), 0.0)

    def test_scalar_moreau_identity(self):
        t = np.linspace(-5, 5, 41)
        for p in (1.0, 1.5, 2.0, 3.0):
            phi = AbsPower(0.7, p)
            for gamma in (0.3, 1.0, 4.0):
                recomposed = phi.prox(t, gamma) + gamma * phi.conjugate_prox(t / gamma, 1.0 / gamma)
                assert_allclose(recomposed, t, atol=1e-12)

    def test_prox_is_odd(self):
        t = np.linspace(0.1, 4, 9)
        for p in (1.0, 1.5, 2.0, 2.5):
            phi = AbsPower(1.3, p)
            assert_allclose(phi.prox(-t), -phi.prox(t), atol=1e-14)

    def test_general_power_matches_closed_forms(self):
        rng = np.random.default_rng(1)
        for magnitude in rng.uniform(0, 10, 200):
            for p, phi in ((1.5, AbsPower(2.0, 1.5)), (2.0, AbsPower(2.0, 2.0))):
                self.assertAlmostEqual(solve_power_shrinkage(magnitude, 2.0, p), float(phi.prox(magnitude)), delta=1e-10)

    def test_zero_scalar(self):
        phi = ZeroScalar()
        self.assertEqual(float(phi.prox(2.5, 3.0)), 2.5)
        self.assertEqual(phi.max_subgrad_at_zero, 0.0)


class CatalogExampleTests(SimpleTestCase):
    def test_l1(self):
        assert_allclose(prox_l1(1.0, np.array([3.0, 0.0, -0.5])), [2.0, 0.0, 0.0])

    def test_separable_reduces_to_l1_and_identity(self):
        x = np.array([2.0, -0.3, 1.2])
        assert_allclose(prox_separable(np.eye(3), [AbsPower(1.0, 1.0)] * 3, x), prox_l1(1.0, x))
        assert_allclose(prox_separable(np.eye(3), [ZeroScalar()] * 3, x), x)

    def test_separable_in_rotated_basis(self):
        basis = rotation(0.7)
        x = np.array([1.5, -2.0])
        expected = basis.T @ prox_l1(1.0, basis @ x)
        assert_allclose(Separable(AbsPower(1.0, 1.0), basis=basis).prox(x), expected, atol=1e-12)
        with self.assertRaises(NonOrthonormalBasisError):
            Separable(AbsPower(), basis=np.array([[1.0, 0.0], [1.0, 1.0]]))

    def test_quadratic_identity(self):
        self.assertAlmostEqual(float(prox_quadratic(IdentityMap((1,)), np.zeros(1), 1.0, np.array([2.0]))[0]), 1.0)
        self.assertAlmostEqual(float(prox_quadratic(IdentityMap((1,)), np.array([3.0]), 1.0, np.array([1.0]))[0]), 2.0)

    def test_quadratic_circulant_matches_dense_solve(self):
        rng = np.random.default_rng(2)
        operator = CirculantMap(rng.standard_normal(3), (8,))
        dense = np.column_stack([operator.apply(e) for e in np.eye(8)])
        x, z, c = rng.standard_normal(8), rng.standard_normal(8), 0.8
        expected = np.linalg.solve(np.eye(8) + c * dense.T @ dense, x + c * dense.T @ z)
        assert_allclose(prox_quadratic(operator, z, 2.0, x, gamma=0.4), expected, atol=1e-10)
        generic = prox_quadratic(DenseMap(dense), z, 2.0, x, gamma=0.4)
        assert_allclose(generic, expected, atol=1e-8)

    def test_semiorthogonal_identity(self):
        f = L1Norm(0.5)
        x = np.array([1.0, -2.0, 0.2])
        assert_allclose(prox_semiorthogonal(f, IdentityMap((3,)), x, 1.3), f.prox(x, 1.3))

    def test_semiorthogonal_null_space_projection(self):
        rng = np.random.default_rng(3)
        q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        rows = q[:3]
        operator = DenseMap(np.sqrt(2.0) * rows)
        x = rng.standard_normal(6)
        p = SemiOrthogonalComposition(Indicator(PointProjector(np.zeros(3))), operator).prox(x)
        assert_allclose(p, x - rows.T @ (rows @ x), atol=1e-12)

    def test_semiorthogonal_rejects_general_map(self):
        with self.assertRaises(SemiOrthogonalityError):
            SemiOrthogonalComposition(L1Norm(), DenseMap(np.array([[1.0, 0.0], [1.0, 1.0]])))

    def test_frame_box_constraint_certificate(self):
        rng = np.random.default_rng(4)
        frame = TightFrame(FrameSpec.haar(levels=1, shifts=DEFAULT_SHIFTS), (8, 8))
        box = BoxMaskProjector(0.0, 1.0)
        f = SemiOrthogonalComposition(Indicator(box), frame.H)
        self.assertAlmostEqual(f.kappa, 4.0, places=8)
        x = 2.0 * rng.standard_normal(frame.output_shape)
        p = f.prox(x)
        self.assertTrue(box.contains(frame.adjoint(p), tol=1e-10))
        for _ in range(50):
            image = rng.uniform(0, 1, (8, 8))
            residual = rng.standard_normal(frame.output_shape)
            null_part = residual - frame.apply(frame.adjoint(residual)) / 4.0
            y = frame.apply(image) / 4.0 + null_part
            self.assertLessEqual(inner(y - p, x - p), 1e-10)

    def test_distance_power_examples(self):
        origin = PointProjector(np.zeros(1))
        self.assertAlmostEqual(float(prox_distance_power(origin, 1.0, 1.0, np.array([3.0]))[0]), 2.0)
        self.assertAlmostEqual(float(prox_distance_power(origin, 1.0, 1.0, np.array([0.5]))[0]), 0.0)
        self.assertAlmostEqual(float(prox_distance_power(origin, 1.0, 1.5, np.array([2.5]))[0]), 1.0, places=14)
        self.assertAlmostEqual(distance_shrinkage(2.5, 1.0, 1.5), 1.5, places=14)
        inside = np.array([0.2, 0.4])
        assert_allclose(prox_distance_power(BoxMaskProjector(0, 1), 3.0, 2.0, inside), inside)

    def test_three_halves_closed_form_matches_newton(self):
        rng = np.random.default_rng(5)
        for d in rng.uniform(0, 20, 1000):
            a = 10 ** rng.uniform(-1, 1)
            closed = distance_shrinkage(d, a, 1.5)
            newton = distance_shrinkage(d, a, 1.5, closed_form=False)
            self.assertAlmostEqual(closed, newton, delta=1e-10)

    def test_phi_distance_matches_distance_power(self):
        box = BoxMaskProjector(-1.0, 1.0)
        for p in (1.0, 1.5, 2.0):
            for value in np.linspace(-6, 6, 49):
                x = np.array([value, 0.5 * value])
                for gamma in (0.5, 2.0):
                    assert_allclose(
                        prox_phi_distance(box, AbsPower(1.5, p), x, gamma),
                        prox_distance_power(box, 1.5, p, x, gamma),
                        atol=1e-10,
                    )

    def test_moreau_conjugate_prox(self):
        x = np.array([1.5, -0.4, 3.0])
        assert_allclose(moreau_conjugate_prox(Indicator(PointProjector(np.zeros(3))), x, 2.0), x)
        assert_allclose(moreau_conjugate_prox(ScaledSquaredNorm(1.0), x, 2.0), x / 3.0)
        assert_allclose(moreau_conjugate_prox(L1Norm(1.0), x, 0.7), np.clip(x, -1, 1))

    @override_settings(DEBUG=True)
    def test_moreau_self_check_in_debug(self):
        rng = np.random.default_rng(6)
        for f in (ZeroFunction(), ScaledSquaredNorm(2.0), L1Norm(0.3)):
            x = rng.standard_normal(5)
            for gamma in (0.2, 1.0, 5.0):
                assert_allclose(Conjugate(f).prox(x, gamma), f.conjugate_prox(x, gamma), atol=1e-12)
                recomposed = f.prox(x, gamma) + gamma * moreau_conjugate_prox(f, x / gamma, 1.0 / gamma)
                assert_allclose(recomposed, x, atol=1e-12)


class ProjectorTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(8)

    def test_examples(self):
        x = np.array([0.0, 4.0])
        assert_allclose(project_energy_ball(2.0, x), x / 2)
        y = np.array([1.0, 2.0, 3.0])
        assert_allclose(project_mean_hyperplane(2.0, y), y)

    def test_phase_projection_on_short_signal(self):
        x = self.rng.standard_normal(8)
        mask = np.zeros(8, dtype=bool)
        mask[[1, 7]] = True
        p = project_fourier_phase(mask, np.zeros(8), x)
        spectrum = np.fft.fft(p)
        self.assertAlmostEqual(spectrum[1].imag, 0.0, delta=1e-12)
        self.assertGreaterEqual(spectrum[1].real, -1e-12)

        # brute force over the nonnegative real values of χ_1
        original = np.fft.fft(x)
        candidates = np.linspace(0.0, 2 * abs(original[1]) + 1.0, 20001)
        distances = []
        for r in candidates:
            trial = original.copy()
            trial[1], trial[7] = r, r
            distances.append(norm(np.fft.ifft(trial).real - x))
        best = candidates[int(np.argmin(distances))]
        self.assertAlmostEqual(spectrum[1].real, best, delta=candidates[1])

    def test_invalid_inputs(self):
        with self.assertRaises(InfeasibleSetError):
            BoxMaskProjector(1.0, 2.0, mask=np.array([True, False]))
        lopsided = np.zeros(8, dtype=bool)
        lopsided[1] = True
        with self.assertRaises(SpectrumError):
            FourierZeroProjector(lopsided)
        mask = np.zeros(8, dtype=bool)
        mask[[1, 7]] = True
        phases = np.zeros(8)
        phases[1] = phases[7] = 0.3
        with self.assertRaises(SpectrumError):
            FourierPhaseProjector(mask, phases)

    def projector_cases(self):
        n = 16
        band = np.zeros(n, dtype=bool)
        band[[1, 2, 3, 8, 13, 14, 15]] = True
        phases = np.zeros(n)
        phases[1:4] = [0.4, -1.2, 2.0]
        phases[13:16] = [-2.0, 1.2, -0.4]
        phases[8] = np.pi
        high = np.zeros(n, dtype=bool)
        high[5:12] = True
        zero_bins = np.zeros(n, dtype=bool)
        zero_bins[[0, 4, 12]] = True
        times = np.zeros(n, dtype=bool)
        times[[0, 1, 14, 15]] = True
        return [
            BoxMaskProjector(0.0, 1.0, mask=times),
            BoxMaskProjector(-1.0, 2.0),
            MeanHyperplaneProjector(0.3),
            FourierPhaseProjector(band, phases),
            FourierZeroProjector(zero_bins),
            FourierMagnitudeProjector(high, 0.5),
            EnergyBallProjector(1.5),
            SymmetryMidpointProjector(),
            TimeMaskProjector(times),
            PointProjector(np.linspace(0, 1, n)),
        ]

    def test_idempotence_and_variational_inequality(self):
        for projector in self.projector_cases():
            for _ in range(20):
                x = 3.0 * self.rng.standard_normal(16)
                p = projector.project(x)
                assert_allclose(projector.project(p), p, atol=1e-12, err_msg=repr(projector))
                self.assertTrue(projector.contains(p), repr(projector))
                for _ in range(10):
                    y = projector.project(3.0 * self.rng.standard_normal(16))
                    self.assertLessEqual(inner(y - p, x - p), 1e-10, repr(projector))

    def test_projectors_firmly_nonexpansive(self):
        for projector in self.projector_cases():
            assert_firmly_nonexpansive(self, projector.project, (16,), pairs=30)

    def test_symmetry_pins_midpoint(self):
        p = SymmetryMidpointProjector().project(self.rng.standard_normal(10))
        assert_allclose(p, p[::-1])
        self.assertEqual(p[5], 1.0)
        self.assertEqual(p[4], 1.0)


class ProxPropertyTests(SimpleTestCase):
    def catalog(self):
        box = BoxMaskProjector(-1.0, 1.0)
        ball = EnergyBallProjector(1.0)
        return [
            L1Norm(0.8),
            SquaredResidual(CirculantMap(np.array([0.2, 0.5, 0.3]), (4,)), np.array([1.0, -1.0, 0.5, 2.0]), 2.0),
            DistancePower(box, 1.2, 1.0),
            DistancePower(ball, 0.7, 1.5),
            DistancePower(box, 2.0, 2.0),
            DistancePower(ball, 0.5, 3.0),
            PhiDistance(box, AbsPower(0.9, 1.0)),
            Separable(AbsPower(0.6, 1.5), basis=np.kron(rotation(0.3), np.eye(2))),
            SemiOrthogonalComposition(L1Norm(0.5), DenseMap(np.sqrt(2.0) * np.kron(rotation(1.1), np.eye(2)))),
        ]

    def test_firm_nonexpansiveness(self):
        for seed, f in enumerate(self.catalog()):
            for gamma in (0.5, 2.0):
                assert_firmly_nonexpansive(self, lambda v, f=f, g=gamma: f.prox(v, g), (4,), seed=seed)

    def test_optimality_certificate(self):
        rng = np.random.default_rng(10)
        for f in self.catalog():
            for _ in range(5):
                x = 3.0 * rng.standard_normal(4)
                for gamma in (0.5, 2.0):
                    p = f.prox(x, gamma)
                    self.assertTrue(subgrad_check(f, p, x, gamma, probes=200), repr(f))

    def test_matches_grid_oracle_in_one_dimension(self):
        rng = np.random.default_rng(11)
        interval = BoxMaskProjector(0.0, 1.0)
        cases = [
            L1Norm(1.0),
            Indicator(interval),
            DistancePower(interval, 1.0, 1.0),
            DistancePower(interval, 1.0, 1.5),
            DistancePower(interval, 2.0, 2.0),
            DistancePower(interval, 0.5, 2.5),
            PhiDistance(interval, AbsPower(0.4, 1.0)),
            SquaredResidual(IdentityMap((1,)), np.array([0.7]), 1.0),
        ]
        for f in cases:
            for x in rng.uniform(-4, 4, (50, 1)):
                expected = prox_oracle(f, x, 0.8, tol=1e-9)
                assert_allclose(f.prox(x, 0.8), expected, atol=1e-6, err_msg=repr(f))

    def test_matches_grid_oracle_in_two_dimensions(self):
        rng = np.random.default_rng(12)
        cases = [
            Separable(AbsPower(1.0, 1.0), basis=rotation(0.5)),
            DistancePower(EnergyBallProjector(1.0), 1.0, 1.5),
            SquaredResidual(DenseMap(np.array([[1.0, 0.5], [0.0, 1.0]])), np.array([1.0, -1.0]), 2.0),
        ]
        for f in cases:
            for x in rng.uniform(-3, 3, (50, 2)):
                assert_allclose(f.prox(x, 1.0), prox_oracle(f, x, 1.0, tol=1e-9), atol=1e-6, err_msg=repr(f))

    def test_moreau_identity_for_catalog(self):
        rng = np.random.default_rng(13)
        for f in self.catalog():
            x = rng.standard_normal(4)
            for gamma in (0.5, 2.0):
                recomposed = f.prox(x, gamma) + gamma * moreau_conjugate_prox(f, x / gamma, 1.0 / gamma)
                assert_allclose(recomposed, x, atol=1e-12)


class TotalVariationTests(SimpleTestCase):
    def test_two_by_two_block(self):
        out = prox_tv_block(1.0, np.array([[7.0, 3.0], [4.0, -2.0]]))
        assert_allclose(out, [[7.0, 2.4], [3.2, -2.0]])

    def test_dead_zone(self):
        out = prox_tv_block(6.0, np.array([[7.0, 3.0], [4.0, -2.0]]))
        assert_allclose(out, [[7.0, 0.0], [0.0, -2.0]])

    def test_block_prox_matches_pairwise_shrinkage(self):
        rng = np.random.default_rng(14)
        origin = PointProjector(np.zeros(2))
        for side in (4, 8):
            v = rng.standard_normal((side, side))
            out = prox_tv_block(0.9, v)
            half = side // 2
            for k in range(half):
                for l in range(half):
                    pair = np.array([v[k, l + half], v[k + half, l]])
                    expected = prox_distance_power(origin, 0.9, 1.0, pair)
                    assert_allclose([out[k, l + half], out[k + half, l]], expected, atol=1e-10)
            assert_allclose(out[:half, :half], v[:half, :half])
            assert_allclose(out[half:, half:], v[half:, half:])

    def test_block_prox_matches_grid_oracle(self):
        rng = np.random.default_rng(15)
        v = rng.standard_normal((4, 4))
        out = prox_tv_block(0.5, v)
        for k in range(2):
            for l in range(2):
                pair = np.array([v[k, l + 2], v[k + 2, l]])
                expected = prox_oracle(lambda y: float(np.hypot(*y)), pair, 0.5)
                assert_allclose([out[k, l + 2], out[k + 2, l]], expected, atol=1e-8)

    def test_prox_tv_certificate(self):
        rng = np.random.default_rng(16)
        frame = TightFrame(FrameSpec.haar(levels=1, shifts=DEFAULT_SHIFTS), (8, 8))
        for i in range(4):
            f = TotalVariationBlock(i, frame, 0.3)
            x = rng.standard_normal(frame.output_shape)
            p = prox_tv_i(i, frame, 0.3, x, 0.7)
            self.assertTrue(subgrad_check(f, p, x, 0.7, probes=200))
            assert_allclose(f.prox(x, 0.7), p)
