import numpy as np
from numpy.testing import assert_allclose
from django.test import SimpleTestCase

from Main.exceptions import OracleBudgetError
from Proximity.base import ZeroFunction
from Proximity.catalog import Indicator, L1Norm, prox_l1
from Proximity.projectors import BoxMaskProjector, MeanHyperplaneProjector
from .problems import OracleProblem, OracleTerm, dykstra, min_oracle
from .references import prox_oracle, subgrad_check


def quadratic(c):
    return OracleTerm(value=lambda x: float(np.sum((x - c) ** 2)), subgradient=lambda x: 2.0 * (x - c))


class ProxOracleTests(SimpleTestCase):
    def test_absolute_value(self):
        assert_allclose(prox_oracle(lambda y: float(np.abs(y).sum()), np.array([3.0])), [2.0], atol=1e-9)

    def test_zero_function(self):
        x = np.array([0.3, -1.7])
        assert_allclose(prox_oracle(ZeroFunction(), x), x, atol=1e-9)

    def test_interval_clamp(self):
        f = Indicator(BoxMaskProjector(0.0, 1.0))
        assert_allclose(prox_oracle(f, np.array([5.0])), [1.0], atol=1e-9)

    def test_subgradient_variant(self):
        x = np.array([2.5, -0.2, 0.9, 4.0, -3.0])
        found = prox_oracle(
            L1Norm(1.0), x, method="subgradient", subgradient=np.sign, iterations=20000
        )
        assert_allclose(found, prox_l1(1.0, x), atol=1e-3)

    def test_budget(self):
        with self.assertRaises(OracleBudgetError):
            prox_oracle(ZeroFunction(), np.zeros(5))
        with self.assertRaises(ValueError):
            prox_oracle(ZeroFunction(), np.zeros(2), method="subgradient")


class SubgradCheckTests(SimpleTestCase):
    def test_soft_threshold_passes(self):
        rng = np.random.default_rng(0)
        f = L1Norm(0.5)
        for _ in range(10):
            x = 2.0 * rng.standard_normal(4)
            self.assertTrue(subgrad_check(f, f.prox(x, 1.5), x, 1.5))

    def test_identity_guess_fails(self):
        x = np.array([3.0, -2.0])
        self.assertFalse(subgrad_check(L1Norm(1.0), x, x))

    def test_zero_function(self):
        x = np.array([1.0, 2.0, 3.0])
        self.assertTrue(subgrad_check(ZeroFunction(), x, x))


class MinOracleTests(SimpleTestCase):
    def test_mean_of_quadratics(self):
        centres = [np.array([1.0]), np.array([2.0]), np.array([6.0])]
        problem = OracleProblem([quadratic(c) for c in centres], dimension=1, tolerance=1e-8)
        solution = min_oracle(problem, iterations=2000, step=0.1, step_rule="constant")
        assert_allclose(solution.x, [3.0], atol=1e-6)
        self.assertTrue(solution.converged)

    def test_interval_plus_distance(self):
        terms = [
            OracleTerm.from_prox(Indicator(BoxMaskProjector(0.0, 1.0))),
            OracleTerm(value=lambda x: float(np.abs(x - 2.0).sum()), subgradient=lambda x: np.sign(x - 2.0)),
        ]
        x, value = min_oracle(OracleProblem(terms, dimension=1), iterations=1000)
        assert_allclose(x, [1.0], atol=1e-9)
        self.assertAlmostEqual(value, 1.0, places=9)

    def test_dimension_budget(self):
        with self.assertRaises(OracleBudgetError):
            OracleProblem([], dimension=65)

    def test_dykstra_reaches_intersection_projection(self):
        # [0, 2]² ∩ {x_1 + x_2 = 1}: the nearest point to (3, −1) is (1, 0)
        box = BoxMaskProjector(0.0, 2.0)
        line = MeanHyperplaneProjector(0.5)
        assert_allclose(dykstra([box, line], np.array([3.0, -1.0]), iterations=2000), [1.0, 0.0], atol=1e-9)
