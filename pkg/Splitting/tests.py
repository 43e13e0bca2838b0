import csv
import tempfile
from pathlib import Path

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal
from django.test import SimpleTestCase

from Main.exceptions import ProxEvaluationError, SolverConfigError
from Operators.convolution import CirculantMap, uniform_kernel
from Operators.linear import IdentityMap
from Proximity.base import DomainKind, ProxFn
from Proximity.catalog import DistancePower, Indicator, L1Norm, SquaredResidual
from Proximity.projectors import (
    BoxMaskProjector,
    EnergyBallProjector,
    FourierPhaseProjector,
    MeanHyperplaneProjector,
    PointProjector,
)
from oracle.problems import OracleProblem, OracleTerm, dykstra, min_oracle
from .config import SolverConfig
from .product import DiagonalProjector, ProductSeparable, stack
from .qualification import Advisory, qualification_advisory
from .solvers import douglas_rachford, fixed_point_residual, ppxa, ppxa_as_subspace_dr, subspace_dr, total_objective
from .state import IterationLog, IterationRecord, RunStatus


def quadratic(c):
    """(x − c)² on R^n."""
    c = np.atleast_1d(np.asarray(c, dtype=float))
    return SquaredResidual(IdentityMap(c.shape), c, weight=2.0)


def absolute_distance(c):
    """|x − c| on R."""
    return DistancePower(PointProjector(np.array([float(c)])), 1.0, 1.0)


def unit_interval():
    return Indicator(BoxMaskProjector(0.0, 1.0))


def interval_distance_optimum():
    """min ι_[0,1](x) + |x − 2| by projected subgradient; the optimum is 1 at x = 1."""
    terms = [
        OracleTerm.from_prox(unit_interval()),
        OracleTerm(value=lambda x: float(np.abs(x - 2.0).sum()), subgradient=lambda x: np.sign(x - 2.0)),
    ]
    return min_oracle(OracleProblem(terms, dimension=1), iterations=1000)


class Failing(ProxFn):
    def prox(self, x, gamma=1.0):
        raise ValueError("no prox today")


class Mistyped(ProxFn):
    def prox(self, x, gamma=1.0):
        raise TypeError("unsupported operand")


class Recorder:
    def __init__(self):
        self.states = []

    def __call__(self, state, record):
        self.states.append(state.copy())


def imaging_toy(seed=0, side=8):
    """Four potentials shaped like the constrained deblurring problem, on a small image."""
    rng = np.random.default_rng(seed)
    truth = rng.uniform(50.0, 200.0, (side, side))
    mask = np.zeros((side, side), dtype=bool)
    mask[0, 0] = mask[0, -1] = mask[-1, 0] = mask[-1, -1] = True
    truth[mask] = 0.0

    frequencies = np.fft.fftfreq(side) * side
    band = (np.abs(frequencies)[:, None] <= 1) & (np.abs(frequencies)[None, :] <= 1)
    phases = np.where(band, np.angle(np.fft.fft2(truth)), 0.0)

    blur = CirculantMap(uniform_kernel(3), (side, side))
    observed = blur.apply(truth) + rng.normal(0.0, 2.0, (side, side))
    box = BoxMaskProjector(0.0, 255.0, mask)
    hyperplane = MeanHyperplaneProjector(truth.mean())
    phase = FourierPhaseProjector(band, phases)
    functions = [
        Indicator(box),
        Indicator(hyperplane),
        DistancePower(phase, 1.0, 1.5),
        SquaredResidual(blur, observed, 2.0),
    ]
    return functions, observed


def sparse_toy(seed=1, n=16):
    rng = np.random.default_rng(seed)
    blur = CirculantMap(np.array([0.25, 0.5, 0.25]), (n,))
    observed = rng.standard_normal(n)
    return [L1Norm(0.3), SquaredResidual(blur, observed, 1.0), Indicator(EnergyBallProjector(2.0))], observed


class SolverConfigTests(SimpleTestCase):
    def test_defaults(self):
        config = SolverConfig(gamma=0.5)
        assert_allclose(config.weights_for(4), [0.25] * 4)
        self.assertEqual(config.relaxation_at(10), 1.5)
        self.assertEqual(config.tolerance, 1e-8)

    def test_rejects_bad_values(self):
        for kwargs in (
            {"gamma": 0.0},
            {"gamma": float("inf")},
            {"gamma": 1.0, "relaxation": 2.0},
            {"gamma": 1.0, "weights": (0.5, 0.6)},
            {"gamma": 1.0, "weights": (0.0, 1.0)},
            {"gamma": 1.0, "max_iterations": 0},
        ):
            with self.assertRaises(SolverConfigError, msg=str(kwargs)):
                SolverConfig(**kwargs)

    def test_error_names_the_field(self):
        with self.assertRaisesMessage(SolverConfigError, "gamma"):
            SolverConfig(gamma=-1.0)

    def test_schedule_checked_when_emitted(self):
        config = SolverConfig(gamma=1.0, relaxation=lambda n: 1.0 if n < 3 else 2.5)
        self.assertEqual(config.relaxation_at(2), 1.0)
        with self.assertRaises(SolverConfigError):
            config.relaxation_at(3)

    def test_weight_count(self):
        with self.assertRaises(SolverConfigError):
            SolverConfig(gamma=1.0, weights=(0.5, 0.5)).weights_for(3)

    def test_frozen(self):
        config = SolverConfig(gamma=1.0)
        with self.assertRaises(ValueError):
            config.gamma = 2.0


class DouglasRachfordTests(SimpleTestCase):
    def test_point_constraints(self):
        c = np.array([1.0, -2.0])
        point = Indicator(PointProjector(c))
        result = douglas_rachford(point, point, SolverConfig(gamma=1.0), np.array([5.0, 5.0]))
        assert_allclose(result.solution, c)
        self.assertEqual(result.status, RunStatus.CONVERGED)
        self.assertEqual(len(result.log), 1)

    def test_quadratic_pair(self):
        config = SolverConfig(gamma=1.0, tolerance=1e-14, max_iterations=2000)
        result = douglas_rachford(quadratic(1.0), quadratic(3.0), config, np.array([10.0]))
        assert_allclose(result.solution, [2.0], atol=1e-10)
        # the limit y itself is not the minimizer
        self.assertGreater(abs(result.fixed_point[0] - 2.0), 0.5)
        assert_allclose(result.solution, quadratic(3.0).prox(result.fixed_point, 1.0))
        self.assertLess(fixed_point_residual(quadratic(1.0), quadratic(3.0), result.fixed_point, 1.0), 1e-9)

    def test_interval_and_distance(self):
        config = SolverConfig(gamma=1.0, tolerance=1e-13, max_iterations=2000)
        result = douglas_rachford(unit_interval(), absolute_distance(2.0), config, np.array([0.3]))
        assert_allclose(result.solution, [1.0], atol=1e-9)
        value = total_objective((unit_interval(), absolute_distance(2.0)), result.solution)
        optimum = interval_distance_optimum().value
        self.assertLessEqual(abs(value - optimum), 1e-6 * max(1.0, abs(optimum)))

    def test_error_sequences(self):
        rng = np.random.default_rng(3)
        noise = rng.standard_normal((2, 5000))
        config = SolverConfig(
            gamma=1.0, tolerance=1e-14, max_iterations=3000, errors=lambda i, n: np.array([noise[i, n] / (n + 1) ** 2])
        )
        result = douglas_rachford(quadratic(1.0), quadratic(3.0), config, np.array([10.0]))
        assert_allclose(result.solution, [2.0], atol=1e-6)

    def test_failure_names_the_function(self):
        with self.assertRaises(ProxEvaluationError) as caught:
            douglas_rachford(Failing(), quadratic(0.0), SolverConfig(gamma=1.0), np.zeros(1))
        self.assertEqual(caught.exception.index, 1)
        self.assertEqual(caught.exception.iteration, 0)


class SubspaceDouglasRachfordTests(SimpleTestCase):
    def test_common_minimizer(self):
        c = np.array([0.5, -1.5, 2.0])
        weights = (0.5, 0.5)
        f = ProductSeparable([quadratic(c), quadratic(c)], weights)
        config = SolverConfig(gamma=1.0, tolerance=1e-13, max_iterations=2000)
        result = subspace_dr(f, DiagonalProjector(weights), config, np.zeros((2, 3)))
        assert_allclose(result.solution, stack([c, c]), atol=1e-9)

    def test_matches_douglas_rachford(self):
        weights = (0.5, 0.5)
        f = ProductSeparable([quadratic(1.0), quadratic(3.0)], weights)
        config = SolverConfig(gamma=1.0, tolerance=1e-14, max_iterations=2000)
        product = subspace_dr(f, DiagonalProjector(weights), config, np.array([[4.0], [-1.0]]))
        direct = douglas_rachford(quadratic(1.0), quadratic(3.0), config, np.array([10.0]))
        assert_allclose(product.solution[0], direct.solution, atol=1e-8)
        assert_allclose(product.solution[0], [2.0], atol=1e-8)

    def test_x_tracks_projection_of_y(self):
        rng = np.random.default_rng(5)
        functions, _ = sparse_toy()
        weights = (0.2, 0.3, 0.5)
        f = ProductSeparable(functions, weights)
        projector = DiagonalProjector(weights)
        recorder = Recorder()
        config = SolverConfig(gamma=0.7, weights=weights, tolerance=0.0, max_iterations=200)
        subspace_dr(f, projector, config, rng.standard_normal((3, 16)), callback=recorder)
        self.assertEqual(len(recorder.states), 200)
        gap = max(np.linalg.norm(s.x - projector.project(s.y[0])) for s in recorder.states)
        self.assertLessEqual(gap, 1e-10)


class PPXATests(SimpleTestCase):
    def test_single_function(self):
        config = SolverConfig(gamma=0.5, tolerance=1e-13, max_iterations=2000)
        result = ppxa([quadratic([1.0, 2.0])], config, np.zeros(2))
        assert_allclose(result.solution, [1.0, 2.0], atol=1e-10)
        self.assertTrue(result.converged)

    def test_three_quadratics_reach_the_mean(self):
        centres = (1.0, 2.0, 6.0)
        functions = [quadratic(c) for c in centres]
        config = SolverConfig(gamma=1.0, tolerance=1e-14, max_iterations=2000)
        result = ppxa(functions, config, np.zeros(1))
        assert_allclose(result.solution, [3.0], atol=1e-8)
        optimum = total_objective(functions, np.array([3.0]))
        self.assertLessEqual(result.log.last.objective, optimum * (1 + 1e-6))

    def test_interval_and_distance(self):
        functions = [unit_interval(), absolute_distance(2.0)]
        config = SolverConfig(gamma=1.0, tolerance=1e-13, max_iterations=2000)
        result = ppxa(functions, config, np.array([0.2]))
        assert_allclose(result.solution, [1.0], atol=1e-6)
        value = total_objective(functions, result.solution)
        optimum = interval_distance_optimum().value
        self.assertTrue(np.isfinite(value))
        self.assertLessEqual(abs(value - optimum), 1e-6 * max(1.0, abs(optimum)))
        self.assertLessEqual(len(result.log), 2000)

    def test_identical_to_product_space_douglas_rachford(self):
        rng = np.random.default_rng(11)
        imaging, observed = imaging_toy()
        sparse, _ = sparse_toy()
        instances = [
            ([quadratic(c) for c in (1.0, -2.0, 4.0)], rng.standard_normal(1), None),
            (imaging, observed, (0.1, 0.2, 0.3, 0.4)),
            (sparse, rng.standard_normal(16), None),
        ]
        for functions, y0, weights in instances:
            config = SolverConfig(gamma=0.8, weights=weights, tolerance=0.0, max_iterations=100)
            parallel, product = Recorder(), Recorder()
            ppxa(functions, config, y0, callback=parallel)
            ppxa_as_subspace_dr(functions, config, y0, callback=product)
            self.assertEqual(len(parallel.states), 100)
            for a, b in zip(parallel.states, product.states):
                for row in b.x:
                    assert_allclose(row, a.x, atol=1e-10, rtol=0)
                assert_allclose(b.y[0], stack(a.y), atol=1e-10, rtol=0)

    def test_weighted_average_invariant(self):
        functions, observed = imaging_toy(seed=3)
        weights = (0.1, 0.2, 0.3, 0.4)
        recorder = Recorder()
        config = SolverConfig(gamma=1.0, weights=weights, tolerance=0.0, max_iterations=60)
        ppxa(functions, config, [observed, observed + 1.0, observed - 3.0, 2.0 * observed], callback=recorder)
        for state in recorder.states:
            self.assertLessEqual(state.weighted_average_gap(weights), 1e-10 * max(1.0, np.linalg.norm(state.x)))

    def test_threads_do_not_change_results(self):
        functions, observed = imaging_toy(seed=4)
        sequential = ppxa(functions, SolverConfig(gamma=1.0, max_iterations=30, workers=1), observed)
        threaded = ppxa(functions, SolverConfig(gamma=1.0, max_iterations=30, workers=4), observed)
        assert_array_equal(sequential.state.x, threaded.state.x)

    def test_summable_errors_barely_move_the_objective(self):
        functions = [quadratic(c) for c in (1.0, 2.0, 6.0)]
        rng = np.random.default_rng(12)
        noise = rng.standard_normal((3, 2000))
        clean = ppxa(functions, SolverConfig(gamma=1.0, max_iterations=2000, tolerance=1e-14), np.zeros(1))
        perturbed = ppxa(
            functions,
            SolverConfig(
                gamma=1.0,
                max_iterations=2000,
                tolerance=1e-14,
                errors=lambda i, n: np.array([noise[i, n] / (n + 1) ** 2]),
            ),
            np.zeros(1),
        )
        clean_value = total_objective(functions, clean.solution)
        perturbed_value = total_objective(functions, perturbed.solution)
        self.assertLessEqual(abs(perturbed_value - clean_value), 1e-4 * clean_value)

    def test_failure_names_the_function(self):
        for workers in (1, 3):
            with self.assertRaises(ProxEvaluationError) as caught:
                ppxa([quadratic(0.0), Failing(), quadratic(1.0)], SolverConfig(gamma=1.0, workers=workers), np.zeros(1))
            self.assertEqual(caught.exception.index, 1)

    def test_any_prox_exception_names_the_function(self):
        for workers in (1, 3):
            with self.assertRaises(ProxEvaluationError) as caught:
                ppxa([quadratic(0.0), quadratic(1.0), Mistyped()], SolverConfig(gamma=1.0, workers=workers), np.zeros(1))
            self.assertEqual(caught.exception.index, 2)
            self.assertEqual(caught.exception.iteration, 0)
            self.assertIsInstance(caught.exception.__cause__, TypeError)
        with self.assertRaises(ProxEvaluationError) as caught:
            douglas_rachford(quadratic(0.0), Mistyped(), SolverConfig(gamma=1.0), np.zeros(1))
        self.assertEqual(caught.exception.index, 2)

    def test_infeasible_iterates_fall_back_to_the_last_one(self):
        functions = [unit_interval(), absolute_distance(2.0)]
        config = SolverConfig(gamma=1.0, relaxation=1.0, max_iterations=2, tolerance=0.0)
        result = ppxa(functions, config, np.array([5.0]))
        self.assertTrue(all(record.objective == np.inf for record in result.log))
        self.assertEqual(result.status, RunStatus.MAX_ITERATIONS)
        assert_array_equal(result.solution, result.state.x)

    def test_iteration_cap_is_reported(self):
        functions, observed = imaging_toy(seed=2)
        with self.assertLogs("Splitting.solvers", level="WARNING"):
            result = ppxa(functions, SolverConfig(gamma=1.0, max_iterations=5, tolerance=0.0), observed)
        self.assertEqual(result.status, RunStatus.MAX_ITERATIONS)
        self.assertEqual(len(result.log), 5)

    def test_imaging_toy_against_oracle(self):
        functions, observed = imaging_toy(seed=6)
        box, hyperplane = functions[0].projector, functions[1].projector
        config = SolverConfig(gamma=1.0, tolerance=1e-12, max_iterations=3000)
        result = ppxa(functions, config, observed)

        feasible = dykstra([box, hyperplane], result.solution, iterations=500)
        self.assertLess(np.linalg.norm(feasible - result.solution), 1e-4 * np.linalg.norm(feasible))
        smooth = functions[2:]
        ppxa_value = total_objective(smooth, feasible)

        distance, data = smooth
        phase = distance.projector

        def distance_subgradient(x):
            gap = x - phase.project(x)
            size = np.linalg.norm(gap)
            return np.zeros_like(x) if size == 0 else 1.5 * distance.alpha * gap / np.sqrt(size)

        def data_gradient(x):
            return data.weight * data.operator.adjoint(data.operator.apply(x) - data.observation)

        problem = OracleProblem(
            [
                OracleTerm.from_prox(functions[0]),
                OracleTerm.from_prox(functions[1]),
                OracleTerm(value=distance.objective, subgradient=distance_subgradient),
                OracleTerm(value=data.objective, subgradient=data_gradient),
            ],
            dimension=observed.size,
            shape=observed.shape,
        )
        oracle = min_oracle(problem, observed, iterations=4000, step=0.2, step_rule="constant", dykstra_iterations=100)
        self.assertLessEqual(ppxa_value, oracle.value * (1 + 1e-5) + 1e-8)


class QualificationTests(SimpleTestCase):
    def test_full_domains(self):
        report = qualification_advisory([DomainKind.FULL] * 3)
        self.assertEqual(report.status, Advisory.SATISFIED)

    def test_single_restricted_domain(self):
        report = qualification_advisory([DomainKind.BOUNDED_CONVEX, DomainKind.FULL, DomainKind.FULL])
        self.assertTrue(report.satisfied)
        self.assertEqual(report.case, "single_restriction")

    def test_two_affine_domains_without_a_point(self):
        with self.assertLogs("Splitting.qualification", level="WARNING"):
            report = qualification_advisory([DomainKind.AFFINE, DomainKind.AFFINE])
        self.assertEqual(report.status, Advisory.UNKNOWN)

    def test_affine_domains_sharing_a_point(self):
        functions = [Indicator(MeanHyperplaneProjector(0.0)), Indicator(PointProjector(np.zeros(4)))]
        report = qualification_advisory(functions, common_point=np.zeros(4))
        self.assertEqual(report.case, "affine_common_point")

    def test_asserted_interior_point(self):
        functions = [unit_interval(), Indicator(EnergyBallProjector(1.0)), L1Norm()]
        self.assertTrue(qualification_advisory(functions, interior_point=np.array([0.5])).satisfied)
        self.assertFalse(qualification_advisory(functions, interior_point=np.array([3.0])).satisfied)

    def test_boundary_point_is_accepted_on_trust(self):
        functions = [unit_interval(), Indicator(EnergyBallProjector(1.0))]
        report = qualification_advisory(functions, interior_point=np.array([1.0]))
        self.assertEqual(report.case, "interior_point")
        self.assertIn("relative interior not verified", report.reason)

    def test_ppxa_attaches_the_report(self):
        result = ppxa([quadratic(0.0), unit_interval()], SolverConfig(gamma=1.0, max_iterations=3), np.zeros(1))
        self.assertTrue(result.advisory.satisfied)


class IterationLogTests(SimpleTestCase):
    def test_csv_has_one_row_per_iteration(self):
        functions = [quadratic(c) for c in (1.0, 2.0, 6.0)]
        result = ppxa(functions, SolverConfig(gamma=1.0, max_iterations=10, tolerance=0.0), np.zeros(1))
        with tempfile.TemporaryDirectory() as tmp:
            path = result.log.to_csv(Path(tmp) / "log.csv")
            with path.open() as handle:
                rows = list(csv.reader(handle))
        self.assertEqual(rows[0], ["n", "objective", "residual", "lambda", "millis"])
        self.assertEqual(len(rows) - 1, 10)
        self.assertEqual([int(r[0]) for r in rows[1:]], list(range(10)))

    def test_records_are_consecutive(self):
        log = IterationLog()
        log.append(IterationRecord(n=0, objective=None, residual=1.0, relaxation=1.5, millis=0.1))
        with self.assertRaises(ValueError):
            log.append(IterationRecord(n=2, objective=None, residual=1.0, relaxation=1.5, millis=0.1))
