import csv
import json
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, override_settings

from Main.exceptions import ConfigError, ImageFormatError, MetricError
from Operators.arrays import norm
from Operators.fourier import conjugate_view, is_hermitian_mask, leading_half_mask, self_conjugate_mask
from Proximity.projectors import FourierPhaseProjector
from oracle.problems import OracleProblem, OracleTerm, min_oracle
from .config import Experiment1Config, Experiment2Config, Experiment3Config, load_config, parse_config
from .degradation import (
    DegradationModel,
    interior_point,
    perturbed_phases,
    phase_band,
    rng_for,
    synthetic_image,
    vignette_mask,
)
from .metrics import bsnr_db, rel_err_db, stopband_attenuation_db
from .models import ExperimentRun, RunStatusChoices
from .runners import (
    build_experiment3,
    constraint_violations,
    pulse_time_mask,
    run_experiment1,
    run_experiment2,
    run_experiment3,
)
from .utils import read_pgm, to_8bit, write_json, write_pgm

CONFIG_DIR = Path(__file__).resolve().parent / "configs"


def solver(gamma, iterations, **extra):
    return {"gamma": gamma, "iterations": iterations, **extra}


def experiment1(**fields):
    data = {"schema_version": 1, "experiment": 1, "solver": solver(0.25, 300)}
    data.update(fields)
    return Experiment1Config.model_validate(data)


def experiment2(**fields):
    data = {"schema_version": 1, "experiment": 2, "solver": solver(1.0, 200)}
    data.update(fields)
    return Experiment2Config.model_validate(data)


def experiment3(**fields):
    data = {"schema_version": 1, "experiment": 3, "solver": solver(0.2, 100)}
    data.update(fields)
    return Experiment3Config.model_validate(data)


def small_pulse(**fields):
    """N = 16 at 160 Hz: notches at bins 0, 5, 11; stop-band above 30 Hz; support of 8 samples."""
    base = {
        "samples": 16,
        "sampling_rate": 160.0,
        "stopband_hz": 30.0,
        "rho": 0.5,
        "energy": 2.0,
        "support_ms": 50.0,
        "crossing_ms": 25.0,
        "solver": solver(0.2, 600, tolerance=1e-13),
    }
    base.update(fields)
    return experiment3(**base)


# ============================================================
#   CONFIGURATION
# ============================================================

class ConfigTests(SimpleTestCase):
    def test_shipped_configs_load(self):
        for experiment in (1, 2, 3):
            cfg = load_config(CONFIG_DIR / f"experiment{experiment}.json")
            self.assertEqual(cfg.experiment, experiment)
            self.assertEqual(cfg.schema_version, 1)

    def test_missing_gamma_names_the_field(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config({"schema_version": 1, "experiment": 3, "solver": {"iterations": 10}})
        self.assertIn("solver.gamma", str(ctx.exception))

    def test_schema_version_is_checked(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config({"schema_version": 2, "experiment": 3, "solver": solver(0.2, 10)})
        self.assertIn("schema_version", str(ctx.exception))

    def test_unknown_experiment(self):
        for experiment in (None, 4, "1", True):
            data = {"schema_version": 1, "solver": solver(0.2, 10)}
            if experiment is not None:
                data["experiment"] = experiment
            with self.assertRaises(ConfigError) as ctx:
                parse_config(data)
            self.assertIn("experiment", str(ctx.exception))

    def test_positive_quantities(self):
        bad = [
            {"experiment": 1, "noise": {"sigma": -1.0}},
            {"experiment": 1, "blur": 4},
            {"experiment": 1, "alpha": 0.0},
            {"experiment": 2, "size": 36, "levels": 3},
            {"experiment": 3, "samples": 1000},
            {"experiment": 3, "solver": solver(0.2, 10, relaxation=2.0)},
            {"experiment": 3, "solver": solver(0.0, 10)},
        ]
        for fields in bad:
            data = {"schema_version": 1, "solver": solver(0.2, 10), **fields}
            with self.subTest(fields=fields), self.assertRaises(ConfigError):
                parse_config(data)

    def test_unknown_fields_are_rejected(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config({"schema_version": 1, "experiment": 3, "solver": solver(0.2, 10), "gama": 1})
        self.assertIn("gama", str(ctx.exception))

    def test_malformed_json_reports_position(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "broken.json"
            path.write_text('{"schema_version": 1,\n "experiment": }')
            with self.assertRaises(ConfigError) as ctx:
                load_config(path)
        self.assertIn("line 2", str(ctx.exception))

    def test_overrides(self):
        cfg = experiment2(noise={"sigma": 1.0, "seed": 3})
        changed = cfg.with_overrides(seed=9, use_tv=False)
        self.assertEqual(changed.noise.seed, 9)
        self.assertFalse(changed.use_tv)
        self.assertTrue(changed.use_l1)
        self.assertEqual(cfg.noise.seed, 3)

        pulse = experiment3().with_overrides(seed=9, use_tv=False)
        self.assertIsNone(pulse.seed)
        self.assertFalse(hasattr(pulse, "use_tv"))


# ============================================================
#   DEGRADATION
# ============================================================

class DegradationTests(SimpleTestCase):
    def test_observation_is_blur_plus_noise(self):
        truth = synthetic_image(32)
        model = DegradationModel.simulate(truth, 3, 5.0, 42)
        assert_array_equal(model.observed, model.operator.apply(truth) + model.noise)
        self.assertAlmostEqual(float(np.std(model.noise)), 5.0, delta=0.5)

    def test_noise_is_reproducible(self):
        truth = synthetic_image(16)
        first = DegradationModel.simulate(truth, 3, 2.0, 5)
        again = DegradationModel.simulate(truth, 3, 2.0, rng_for(5))
        other = DegradationModel.simulate(truth, 3, 2.0, 6)
        assert_array_equal(first.noise, again.noise)
        self.assertFalse(np.array_equal(first.noise, other.noise))

    def test_synthetic_image_is_piecewise_constant(self):
        image = synthetic_image(64)
        self.assertGreaterEqual(image.min(), 0.0)
        self.assertLessEqual(image.max(), 255.0)
        self.assertLessEqual(len(np.unique(image)), 6)

    def test_vignette_blackens_corners(self):
        mask = vignette_mask(32)
        self.assertTrue(mask[0, 0] and mask[0, -1] and mask[-1, 0] and mask[-1, -1])
        self.assertFalse(mask[16, 16])
        self.assertFalse(mask[0, 16])

    def test_interior_point_has_the_mean(self):
        mask = vignette_mask(32)
        point = interior_point(mask, 100.0)
        self.assertAlmostEqual(float(point.mean()), 100.0, places=10)
        self.assertTrue(np.all(point[mask] == 0.0))
        self.assertTrue(np.all(point[~mask] > 100.0))

    def test_phase_band(self):
        band = phase_band((32, 32), 0.8)
        self.assertTrue(is_hermitian_mask(band))
        self.assertAlmostEqual(band.mean(), 0.8, delta=0.05)
        self.assertTrue(band[0, 0])
        self.assertFalse(band[16, 16])

    def test_perturbed_phases_stay_antisymmetric(self):
        image = synthetic_image(16)
        band = phase_band(image.shape, 0.8)
        phases = perturbed_phases(image, band, 0.05, rng_for(1))

        pairs = ~self_conjugate_mask(image.shape)
        assert_array_equal((phases + conjugate_view(phases))[pairs], 0.0)
        assert_array_equal(phases[~band], 0.0)

        exact = np.angle(np.fft.fft2(image))
        leading = leading_half_mask(image.shape) & band
        self.assertTrue(np.all(np.abs(phases - exact)[leading] <= 0.05 * np.abs(exact)[leading] + 1e-12))
        FourierPhaseProjector(band, phases)

    def test_zero_perturbation_keeps_the_image_feasible(self):
        image = synthetic_image(16)
        band = phase_band(image.shape, 0.8)
        projector = FourierPhaseProjector(band, perturbed_phases(image, band, 0.0, rng_for(0)))
        assert_allclose(projector.project(image), image, atol=1e-9)


# ============================================================
#   METRICS & FILES
# ============================================================

class MetricsTests(SimpleTestCase):
    def test_rel_err_db(self):
        x = synthetic_image(8)
        self.assertAlmostEqual(rel_err_db(2 * x, x), 0.0, places=12)
        self.assertAlmostEqual(rel_err_db(1.1 * x, x), -20.0, places=10)

    def test_rel_err_db_needs_a_nonzero_reference(self):
        with self.assertRaises(MetricError) as ctx:
            rel_err_db(np.ones((4, 4)), np.zeros((4, 4)))
        self.assertIn("all-zero", str(ctx.exception))

    def test_bsnr_db(self):
        w = rng_for(0).standard_normal(50)
        self.assertAlmostEqual(bsnr_db(10.0 * w, w), 20.0, places=10)
        self.assertEqual(bsnr_db(w, np.zeros(50)), float("inf"))

    def test_stopband_attenuation(self):
        n = 64
        t = np.arange(n)
        signal = 0.01 * np.cos(2 * np.pi * 10 * t / n)
        stopband = np.abs(np.fft.fftfreq(n) * n) > 5
        # |χ_10| = 0.01·n/2 = 0.32
        self.assertAlmostEqual(stopband_attenuation_db(signal, stopband), -20 * np.log10(0.32), places=9)
        self.assertEqual(stopband_attenuation_db(signal, np.zeros(n, dtype=bool)), float("inf"))


class ImageFileTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_round_trip_of_integer_image(self):
        image = rng_for(3).integers(0, 256, (13, 17)).astype(float)
        path = write_pgm(self.dir / "image.pgm", image)
        self.assertTrue(path.read_bytes().startswith(b"P5"))
        assert_array_equal(read_pgm(path), image)

    def test_scaling(self):
        assert_array_equal(to_8bit([[-4.0, 12.4], [300.0, 254.6]]), [[0, 12], [255, 255]])
        assert_array_equal(to_8bit([[0.0, 0.5], [1.0, 1.0]], scaling="stretch"), [[0, 128], [255, 255]])

    def test_header_comments_are_skipped(self):
        path = self.dir / "comment.pgm"
        path.write_bytes(b"P5\n# made by hand\n2 2\n255\n" + bytes([0, 10, 200, 255]))
        assert_array_equal(read_pgm(path), [[0, 10], [200, 255]])

    def test_malformed_files_report_positions(self):
        cases = [
            (b"P6\n2 2\n255\n" + bytes(12), 0),
            (b"P5\n2 x\n255\n" + bytes(4), 5),
            (b"P5\n2 2\n65535\n" + bytes(8), 12),
        ]
        for index, (data, position) in enumerate(cases):
            path = self.dir / f"bad{index}.pgm"
            path.write_bytes(data)
            with self.subTest(data=data[:12]), self.assertRaises(ImageFormatError) as ctx:
                read_pgm(path)
            self.assertEqual(ctx.exception.position, position)

    def test_truncated_pixels(self):
        data = b"P5 4 4 255\n" + bytes(10)
        path = self.dir / "short.pgm"
        path.write_bytes(data)
        with self.assertRaises(ImageFormatError) as ctx:
            read_pgm(path)
        self.assertEqual(ctx.exception.position, len(data))
        self.assertIn("10 of 16", str(ctx.exception))

    def test_metrics_json_nulls_non_finite_values(self):
        path = write_json(self.dir / "metrics.json", {"bsnr_db": float("inf"), "value": np.float64(1.5)})
        self.assertEqual(json.loads(path.read_text()), {"bsnr_db": None, "value": 1.5})


# ============================================================
#   EXPERIMENT RUNS
# ============================================================

class Experiment1Tests(SimpleTestCase):
    def test_consistent_data_is_recovered(self):
        cfg = experiment1(size=16, blur=1, noise={"sigma": 0.0}, phase_perturbation=0.0, solver=solver(0.25, 30))
        outcome = run_experiment1(cfg)
        assert_allclose(outcome.restored, outcome.truth, atol=1e-6)
        self.assertEqual(outcome.metrics["qualification"], "satisfied")

    def test_restoration_improves_on_the_observation(self):
        outcome = run_experiment1(load_config(CONFIG_DIR / "experiment1.json"))
        self.assertLess(outcome.metrics["restored_rel_err_db"], outcome.metrics["degraded_rel_err_db"])
        self.assertEqual(outcome.restored.shape, (32, 32))
        self.assertEqual(len(outcome.log), 300)

    def test_reruns_are_bitwise_identical(self):
        cfg = experiment1(size=16, noise={"sigma": 3.0, "seed": 4}, solver=solver(0.25, 15))
        first, second = run_experiment1(cfg), run_experiment1(cfg)
        assert_array_equal(first.restored, second.restored)
        assert_array_equal(first.degraded, second.degraded)


class Experiment2Tests(SimpleTestCase):
    def test_data_term_alone_recovers_clean_data(self):
        cfg = experiment2(
            size=16, blur=1, wavelet="haar", levels=1, alpha=0.0, beta=0.0,
            noise={"sigma": 0.0}, solver=solver(1.0, 20),
        )
        outcome = run_experiment2(cfg)
        assert_allclose(outcome.restored, outcome.truth, atol=1e-6)

    def test_full_model_beats_ablations(self):
        cfg = load_config(CONFIG_DIR / "experiment2.json")
        full = run_experiment2(cfg).metrics
        no_tv = run_experiment2(cfg.with_overrides(use_tv=False)).metrics
        no_l1 = run_experiment2(cfg.with_overrides(use_l1=False)).metrics

        self.assertLess(full["restored_rel_err_db"], full["degraded_rel_err_db"])
        self.assertLess(full["restored_rel_err_db"], no_tv["restored_rel_err_db"])
        self.assertLess(full["restored_rel_err_db"], no_l1["restored_rel_err_db"])
        self.assertFalse(no_tv["use_tv"])

    def test_reruns_are_bitwise_identical(self):
        cfg = experiment2(size=16, wavelet="haar", levels=1, noise={"sigma": 3.0, "seed": 4}, solver=solver(1.0, 15))
        first, second = run_experiment2(cfg), run_experiment2(cfg)
        self.assertEqual(first.restored.tobytes(), second.restored.tobytes())
        assert_array_equal(first.degraded, second.degraded)
        with tempfile.TemporaryDirectory() as tmp:
            a = write_pgm(Path(tmp) / "a.pgm", first.restored)
            b = write_pgm(Path(tmp) / "b.pgm", second.restored)
            self.assertEqual(a.read_bytes(), b.read_bytes())


class Experiment3Tests(SimpleTestCase):
    def test_masks_follow_the_sampling_grid(self):
        problem = build_experiment3(experiment3())
        self.assertTrue(is_hermitian_mask(problem.notches))
        self.assertTrue(problem.notches[0] and problem.notches[20] and problem.notches[1004])
        self.assertFalse(problem.notches[10])
        self.assertEqual(int(problem.notches.sum()), 51)
        self.assertTrue(problem.stopband[121])
        self.assertFalse(problem.stopband[120])

        mask = problem.time_mask
        self.assertFalse(mask[511] or mask[512] or mask[448] or mask[575])
        self.assertTrue(mask[447] and mask[576] and mask[520] and mask[503] and mask[455] and mask[568])
        self.assertEqual(int(mask.sum()), 1024 - 128 + 14)

    def test_time_mask_clips_to_the_signal(self):
        mask = pulse_time_mask(16, 160.0, 50.0, 25.0)
        assert_array_equal(np.flatnonzero(mask), [0, 1, 2, 3, 12, 13, 14, 15])
        self.assertFalse(pulse_time_mask(16, 2560.0, 50.0, 3.125).any())

    def test_reference_configuration_reports_the_solver_output(self):
        cfg = load_config(CONFIG_DIR / "experiment3.json")
        outcome = run_experiment3(cfg)
        problem = build_experiment3(cfg)
        metrics = outcome.metrics

        self.assertEqual(len(outcome.log), 100)
        assert_array_equal(outcome.pulse, outcome.result.solution)
        self.assertNotIn("projected", outcome.extras)
        self.assertNotIn("correction", metrics)
        self.assertEqual(metrics["violations"], constraint_violations(problem, outcome.pulse))
        self.assertEqual(metrics["max_violation"], max(metrics["violations"].values()))
        self.assertEqual(metrics["feasible"], metrics["max_violation"] <= 1e-6)
        # 100 iterations leave the hard constraints violated by ~1e-4
        self.assertLess(metrics["max_violation"], 1e-3)
        self.assertGreaterEqual(metrics["stopband_attenuation_db"], 29.9)
        self.assertTrue(np.isfinite(metrics["soft_objective"]))
        self.assertEqual(metrics["qualification"], "satisfied")
        self.assertEqual(len(outcome.spectrum["frequency_hz"]), 513)

    def test_small_problem_reaches_the_feasibility_tolerance(self):
        cfg = small_pulse(solver=solver(0.2, 5000, tolerance=1e-14))
        outcome = run_experiment3(cfg)
        problem = build_experiment3(cfg)
        spectrum = np.abs(np.fft.fft(outcome.pulse))

        self.assertTrue(outcome.metrics["feasible"])
        self.assertTrue(np.all(spectrum[problem.notches] <= 1e-6))
        self.assertTrue(np.all(spectrum[problem.stopband] <= cfg.rho + 1e-6))
        self.assertLessEqual(norm(outcome.pulse), cfg.energy + 1e-6)

    def test_finishing_projection_is_opt_in(self):
        cfg = experiment3(samples=64, finish_projection=True, solver=solver(0.2, 100))
        outcome = run_experiment3(cfg)
        problem = build_experiment3(cfg)
        projected = outcome.extras["projected"]
        spectrum = np.abs(np.fft.fft(projected))

        assert_array_equal(outcome.pulse, outcome.result.solution)
        self.assertTrue(np.all(spectrum[problem.notches] <= 1e-9))
        self.assertTrue(np.all(spectrum[problem.stopband] <= cfg.rho + 1e-9))
        self.assertLessEqual(norm(projected), cfg.energy + 1e-9)
        self.assertLessEqual(max(outcome.metrics["projected_violations"].values()), 1e-9)
        self.assertAlmostEqual(outcome.metrics["correction"], norm(projected - outcome.pulse), places=12)
        self.assertEqual(outcome.metrics["violations"], constraint_violations(problem, outcome.pulse))

    def test_loose_bounds_reach_a_symmetric_notched_signal(self):
        cfg = small_pulse(
            rho=1e6, energy=1e6, support_ms=200.0, crossing_ms=200.0, solver=solver(0.2, 2000, tolerance=1e-14),
        )
        outcome = run_experiment3(cfg)
        self.assertFalse(build_experiment3(cfg).time_mask.any())
        self.assertLessEqual(outcome.metrics["symmetry_distance"], 1e-6)
        self.assertLessEqual(outcome.metrics["violations"]["notch_max_magnitude"], 1e-6)
        self.assertLessEqual(abs(outcome.pulse[7] - 1.0), 1e-6)

    def test_small_problem_matches_oracle(self):
        cfg = small_pulse()
        problem = build_experiment3(cfg)
        terms = [OracleTerm.from_prox(f) for f in problem.functions[:3]]
        for projector in problem.soft:
            terms.append(OracleTerm(
                value=lambda x, p=projector: p.distance(x) ** 2,
                subgradient=lambda x, p=projector: 2.0 * (x - p.project(x)),
            ))
        oracle = min_oracle(
            OracleProblem(terms, dimension=cfg.samples),
            iterations=2000,
            step=0.2,
            step_rule="constant",
            dykstra_iterations=100,
        )

        outcome = run_experiment3(cfg)
        value = sum(p.distance(outcome.pulse) ** 2 for p in problem.soft)
        self.assertLessEqual(abs(value - oracle.value), 1e-4 * max(1.0, oracle.value))


# ============================================================
#   COMMAND LINE
# ============================================================

@override_settings(PROXSPLIT_PROGRESS=False)
class ProxsplitCommandTests(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def write_config(self, data):
        path = self.dir / "config.json"
        path.write_text(json.dumps(data))
        return path

    def run_command(self, config, out, **options):
        stdout = StringIO()
        call_command("proxsplit", "run", config=str(config), out=str(out), stdout=stdout, stderr=StringIO(), **options)
        return stdout.getvalue()

    def test_pulse_run_writes_artifacts_and_record(self):
        config = self.write_config({
            "schema_version": 1, "experiment": 3, "samples": 64, "solver": solver(0.2, 10),
        })
        out = self.dir / "pulse"
        output = self.run_command(config, out, record=True)

        for name in ("pulse.csv", "spectrum.csv", "log.csv", "metrics.json"):
            self.assertTrue((out / name).exists(), name)
        with (out / "log.csv").open() as handle:
            rows = list(csv.reader(handle))
        self.assertEqual(rows[0], ["n", "objective", "residual", "lambda", "millis"])
        self.assertEqual(len(rows), 11)
        with (out / "pulse.csv").open() as handle:
            self.assertEqual(len(list(csv.reader(handle))), 65)

        metrics = json.loads((out / "metrics.json").read_text())
        self.assertEqual(metrics["experiment"], 3)
        self.assertEqual(metrics["iterations"], 10)
        self.assertIs(metrics["feasible"], metrics["max_violation"] <= 1e-6)
        self.assertFalse((out / "projected_pulse.csv").exists())
        self.assertIn("finished after 10 iterations", output)

        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, RunStatusChoices.COMPLETED)
        self.assertEqual(run.iterations, 10)
        self.assertEqual(run.metrics["experiment"], 3)
        self.assertIsNotNone(run.finished_at)

    def test_finishing_projection_writes_its_own_pulse(self):
        config = self.write_config({
            "schema_version": 1, "experiment": 3, "samples": 64, "finish_projection": True,
            "solver": solver(0.2, 10),
        })
        out = self.dir / "projected"
        self.run_command(config, out)
        with (out / "projected_pulse.csv").open() as handle:
            rows = list(csv.reader(handle))
        self.assertEqual(rows[0], ["index", "time_ms", "value"])
        self.assertEqual(len(rows), 65)
        metrics = json.loads((out / "metrics.json").read_text())
        self.assertLessEqual(max(metrics["projected_violations"].values()), 1e-9)
        self.assertIn("correction", metrics)

    def test_imaging_run_writes_images(self):
        config = self.write_config({
            "schema_version": 1, "experiment": 1, "size": 16, "noise": {"sigma": 2.0, "seed": 1},
            "solver": solver(0.25, 5),
        })
        out = self.dir / "image"
        self.run_command(config, out, seed=8)
        self.assertEqual(read_pgm(out / "restored.pgm").shape, (16, 16))
        self.assertEqual(read_pgm(out / "degraded.pgm").shape, (16, 16))
        self.assertFalse(ExperimentRun.objects.exists())

    def test_ablation_flags(self):
        config = self.write_config({
            "schema_version": 1, "experiment": 2, "size": 16, "wavelet": "haar", "levels": 1,
            "solver": solver(1.0, 3),
        })
        out = self.dir / "ablation"
        self.run_command(config, out, no_tv=True)
        metrics = json.loads((out / "metrics.json").read_text())
        self.assertFalse(metrics["use_tv"])
        self.assertTrue(metrics["use_l1"])

    def test_invalid_config_becomes_command_error(self):
        config = self.write_config({"schema_version": 1, "experiment": 2, "solver": {"iterations": 3}})
        with self.assertRaises(CommandError) as ctx:
            self.run_command(config, self.dir / "never")
        self.assertIn("solver.gamma", str(ctx.exception))
        self.assertFalse((self.dir / "never").exists())
