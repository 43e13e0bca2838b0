import logging
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from tqdm import tqdm

from Experiments.config import load_config
from Experiments.models import ExperimentRun
from Experiments.runners import run_experiment
from Experiments.utils import jsonable, write_csv, write_json, write_pgm
from Main.exceptions import ProxSplitError

logger = logging.getLogger(__name__)

PULSE_HEADER = ("index", "time_ms", "value")


def pulse_rows(times, values):
    return [(k, f"{t:.6f}", repr(float(v))) for k, (t, v) in enumerate(zip(times, values))]


class Command(BaseCommand):
    help = "Run one of the reconstruction experiments from a JSON config and write its artifacts."

    def add_arguments(self, parser):
        parser.add_argument("action", choices=["run"], help="Only 'run' is available")
        parser.add_argument("--config", required=True, help="Path to the experiment JSON config")
        parser.add_argument("--out", required=True, help="Directory for the output files")
        parser.add_argument("--no-tv", action="store_true", help="Drop the total variation terms (experiment 2)")
        parser.add_argument("--no-l1", action="store_true", help="Drop the l1 term (experiment 2)")
        parser.add_argument("--seed", type=int, default=None, help="Override the noise seed")
        parser.add_argument("--record", action="store_true", help="Store the run in the database")

    def handle(self, *args, **options):
        try:
            cfg = load_config(options["config"])
        except ProxSplitError as exc:
            raise CommandError(str(exc)) from exc

        cfg = cfg.with_overrides(
            seed=options["seed"],
            use_tv=False if options["no_tv"] else None,
            use_l1=False if options["no_l1"] else None,
        )
        if (options["no_tv"] or options["no_l1"]) and cfg.experiment != 2:
            self.stderr.write(self.style.WARNING("--no-tv/--no-l1 only affect experiment 2; ignored"))

        out = Path(options["out"])
        out.mkdir(parents=True, exist_ok=True)
        self.stdout.write(self.style.MIGRATE_HEADING(f" Running experiment {cfg.experiment} into {out}"))

        record = None
        if options["record"]:
            record = ExperimentRun.objects.create(
                experiment=cfg.experiment,
                config=cfg.model_dump(mode="json"),
                seed=cfg.seed,
                output_dir=str(out),
            )

        progress = tqdm(
            total=cfg.solver.iterations,
            desc=f"experiment {cfg.experiment}",
            unit="it",
            disable=not settings.PROXSPLIT_PROGRESS,
        )

        def advance(state, record_):
            progress.update(1)
            if record_.objective is not None:
                progress.set_postfix(objective=f"{record_.objective:.4g}", step=f"{record_.residual:.2e}")

        try:
            outcome = run_experiment(cfg, callback=advance)
        except ProxSplitError as exc:
            if record is not None:
                record.mark_failed(exc)
            self.stderr.write(self.style.ERROR(f"Experiment {cfg.experiment} failed: {exc}"))
            raise CommandError(str(exc)) from exc
        finally:
            progress.close()

        written = self.write_outputs(outcome, out)
        if record is not None:
            record.mark_completed(outcome.result.iterations, written["metrics"])

        for name in sorted(written["files"]):
            self.stdout.write(f"   {name}")
        self.stdout.write(self.style.SUCCESS(
            f"Experiment {cfg.experiment} finished after {outcome.result.iterations} iterations "
            f"({outcome.result.status.value})"
        ))

    def write_outputs(self, outcome, out):
        files = []
        if outcome.restored is not None:
            files.append(write_pgm(out / "restored.pgm", outcome.restored).name)
            files.append(write_pgm(out / "degraded.pgm", outcome.degraded).name)
        if outcome.pulse is not None:
            times = outcome.extras["time_ms"]
            files.append(write_csv(out / "pulse.csv", PULSE_HEADER, pulse_rows(times, outcome.pulse)).name)
            if "projected" in outcome.extras:
                rows = pulse_rows(times, outcome.extras["projected"])
                files.append(write_csv(out / "projected_pulse.csv", PULSE_HEADER, rows).name)
            spectrum = outcome.spectrum
            rows = zip(spectrum["frequency_hz"], spectrum["magnitude"], spectrum["magnitude_db"])
            rows = [(f"{f:.6f}", repr(float(m)), f"{d:.6f}") for f, m, d in rows]
            files.append(write_csv(out / "spectrum.csv", ("frequency_hz", "magnitude", "magnitude_db"), rows).name)
        files.append(outcome.log.to_csv(out / "log.csv").name)

        metrics = {"experiment": outcome.experiment, **outcome.metrics}
        files.append(write_json(out / "metrics.json", metrics).name)
        logger.info(f"wrote {len(files)} files to {out}")
        return {"files": files, "metrics": jsonable(metrics)}
