import uuid
from django.db import models
from django.utils import timezone


class ExperimentChoices(models.IntegerChoices):
    """The three reconstruction experiments."""
    VIGNETTE = 1, "Deconvolution with vignette and phase prior"
    FRAME_TV = 2, "Frame-domain deconvolution with l1 and total variation"
    PULSE = 3, "Pulse shape design"


class RunStatusChoices(models.TextChoices):
    """Lifecycle of a recorded run."""
    RUNNING = "running", "Running"
    COMPLETED = "completed", "Completed"
    FAILED = "failed", "Failed"


class ExperimentRun(models.Model):
    """
    One invocation of ``proxsplit run`` recorded with ``--record``.
    The files written to ``output_dir`` remain the primary artifacts.
    """

    id = models.UUIDField(primary_key=True, default=uuid.uuid4, editable=False)
    experiment = models.PositiveSmallIntegerField(
        choices=ExperimentChoices.choices,
        help_text="Which experiment was run."
    )
    status = models.CharField(
        max_length=16,
        choices=RunStatusChoices.choices,
        default=RunStatusChoices.RUNNING,
        help_text="Current state of the run."
    )
    config = models.JSONField(help_text="Validated configuration, overrides applied.")
    seed = models.PositiveIntegerField(
        null=True,
        blank=True,
        help_text="Noise seed (imaging experiments only)."
    )
    iterations = models.PositiveIntegerField(
        default=0,
        help_text="Solver iterations performed."
    )
    metrics = models.JSONField(default=dict, blank=True, help_text="Contents of metrics.json.")
    output_dir = models.CharField(max_length=1024, help_text="Directory the artifacts were written to.")
    error = models.TextField(blank=True, help_text="Failure message for failed runs.")
    started_at = models.DateTimeField(default=timezone.now)
    finished_at = models.DateTimeField(null=True, blank=True)

    class Meta:
        ordering = ["-started_at"]
        verbose_name = "Experiment Run"
        verbose_name_plural = "Experiment Runs"

    def __str__(self):
        return f"Experiment {self.experiment} ({self.status}) at {self.started_at:%Y-%m-%d %H:%M}"

    def mark_completed(self, iterations, metrics):
        self.status = RunStatusChoices.COMPLETED
        self.iterations = iterations
        self.metrics = metrics
        self.finished_at = timezone.now()
        self.save(update_fields=["status", "iterations", "metrics", "finished_at"])

    def mark_failed(self, error):
        self.status = RunStatusChoices.FAILED
        self.error = str(error)
        self.finished_at = timezone.now()
        self.save(update_fields=["status", "error", "finished_at"])
