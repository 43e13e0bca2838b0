# Generated by Django 5.2.7 on 2026-10-18 10:42

import django.utils.timezone
import uuid
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.UUIDField(default=uuid.uuid4, editable=False, primary_key=True, serialize=False)),
                ('experiment', models.PositiveSmallIntegerField(choices=[(1, 'Deconvolution with vignette and phase prior'), (2, 'Frame-domain deconvolution with l1 and total variation'), (3, 'Pulse shape design')], help_text='Which experiment was run.')),
                ('status', models.CharField(choices=[('running', 'Running'), ('completed', 'Completed'), ('failed', 'Failed')], default='running', help_text='Current state of the run.', max_length=16)),
                ('config', models.JSONField(help_text='Validated configuration, overrides applied.')),
                ('seed', models.PositiveIntegerField(blank=True, help_text='Noise seed (imaging experiments only).', null=True)),
                ('iterations', models.PositiveIntegerField(default=0, help_text='Solver iterations performed.')),
                ('metrics', models.JSONField(blank=True, default=dict, help_text='Contents of metrics.json.')),
                ('output_dir', models.CharField(help_text='Directory the artifacts were written to.', max_length=1024)),
                ('error', models.TextField(blank=True, help_text='Failure message for failed runs.')),
                ('started_at', models.DateTimeField(default=django.utils.timezone.now)),
                ('finished_at', models.DateTimeField(blank=True, null=True)),
            ],
            options={
                'verbose_name': 'Experiment Run',
                'verbose_name_plural': 'Experiment Runs',
                'ordering': ['-started_at'],
            },
        ),
    ]
