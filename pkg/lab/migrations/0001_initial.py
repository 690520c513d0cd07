# Generated by Django 5.2.7 on 2026-10-19 10:12

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('experiment_id', models.AutoField(primary_key=True, serialize=False)),
                ('tag', models.CharField(choices=[('k-sweep', 'Effect of K'), ('expanding-range', 'Expanding range'), ('sliding-range', 'Sliding range'), ('single-run', 'Single run'), ('width-sweep', 'Envelope width sweep')], max_length=32)),
                ('config', models.JSONField(help_text='Resolved configuration, as written to config.json')),
                ('output_dir', models.CharField(max_length=500)),
                ('job_count', models.PositiveIntegerField(default=0)),
                ('runtime_seconds', models.FloatField(default=0.0)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at'],
            },
        ),
        migrations.CreateModel(
            name='LearnerRun',
            fields=[
                ('run_id', models.AutoField(primary_key=True, serialize=False)),
                ('algorithm', models.CharField(choices=[('ucbvi', 'UCBVI'), ('q-shaping', 'Q-shaping'), ('v-shaping', 'V-shaping'), ('upper-bonus', 'Upper-Bonus Shaping'), ('envelope', 'Envelope only')], max_length=20)),
                ('param', models.FloatField(blank=True, null=True)),
                ('seed', models.IntegerField()),
                ('final_regret', models.FloatField(default=0.0)),
                ('r_max', models.FloatField(default=0.0)),
                ('d_max', models.FloatField(default=0.0)),
                ('relative_improvement', models.FloatField(blank=True, null=True)),
                ('sandwich_holds', models.BooleanField(blank=True, null=True)),
                ('runtime_seconds', models.FloatField(default=0.0)),
                ('experiment', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='learner_runs', to='lab.experimentrun')),
            ],
            options={
                'ordering': ['algorithm', 'param', 'seed'],
            },
        ),
    ]
