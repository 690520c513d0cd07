from django.db import models


class ExperimentRun(models.Model):
    TAG_CHOICES = [
        ('k-sweep', 'Effect of K'),
        ('expanding-range', 'Expanding range'),
        ('sliding-range', 'Sliding range'),
        ('single-run', 'Single run'),
        ('width-sweep', 'Envelope width sweep'),
    ]

    experiment_id = models.AutoField(primary_key=True)
    tag = models.CharField(max_length=32, choices=TAG_CHOICES)
    config = models.JSONField(help_text="Resolved configuration, as written to config.json")
    output_dir = models.CharField(max_length=500)
    job_count = models.PositiveIntegerField(default=0)
    runtime_seconds = models.FloatField(default=0.0)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['-created_at']

    def __str__(self):
        return f"{self.tag} #{self.experiment_id} ({self.output_dir})"


class LearnerRun(models.Model):
    ALGORITHM_CHOICES = [
        ('ucbvi', 'UCBVI'),
        ('q-shaping', 'Q-shaping'),
        ('v-shaping', 'V-shaping'),
        ('upper-bonus', 'Upper-Bonus Shaping'),
        ('envelope', 'Envelope only'),
    ]

    run_id = models.AutoField(primary_key=True)
    experiment = models.ForeignKey(ExperimentRun, on_delete=models.CASCADE, related_name="learner_runs")
    algorithm = models.CharField(max_length=20, choices=ALGORITHM_CHOICES)
    param = models.FloatField(null=True, blank=True)  # K or x; empty for the k-sweep baseline
    seed = models.IntegerField()
    final_regret = models.FloatField(default=0.0)
    r_max = models.FloatField(default=0.0)
    d_max = models.FloatField(default=0.0)
    relative_improvement = models.FloatField(null=True, blank=True)
    sandwich_holds = models.BooleanField(null=True, blank=True)
    runtime_seconds = models.FloatField(default=0.0)

    class Meta:
        ordering = ['algorithm', 'param', 'seed']

    def __str__(self):
        return f"{self.algorithm} param={self.param} seed={self.seed}"
