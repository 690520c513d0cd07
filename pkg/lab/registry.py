"""
Index of finished experiments in the database.

The output directory stays the source of truth; a registry row only points at it and keeps
the per-run scalars searchable from the admin and the API.
"""
import logging
import math

from django.db import transaction

from .models import ExperimentRun, LearnerRun

logger = logging.getLogger(__name__)


def _optional(value):
    if value is None:
        return None
    value = float(value)
    return None if math.isnan(value) else value


def _optional_flag(value):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    return bool(value)


@transaction.atomic
def record_experiment(cfg, result):
    """
    Store one experiment and its learner runs

    Args:
        cfg: the ExperimentConfig that was run
        result: the AggregateResult run_experiment returned

    Returns:
        ExperimentRun: the created registry row
    """
    experiment = ExperimentRun.objects.create(
        tag=cfg.tag,
        config=cfg.as_dict(),
        output_dir=str(cfg.output_dir),
        job_count=len(result.runs),
        runtime_seconds=result.runtime,
    )
    runs = [
        LearnerRun(
            experiment=experiment,
            algorithm=row['algorithm'],
            param=_optional(row['param']),
            seed=int(row['seed']),
            final_regret=float(row['final_regret']),
            r_max=float(row['r_max']),
            d_max=float(row['d_max']),
            relative_improvement=_optional(row['relative_improvement']),
            sandwich_holds=_optional_flag(row['sandwich_holds']),
            runtime_seconds=float(row.get('runtime', 0.0)),
        )
        for row in result.runs.to_dict('records')
    ]
    LearnerRun.objects.bulk_create(runs)
    logger.info('Recorded experiment #%d with %d runs', experiment.experiment_id, len(runs))
    return experiment
