from django.contrib import admin
from .models import ExperimentRun, LearnerRun


class LearnerRunInline(admin.TabularInline):
    model = LearnerRun
    extra = 0
    fields = ['algorithm', 'param', 'seed', 'final_regret', 'relative_improvement', 'd_max', 'r_max']
    readonly_fields = fields
    can_delete = False


# =====================================================
# EXPERIMENT ADMIN
# =====================================================
@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    """Registry of finished experiments; the files in output_dir stay the source of truth"""

    list_display = ['experiment_id', 'tag', 'output_dir', 'job_count', 'runtime_seconds', 'created_at', 'run_count']
    list_filter = ['tag', 'created_at']
    search_fields = ['output_dir']
    readonly_fields = ['experiment_id', 'created_at']
    list_per_page = 25
    ordering = ['-created_at']
    inlines = [LearnerRunInline]

    def run_count(self, obj):
        """Number of recorded learner runs"""
        return obj.learner_runs.count()
    run_count.short_description = 'Runs'


# =====================================================
# LEARNER RUN ADMIN
# =====================================================
@admin.register(LearnerRun)
class LearnerRunAdmin(admin.ModelAdmin):
    list_display = ['run_id', 'experiment', 'algorithm', 'param', 'seed', 'final_regret',
                    'relative_improvement', 'sandwich_holds']
    list_filter = ['algorithm', 'experiment__tag', 'sandwich_holds']
    search_fields = ['experiment__output_dir']
    list_per_page = 50
    ordering = ['experiment', 'algorithm', 'param', 'seed']
