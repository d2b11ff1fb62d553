from django.contrib import admin

from .models import Experiment, ExperimentResult


class ExperimentResultInline(admin.TabularInline):
    model = ExperimentResult
    extra = 0
    readonly_fields = ('sweep', 'method', 'rmse_m', 'crlb_root_m', 'bits', 'flops', 'trials', 'failures')
    can_delete = False


@admin.register(Experiment)
class ExperimentAdmin(admin.ModelAdmin):
    list_display = ('id', 'name', 'command', 'trials', 'seed', 'status', 'created_at')
    list_filter = ('command', 'status', 'created_at')
    search_fields = ('name', 'output_path')
    readonly_fields = ('created_at',)
    inlines = [ExperimentResultInline]

    fieldsets = (
        ('Experiment', {
            'fields': ('name', 'command', 'status', 'created_at')
        }),
        ('Reproduction', {
            'fields': ('trials', 'seed', 'output_path', 'config'),
            'classes': ('collapse',)
        }),
    )


@admin.register(ExperimentResult)
class ExperimentResultAdmin(admin.ModelAdmin):
    list_display = ('id', 'experiment', 'sweep', 'method', 'rmse_m', 'crlb_root_m', 'bits', 'flops', 'failure_rate')
    list_filter = ('method', ('experiment', admin.RelatedOnlyFieldListFilter))
    search_fields = ('experiment__name', 'method')
    raw_id_fields = ('experiment',)

    def failure_rate(self, obj):
        """Failed trials as a share of all attempted trials"""
        attempted = obj.trials + obj.failures
        return f"{100 * obj.failures / attempted:.1f}%" if attempted else "-"
    failure_rate.short_description = "Failures"

    def get_queryset(self, request):
        return super().get_queryset(request).select_related('experiment')
