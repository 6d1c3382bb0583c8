from django.contrib import admin

from .models import ExperimentRun


class ExperimentRunAdmin(admin.ModelAdmin):
    model = ExperimentRun
    readonly_fields = ('created', 'modified', 'config_hash', 'data_hash')
    list_display = ('name', 'kind', 'mode', 'status', 'bleu4', 'rouge_l',
                    'meteor_lite', 'n_examples', 'created')
    list_filter = ('kind', 'mode', 'status')
    search_fields = ('name', 'config_hash', 'run_dir')
    fieldsets = (
        (None, {
            'fields': ('name', ('kind', 'mode'), ('status', 'failed_stage'))}),
        ('Scores', {
            'fields': ('bleu4', 'rouge_l', 'meteor_lite', 'n_examples')}),
        ('Provenance', {
            'classes': ('collapse',),
            'fields': ('run_dir', 'config_hash', 'data_hash', 'config')}),
        ('Details', {
            'classes': ('collapse',),
            'fields': ('created', 'modified')}),
    )

admin.site.register(ExperimentRun, ExperimentRunAdmin)
