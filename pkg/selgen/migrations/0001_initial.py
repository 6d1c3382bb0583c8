from django.db import migrations, models
import django_extensions.db.fields


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.AutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('created', django_extensions.db.fields.CreationDateTimeField(auto_now_add=True, verbose_name='created')),
                ('modified', django_extensions.db.fields.ModificationDateTimeField(auto_now=True, verbose_name='modified')),
                ('name', models.CharField(help_text='Experiment name.', max_length=100)),
                ('kind', models.CharField(choices=[('pipeline', 'Pipeline'), ('sweep_k', 'Top-k sweep'), ('compare_modes', 'Mode comparison'), ('compare_backends', 'Backend comparison')], default='pipeline', help_text='Which command started this run.', max_length=20)),
                ('mode', models.CharField(help_text='Training mode.', max_length=20)),
                ('config', models.JSONField(default=dict, help_text='Fully resolved experiment config.')),
                ('config_hash', models.CharField(db_index=True, max_length=12)),
                ('data_hash', models.CharField(blank=True, help_text='sha256 over the input data files.', max_length=64)),
                ('run_dir', models.CharField(max_length=500, unique=True)),
                ('status', models.CharField(choices=[('running', 'Running'), ('finished', 'Finished'), ('failed', 'Failed')], default='running', max_length=10)),
                ('failed_stage', models.CharField(blank=True, help_text='Pipeline stage that raised, for failed runs.', max_length=20)),
                ('bleu4', models.FloatField(blank=True, null=True)),
                ('rouge_l', models.FloatField(blank=True, null=True)),
                ('meteor_lite', models.FloatField(blank=True, null=True)),
                ('n_examples', models.IntegerField(blank=True, null=True)),
            ],
            options={
                'get_latest_by': 'modified',
                'abstract': False,
            },
        ),
    ]
