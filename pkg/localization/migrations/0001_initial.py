# Generated by Django 5.2.4 on 2026-10-19 09:00

import django.db.models.deletion
import django.utils.timezone
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='Experiment',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('name', models.CharField(max_length=200)),
                ('command', models.CharField(default='run', max_length=50)),
                ('created_at', models.DateTimeField(default=django.utils.timezone.now)),
                ('config', models.JSONField(blank=True, default=dict)),
                ('trials', models.IntegerField(default=0)),
                ('seed', models.BigIntegerField(default=0)),
                ('output_path', models.CharField(blank=True, default='', max_length=500)),
                ('status', models.CharField(choices=[('RUNNING', 'Running'), ('COMPLETED', 'Completed'), ('FAILED', 'Failed')], default='RUNNING', max_length=20)),
            ],
            options={
                'ordering': ['-created_at'],
            },
        ),
        migrations.CreateModel(
            name='ExperimentResult',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('sweep', models.FloatField(blank=True, null=True)),
                ('method', models.CharField(choices=[('DMM', 'Distributed majorize-minimization'), ('DGN', 'Distributed Gauss-Newton'), ('DEF', 'Estimate fusion with Fisher weights'), ('DEM', 'Estimate fusion with scalar weights'), ('AVG', 'Plain average fusion')], max_length=10)),
                ('rmse_m', models.FloatField(blank=True, null=True)),
                ('crlb_root_m', models.FloatField(blank=True, null=True)),
                ('bits', models.FloatField(blank=True, null=True)),
                ('flops', models.FloatField(blank=True, null=True)),
                ('trials', models.IntegerField(default=0)),
                ('failures', models.IntegerField(default=0)),
                ('experiment', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='results', to='localization.experiment')),
            ],
            options={
                'ordering': ['experiment', 'sweep', 'id'],
            },
        ),
    ]
