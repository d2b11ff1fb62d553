"""Shared plumbing for the experiment commands: flags, banner, run, persist."""
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from localization.channel import measurements_to_csv
from localization.config import load_experiment_config, load_scenario_file, swarmloc_default
from localization.exceptions import LocalizationError
from localization.harness import emit_csv, monte_carlo, single_run
from localization.models import Experiment
from localization.simnet import cost_reports_to_csv


class ExperimentCommand(BaseCommand):
    title = 'EXPERIMENT'

    def add_arguments(self, parser):
        parser.add_argument('--config', type=str, help='JSON experiment config file')
        parser.add_argument('--scenario', type=str, help='JSON scenario file; replaces the config template')
        parser.add_argument('--trials', type=int, help='Monte Carlo trials per sweep point and method')
        parser.add_argument('--seed', type=int, help='Base seed; the same seed reproduces the same table')
        parser.add_argument('--out', type=str, help='CSV output path')
        parser.add_argument('--methods', nargs='+', help='Subset of DMM DGN DEF DEM AVG')
        parser.add_argument('--measurements-out', type=str, help='Write the RSS samples of trial 0 as CSV')
        parser.add_argument('--costs-out', type=str, help='Write the per-method cost reports of trial 0 as CSV')
        parser.add_argument('--no-record', action='store_true', help='Skip storing the table in the database')
        parser.add_argument('--no-progress', action='store_true', help='Hide the trial progress bar')

    def sweep_overrides(self, options):
        """Sweep settings this command forces on top of the config file."""
        return {}

    def load_config(self, options):
        scenario = options.get('scenario')
        return load_experiment_config(
            options.get('config'),
            scenario=load_scenario_file(scenario) if scenario else None,
            trials=options.get('trials'),
            seed=options.get('seed'),
            output=options.get('out'),
            methods=options.get('methods'),
            **self.sweep_overrides(options),
        )

    def output_path(self, config):
        if config.output:
            return Path(config.output)
        return Path(swarmloc_default('OUTPUT_DIR')) / f"{config.name}-{self.command_name}.csv"

    @property
    def command_name(self):
        return self.__module__.rsplit('.', 1)[-1]

    def handle(self, *args, **options):
        self.stdout.write("=" * 70)
        self.stdout.write(self.style.SUCCESS(f"  📡 SWARMLOC - {self.title}"))
        self.stdout.write("=" * 70)

        try:
            config = self.load_config(options)
            self.stdout.write(
                f"🛰️  {config.name}: template={config.template if config.scenario is None else 'explicit'}, "
                f"trials={config.trials}, seed={config.seed}, "
                f"methods={' '.join(m.value for m in config.ordered_methods)}"
            )
            table = monte_carlo(config, progress=not options.get('no_progress'))
            path = emit_csv(table, self.output_path(config))
            self.write_trial_zero(config, options)
        except LocalizationError as e:
            raise CommandError(f"❌ {type(e).__name__}: {e}") from e

        self.report(table)

        if not options.get('no_record'):
            experiment = Experiment.record(table, config, command=self.command_name, output_path=path)
            self.stdout.write(f"💾 Stored as experiment #{experiment.pk}")

        self.stdout.write(self.style.SUCCESS(f"✅ Wrote {len(table)} rows to {path}"))
        return None

    def write_trial_zero(self, config, options):
        """Measurement and cost CSVs of one seeded draw, when asked for."""
        measurements_out = options.get('measurements_out')
        costs_out = options.get('costs_out')
        if not (measurements_out or costs_out):
            return
        draw = single_run(config)
        if measurements_out:
            measurements_to_csv(draw.measurements, measurements_out)
            self.stdout.write(f"📝 Measurements of trial 0 written to {measurements_out}")
        if costs_out:
            cost_reports_to_csv(draw.reports, costs_out)
            self.stdout.write(f"📝 Cost reports of trial 0 written to {costs_out}")

    def report(self, table):
        self.stdout.write(f"\n{'sweep':>8} {'method':>6} {'rmse_m':>10} {'crlb_m':>10} {'bits':>10} {'failed':>7}")
        for row in table:
            sweep = '-' if row.sweep is None else f"{row.sweep:g}"
            line = (
                f"{sweep:>8} {row.method:>6} {row.rmse_m:>10.2f} {row.crlb_root_m:>10.2f} "
                f"{row.bits:>10.0f} {row.failures:>7d}"
            )
            if row.failures:
                self.stdout.write(self.style.WARNING(line))
            else:
                self.stdout.write(line)
