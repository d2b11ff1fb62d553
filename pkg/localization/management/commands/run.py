from ._experiment import ExperimentCommand


class Command(ExperimentCommand):
    """Run the experiment described by a config file, including any sweep it declares."""
    help = 'Run one Monte Carlo localization experiment and write its RMSE table as CSV'
    title = 'MONTE CARLO EXPERIMENT'
