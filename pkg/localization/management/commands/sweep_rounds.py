from ._experiment import ExperimentCommand


class Command(ExperimentCommand):
    """
    RMSE versus communication rounds. Iterative methods run exactly k rounds
    for k = 1..k_max; one-round methods repeat their single-round result.
    """
    help = 'Sweep the number of communication rounds from 1 to --k-max'
    title = 'RMSE VERSUS COMMUNICATION ROUNDS'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--k-max', type=int, default=10, help='Largest number of rounds (default 10)')

    def sweep_overrides(self, options):
        return {'sweep': {'kind': 'rounds', 'values': list(range(1, options['k_max'] + 1))}}
