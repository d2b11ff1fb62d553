from ._experiment import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Sweep the cluster size over --uavs'
    title = 'RMSE VERSUS NUMBER OF UAVS'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--uavs', type=int, nargs='+', default=[4, 6, 8], help='Cluster sizes (default 4 6 8)')

    def sweep_overrides(self, options):
        return {'sweep': {'kind': 'uav_count', 'values': options['uavs']}}
