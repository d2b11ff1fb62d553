import csv
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from localization.channel import sample_measurements
from localization.estimators import Method, def_fuse, dem_fuse, grid_search_local, run_dgn, run_dmm
from localization.exceptions import ConfigurationError, ContractViolation, RankDeficientFusionError
from localization.geometry import Aoi
from localization.simnet import (
    COST_CSV_COLUMNS,
    ClusterNetwork,
    PayloadKind,
    ProtocolOptions,
    comm_bits_closed_form,
    cost_reports_to_csv,
    flops_closed_form,
    grid_node_count,
    run_protocol,
)

from .factories import line_scenario, ring_scenario


class ClosedFormCostTests(SimpleTestCase):

    def test_bits_for_five_uavs(self):
        self.assertEqual(comm_bits_closed_form('DMM', 5, 3, 32, 32, k=4), 3072)
        self.assertEqual(comm_bits_closed_form('DGN', 5, 3, 32, 32, k=10), 19200)
        self.assertEqual(comm_bits_closed_form('DEF', 5, 3, 32, 32), 1536)
        self.assertEqual(comm_bits_closed_form('DEM', 5, 3, 32, 32), 512)
        self.assertEqual(comm_bits_closed_form('AVG', 5, 3, 32, 32), 4 * 3 * 32)

    def test_one_round_methods_ignore_k(self):
        for method in ('DEF', 'DEM', 'AVG'):
            self.assertEqual(
                comm_bits_closed_form(method, 6, 3, 32, 16, k=1),
                comm_bits_closed_form(method, 6, 3, 32, 16, k=9),
            )

    def test_weight_precision_only_affects_weights(self):
        self.assertEqual(comm_bits_closed_form('DMM', 5, 3, 32, 8, k=2), comm_bits_closed_form('DMM', 5, 3, 32, 64, k=2))
        self.assertEqual(comm_bits_closed_form('DEM', 5, 3, 32, 8), 4 * (96 + 8))

    def test_flops(self):
        self.assertEqual(flops_closed_form('DMM', 3, 40, k=4), 1440)
        self.assertEqual(flops_closed_form('DGN', 3, 40, k=10), 24000)
        self.assertEqual(flops_closed_form('DEF', 3, 40, grid_nodes=3600), 1_296_000)
        self.assertEqual(flops_closed_form('DEM', 3, 40, grid_nodes=3600), 1_296_000)

    def test_grid_node_count(self):
        aoi = ring_scenario().aoi
        self.assertEqual(grid_node_count(aoi, 200.0), 3600)
        self.assertEqual(grid_node_count(aoi, 400.0), 900)
        for step in (200.0, 350.0, 5000.0, 20000.0):
            with self.subTest(step=step):
                self.assertEqual(grid_node_count(aoi, step), len(aoi.grid_nodes(step)))
        self.assertEqual(grid_node_count(Aoi((0.0, 600.0), (0.0, 600.0), (0.0, 50.0)), 200.0), 3 * 3 * 1)
        with self.assertRaises(ContractViolation):
            grid_node_count(aoi, 0.0)

    def test_invalid_arguments(self):
        with self.assertRaises(ContractViolation):
            comm_bits_closed_form('DMM', 0, 3, 32, 32)
        with self.assertRaises(ContractViolation):
            comm_bits_closed_form('DMM', 5, 3, 32, 32, k=0)
        with self.assertRaises(ContractViolation):
            flops_closed_form('DEF', 3, 40, grid_nodes=0)
        with self.assertRaises(ContractViolation):
            comm_bits_closed_form('XYZ', 5, 3, 32, 32)


class PayloadTests(SimpleTestCase):

    def test_sizes(self):
        self.assertEqual(PayloadKind.ITERATE.bit_size(3, 32, 32), 96)
        self.assertEqual(PayloadKind.GRADIENT_MATRIX.bit_size(3, 32, 32), 96 + 288)
        self.assertEqual(PayloadKind.ESTIMATE_INFO.bit_size(3, 32, 16), 96 + 144)
        self.assertEqual(PayloadKind.ESTIMATE_SCALAR.bit_size(3, 32, 16), 96 + 16)
        self.assertEqual(PayloadKind.MATRIX.bit_size(2, 32, 32), 128)
        self.assertEqual(PayloadKind.SCALAR_WEIGHT.bit_size(3, 32, 32), 32)


class ClusterNetworkTests(SimpleTestCase):

    def test_needs_an_edge(self):
        with self.assertRaises(ConfigurationError):
            ClusterNetwork(1)

    def test_rounds_must_increase_per_link(self):
        net = ClusterNetwork(3)
        net.send(2, 1, 1, PayloadKind.ESTIMATE)
        net.send(3, 1, 1, PayloadKind.ESTIMATE)
        with self.assertRaises(ContractViolation):
            net.send(2, 1, 1, PayloadKind.ESTIMATE)
        net.send(2, 1, 2, PayloadKind.ESTIMATE)
        self.assertEqual(net.bits_per_round(), (192, 96))

    def test_broadcast_reaches_every_edge(self):
        net = ClusterNetwork(4)
        sent = net.broadcast(1, PayloadKind.ITERATE, np.zeros(3))
        self.assertEqual([m.receiver for m in sent], [2, 3, 4])
        self.assertTrue(all(m.sender == 1 for m in sent))
        self.assertEqual(net.bits_total, 3 * 96)


class RunProtocolTests(SimpleTestCase):

    def setUp(self):
        self.scenario = ring_scenario()
        self.meas = sample_measurements(self.scenario, 7)

    def test_dmm_fixed_rounds(self):
        options = ProtocolOptions(tol=0.0, max_iter=4)
        _, report = run_protocol('DMM', self.scenario, self.meas, options)
        self.assertEqual(report.rounds, 4)
        self.assertEqual(report.bits_total, 3072)
        self.assertEqual(report.flops_total, 1440)
        self.assertEqual(report.messages, 2 * 4 * 4)
        self.assertEqual(report.per_round, (768,) * 4)

    def test_dgn_accounting(self):
        options = ProtocolOptions(tol=0.0, max_iter=10)
        _, report = run_protocol('DGN', self.scenario, self.meas, options)
        self.assertEqual(report.bits_total, comm_bits_closed_form('DGN', 5, 3, 32, 32, k=report.rounds))
        self.assertEqual(report.flops_total, flops_closed_form('DGN', 3, 40, k=report.rounds))
        self.assertEqual(report.messages, 2 * 4 * report.rounds)
        self.assertEqual(set(report.per_round), {4 * (96 + 96 + 288)})

    def test_one_round_methods(self):
        expected_bits = {'DEF': 1536, 'DEM': 512, 'AVG': 384}
        for method, bits in expected_bits.items():
            with self.subTest(method=method):
                _, report = run_protocol(method, self.scenario, self.meas)
                self.assertEqual(report.rounds, 1)
                self.assertEqual(report.messages, 4)
                self.assertEqual(report.bits_total, bits)
                self.assertEqual(report.flops_total, 1_296_000)
                self.assertFalse(report.fallback)

    def test_simulated_bits_match_closed_form(self):
        triples = [(3, 32, 32), (2, 16, 8), (3, 64, 16)]
        for n_uavs in range(2, 11):
            scenario = ring_scenario(n_uavs=n_uavs)
            meas = sample_measurements(scenario, n_uavs)
            for tau, p_bits, q_bits in triples:
                for method in (Method.DEF, Method.DEM, Method.AVG):
                    with self.subTest(n_uavs=n_uavs, tau=tau, p=p_bits, q=q_bits, method=method.value):
                        _, report = run_protocol(method, scenario, meas, ProtocolOptions(tau, p_bits, q_bits))
                        self.assertEqual(report.bits_total, comm_bits_closed_form(method, n_uavs, tau, p_bits, q_bits))
                        self.assertEqual(report.n_uavs, n_uavs)
                for k in range(1, 11):
                    options = ProtocolOptions(tau, p_bits, q_bits, tol=0.0, max_iter=k)
                    with self.subTest(n_uavs=n_uavs, tau=tau, p=p_bits, q=q_bits, k=k):
                        _, dmm = run_protocol('DMM', scenario, meas, options)
                        self.assertEqual(dmm.rounds, k)
                        self.assertEqual(dmm.bits_total, comm_bits_closed_form('DMM', n_uavs, tau, p_bits, q_bits, k=k))
                        self.assertEqual(dmm.flops_total, flops_closed_form('DMM', tau, 8 * n_uavs, k=k))
                        _, dgn = run_protocol('DGN', scenario, meas, options)
                        self.assertLessEqual(dgn.rounds, k)
                        self.assertEqual(
                            dgn.bits_total, comm_bits_closed_form('DGN', n_uavs, tau, p_bits, q_bits, k=dgn.rounds)
                        )
                        self.assertEqual(len(dgn.per_round), dgn.rounds)

    def test_quantization_parameters_drive_accounting(self):
        options = ProtocolOptions(tau=2, p_bits=16, q_bits=8)
        _, report = run_protocol('DEF', self.scenario, self.meas, options)
        self.assertEqual(report.bits_total, comm_bits_closed_form('DEF', 5, 2, 16, 8))

    def test_matches_direct_estimators(self):
        aoi = self.scenario.aoi
        options = ProtocolOptions(tol=1.0, max_iter=50)

        direct, rounds, _ = run_dmm(self.meas, aoi, tol=1.0, max_iter=50)
        simulated, report = run_protocol('DMM', self.scenario, self.meas, options)
        np.testing.assert_array_equal(simulated.position, direct.position)
        self.assertEqual(report.rounds, rounds)

        direct, rounds = run_dgn(self.meas, aoi, tol=1.0, max_iter=50)
        simulated, report = run_protocol('DGN', self.scenario, self.meas, options)
        np.testing.assert_array_equal(simulated.position, direct.position)
        self.assertEqual(report.rounds, rounds)

        locals_ = [grid_search_local(m, aoi, options.grid_step) for m in self.meas]
        simulated, _ = run_protocol('DEF', self.scenario, self.meas, options)
        np.testing.assert_array_equal(simulated.position, def_fuse(locals_, aoi.free_axes).position)
        simulated, _ = run_protocol('DEM', self.scenario, self.meas, options)
        np.testing.assert_array_equal(simulated.position, dem_fuse(locals_, aoi.free_axes).position)

    def test_dgn_stops_when_pinned_to_the_aoi_boundary(self):
        scenario = ring_scenario(emitter=(-500.0, -500.0, 0.0), noise_var=0.0)
        meas = sample_measurements(scenario, 0)
        estimate, report = run_protocol('DGN', scenario, meas)
        self.assertLess(report.rounds, ProtocolOptions().max_iter)
        self.assertTrue(scenario.aoi.contains(estimate.position))
        direct, rounds = run_dgn(meas, scenario.aoi)
        np.testing.assert_array_equal(estimate.position, direct.position)
        self.assertEqual(report.rounds, rounds)

    def test_grid_initialization(self):
        options = ProtocolOptions(init='grid', tol=1.0)
        estimate, report = run_protocol('DMM', self.scenario, self.meas, options)
        self.assertTrue(self.scenario.aoi.contains(estimate.position))
        self.assertGreaterEqual(report.rounds, 1)

    def test_def_falls_back_on_degenerate_geometry(self):
        scenario = line_scenario()
        meas = sample_measurements(scenario, 3)
        with self.assertLogs('localization.simnet', 'WARNING') as logs:
            estimate, report = run_protocol('DEF', scenario, meas)
        self.assertTrue(report.fallback)
        self.assertTrue(estimate.fallback)
        self.assertEqual(report.bits_total, 1 * (96 + 288))
        self.assertIn('fell back', logs.output[0])

    def test_dem_raises_on_degenerate_geometry(self):
        scenario = line_scenario()
        with self.assertRaises(RankDeficientFusionError):
            run_protocol('DEM', scenario, sample_measurements(scenario, 3))

    def test_rejects_bad_inputs(self):
        with self.assertRaises(ContractViolation):
            run_protocol('KALMAN', self.scenario, self.meas)
        with self.assertRaises(ContractViolation):
            run_protocol('DMM', self.scenario, self.meas[:3])
        with self.assertRaises(ConfigurationError):
            ProtocolOptions(grid_step=0)
        with self.assertRaises(ConfigurationError):
            ProtocolOptions(init='random')


class CostCsvTests(SimpleTestCase):

    def test_writes_one_row_per_report(self):
        scenario = ring_scenario()
        meas = sample_measurements(scenario, 1)
        reports = [run_protocol(m, scenario, meas)[1] for m in ('DEF', 'DEM')]
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'costs.csv'
            cost_reports_to_csv(reports, path)
            with path.open(newline='') as handle:
                rows = list(csv.reader(handle))
        self.assertEqual(rows[0], COST_CSV_COLUMNS)
        self.assertEqual(rows[1], ['DEF', '5', '1', '1536', '1296000'])
        self.assertEqual(rows[2], ['DEM', '5', '1', '512', '1296000'])
