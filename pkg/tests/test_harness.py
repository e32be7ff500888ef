import dataclasses
import unittest

import numpy as np
import pytest

import coopdstc.harness as harness
import coopdstc.link as link
import coopdstc.system as system
from coopdstc.exceptions import ConfigError, PreconditionError
from coopdstc.test_setup import experiment


class TestCalibration(unittest.TestCase):
    def test_hits_target(self):
        cfg = experiment()
        for snr_db in (0.0, 10.0, 20.0):
            noise = harness.calibrate_noise_variance(cfg, snr_db)
            calibrated = harness.calibration_system(cfg).with_noise_variance(noise)
            channels = self.channels(cfg)
            achieved = 10 * np.log10(harness.mean_received_snr(calibrated, channels))
            self.assertAlmostEqual(achieved, snr_db, places=6)

    def channels(self, cfg):
        rng = harness.make_rng(cfg.master_seed, harness.CALIBRATION_TAG)
        calibrated = harness.calibration_system(cfg)
        return [system.draw_channels(calibrated, rng) for _ in range(cfg.calibration_draws)]

    def test_higher_snr_means_less_noise(self):
        cfg = experiment()
        self.assertGreater(harness.calibrate_noise_variance(cfg, 0.0), harness.calibrate_noise_variance(cfg, 10.0))

    def test_noise_axis(self):
        cfg = experiment(snr_axis='noise')
        self.assertAlmostEqual(harness.noise_variance_for(cfg, 10.0), 0.1)


class TestRunBER(unittest.TestCase):
    def test_deterministic(self):
        cfg = experiment('C-ARMO-SG', snr_grid_db='5,15')
        first, second = harness.run_ber(cfg), harness.run_ber(cfg)
        self.assertEqual(first, second)
        self.assertEqual([r.snr_db for r in first], [5.0, 15.0])
        self.assertEqual(first[0].bits_total, 4 * 20 * 4)

    def test_worker_count_does_not_change_results(self):
        cfg = experiment('R-Alamouti', frames=6)
        self.assertEqual(harness.run_ber(cfg), harness.run_ber(dataclasses.replace(cfg, workers=2)))

    def test_seed_changes_results(self):
        a = harness.run_ber(experiment('D-Alamouti', snr_grid_db='0', frames=10))
        b = harness.run_ber(experiment('D-Alamouti', snr_grid_db='0', frames=10, master_seed=8))
        self.assertNotEqual(a[0].noise_variance, b[0].noise_variance)

    def test_noiseless_limit(self):
        for scheme in ('SM', 'D-Alamouti', 'R-Alamouti', 'FD-ARMO'):
            for detector in ('mmse', 'ml'):
                with self.subTest(scheme=scheme, detector=detector):
                    cfg = experiment(scheme, snr_axis='noise', snr_grid_db='80', detector=detector)
                    record = harness.run_ber(cfg)[0]
                    self.assertLessEqual(record.ber, 0.01)

    def test_every_scheme_runs(self):
        for scheme in ('C-ARMO-RLS', 'C-ARMO-LS'):
            with self.subTest(scheme=scheme):
                record = harness.run_ber(experiment(scheme, frames=2))[0]
                self.assertEqual(record.bits_total, 2 * 20 * 4)
                self.assertTrue(0 <= record.ber <= 1)

    def test_direct_link(self):
        record = harness.run_ber(experiment('C-ARMO-SG', direct_link='true'))[0]
        self.assertTrue(0 <= record.ber <= 1)

    def test_feedback_schedules(self):
        for scheme in ('C-ARMO-SG', 'C-ARMO-RLS'):
            for schedule in ('per_frame', 'per_update'):
                with self.subTest(scheme=scheme, schedule=schedule):
                    cfg = experiment(scheme, frames=2, feedback_bits=4, feedback_crossover=0.01, feedback_schedule=schedule)
                    record = harness.run_ber(cfg)[0]
                    self.assertTrue(0 <= record.ber <= 1)

    def test_feedback_without_pilots(self):
        cfg = experiment('C-ARMO-SG', frames=2, pilot_len=0, feedback_bits=3)
        self.assertTrue(0 <= harness.run_ber(cfg)[0].ber <= 1)

    def test_fd_armo_frame_needs_codes(self):
        cfg = experiment('FD-ARMO')
        with self.assertRaises(PreconditionError):
            link.simulate_frame(cfg, cfg.system.with_noise_variance(0.1), 10.0, harness.make_rng(1))

    def test_fd_armo_bank_is_normalized(self):
        cfg = experiment('FD-ARMO', n_relays=2)
        bank, indices = harness.select_fd_armo_bank(cfg, cfg.system.with_noise_variance(0.1), 0)
        self.assertEqual(len(indices), 2)
        for k in range(2):
            self.assertAlmostEqual(bank.relay_power(k), cfg.system.relay_power)


class TestRunConvergence(unittest.TestCase):
    def test_rejects_fixed_scheme(self):
        with self.assertRaises(ConfigError):
            harness.run_convergence(experiment('D-Alamouti'))

    def test_frozen_optimizer_is_flat(self):
        cfg = experiment('C-ARMO-SG', step_beta=0, step_mu=0, frames=50)
        trace = harness.run_convergence(cfg)
        self.assertEqual([r.index for r in trace], list(range(30)))
        for record in trace:
            self.assertAlmostEqual(record.mse, 1.0, places=12)
            self.assertLess(abs(record.ber - 0.5), 0.15)

    def test_starts_untrained(self):
        trace = harness.run_convergence(experiment('C-ARMO-SG', frames=50))
        self.assertGreaterEqual(trace[0].ber, 0.3)

    def test_learns_within_a_frame(self):
        trace = harness.run_convergence(experiment('C-ARMO-SG', frames=40, frame_len=150, pilot_len=50))
        self.assertAlmostEqual(trace[0].mse, 1.0, places=12)
        self.assertLess(trace[140].mse, 0.4)
        self.assertLess(trace[140].ber, 0.5 * trace[0].ber)

    def test_trailing_mean(self):
        np.testing.assert_allclose(harness.trailing_mean([1, 2, 3, 4], 2), [1, 1.5, 2.5, 3.5])


class TestRunBoundComparison(unittest.TestCase):
    def test_bounds_dominate(self):
        for scheme in ('D-Alamouti', 'R-Alamouti', 'FD-ARMO'):
            with self.subTest(scheme=scheme):
                rows = harness.run_bound_comparison(experiment(scheme, snr_grid_db='0,5,10,15'))
                for row in rows:
                    if scheme == 'D-Alamouti':
                        self.assertLessEqual(row.mc_pep, row.bound_adaptive + 0.02)
                    self.assertLessEqual(row.mc_pep_traditional, row.bound_traditional + 0.02)
                for a, b in zip(rows, rows[1:]):
                    if scheme != 'FD-ARMO':
                        self.assertGreater(a.bound_adaptive, b.bound_adaptive)
                    self.assertGreater(a.bound_traditional, b.bound_traditional)

    def test_identity_code_bounds_coincide(self):
        for row in harness.run_bound_comparison(experiment('D-Alamouti', snr_grid_db='0,10')):
            self.assertAlmostEqual(row.bound_adaptive, row.bound_traditional, places=12)

    def test_rejects_adaptive_scheme(self):
        with self.assertRaises(ConfigError):
            harness.run_bound_comparison(experiment('C-ARMO-SG'))


class TestRunFDARMO(unittest.TestCase):
    def test_report(self):
        cfg = experiment('FD-ARMO', snr_grid_db='0,10')
        rows = harness.run_fd_armo(cfg)
        self.assertEqual(len(rows), 2)
        for row in rows:
            self.assertTrue(0 <= row.selected_index < cfg.candidates)
            self.assertTrue(0 <= row.exact_pep_selected <= 0.5)
            self.assertGreaterEqual(row.det_modulus, 1.0)
        self.assertEqual(rows, harness.run_fd_armo(cfg))


@pytest.mark.slow
class TestSchemeOrdering(unittest.TestCase):
    """Long runs at 10 dB received SNR, at least 10^5 symbol vectors per scheme."""

    def ber(self, scheme, snr_db=10.0, **overrides):
        values = dict(frames=1000, frame_len=150, pilot_len=50, calibration_draws=200, workers=4)
        values.update(overrides)
        return harness.run_ber(experiment(scheme, snr_grid_db=snr_db, **values))[0]

    def assert_significantly_lower(self, a, b):
        sigma = np.sqrt(a.ber * (1 - a.ber) / a.bits_total + b.ber * (1 - b.ber) / b.bits_total)
        self.assertGreater(b.ber - a.ber, 3 * sigma)

    def test_ordering(self):
        sg, r, d, sm = (self.ber(s) for s in ('C-ARMO-SG', 'R-Alamouti', 'D-Alamouti', 'SM'))
        self.assert_significantly_lower(sg, r)
        self.assert_significantly_lower(sg, d)
        self.assert_significantly_lower(r, sm)
        self.assert_significantly_lower(d, sm)

    def test_adaptive_gain_over_randomized_code(self):
        # at least the lower edge of the 3 +- 1.5 dB gain
        self.assertLessEqual(self.ber('C-ARMO-SG').ber, self.ber('R-Alamouti', 11.5).ber)

    def test_feedback_errors_degrade_monotonically(self):
        settings = [{}, {'feedback_bits': 4}, {'feedback_bits': 4, 'feedback_crossover': 1e-3},
                    {'feedback_bits': 4, 'feedback_crossover': 1e-2}]
        bers = [self.ber('C-ARMO-RLS', frames=600, **s).ber for s in settings]
        self.assertEqual(bers, sorted(bers))
        self.assertLess(bers[0], bers[-1])

    def test_feedback_free_selection_trails_adaptive_code(self):
        self.assert_significantly_lower(self.ber('C-ARMO-SG'), self.ber('FD-ARMO'))

    def test_convergence_plateau(self):
        cfg = experiment('C-ARMO-SG', frames=400, frame_len=600, pilot_len=50, window=40, workers=4)
        trace = harness.run_convergence(cfg)
        self.assertLessEqual(abs(trace[150].ber - trace[500].ber), 0.1 * trace[500].ber)
