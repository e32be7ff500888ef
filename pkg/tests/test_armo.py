import dataclasses
import unittest

import numpy as np
from hypothesis import given, settings, strategies as st

import coopdstc.armo as armo
import coopdstc.receivers as receivers
import coopdstc.system as system
from coopdstc.exceptions import DegenerateInputError, PreconditionError
from coopdstc.test_setup import random_matrix, rng, small_system


seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


def noisy_frame(cfg, generator, codes=None):
    chan = system.draw_channels(cfg, generator)
    codes = codes if codes is not None else armo.randomized_bank(cfg, generator)
    s = np.array([1 + 1j, -1 + 1j]) / np.sqrt(2)
    return system.assemble_received(cfg, chan, codes, s, generator), codes, s


class TestNormalizeCodes(unittest.TestCase):
    @settings(max_examples=50, deadline=None)
    @given(seeds, st.floats(min_value=0.1, max_value=10.0), st.integers(min_value=1, max_value=3))
    def test_power_constraint(self, seed, relay_power, n_relays):
        matrices = np.random.default_rng(seed).standard_normal((n_relays, 2, 4, 4, 2)) @ np.array([1, 1j])
        bank = armo.normalize_codes(system.AdjustableCodeBank(matrices), relay_power)
        for k in range(n_relays):
            self.assertAlmostEqual(bank.relay_power(k), relay_power, delta=1e-12 * relay_power)

    def test_zero_bank(self):
        with self.assertRaises(DegenerateInputError):
            armo.normalize_codes(system.AdjustableCodeBank(np.zeros((1, 2, 4, 4), dtype=complex)), 1.0)

    def test_initial_banks_are_normalized(self):
        cfg = small_system(n_relays=2)
        for bank in (armo.identity_bank(cfg), armo.randomized_bank(cfg, rng(0))):
            for k in range(2):
                self.assertAlmostEqual(bank.relay_power(k), cfg.relay_power)


class TestSGStep(unittest.TestCase):
    def setUp(self):
        self.cfg = small_system(noise_variance=0.1)
        self.generator = rng(11)
        self.state = armo.initial_sg_state(self.cfg, self.generator, 0.01, 0.03)
        self.state = dataclasses.replace(self.state, filters=receivers.ReceiveFilterBank(random_matrix(2, 4, self.generator) * 0.1))
        self.frame, _, self.s = noisy_frame(self.cfg, self.generator, self.state.codes)

    def test_zero_steps_leave_state_unchanged(self):
        frozen = dataclasses.replace(self.state, step_beta=0.0, step_mu=0.0)
        after = armo.sg_step(frozen, self.frame, self.s)
        np.testing.assert_allclose(after.filters.filters, frozen.filters.filters)
        np.testing.assert_allclose(after.codes.matrices, frozen.codes.matrices, atol=1e-14)

    def test_power_is_conserved(self):
        after = self.state
        for _ in range(20):
            after = armo.sg_step(after, self.frame, self.s)
            self.assertAlmostEqual(after.codes.relay_power(0), self.cfg.relay_power, delta=1e-12)

    def test_one_step_reduces_error_on_frozen_frame(self):
        before = np.sum(np.abs(self.s - self.state.filters.outputs(self.frame.r)) ** 2)
        after_state = armo.sg_step(self.state, self.frame, self.s)
        after = np.sum(np.abs(self.s - after_state.filters.outputs(self.frame.r)) ** 2)
        self.assertLess(after, before)

    def test_matched_filters_are_a_fixed_point(self):
        r = self.frame.r
        matched = np.outer(np.conj(self.s), r) / np.vdot(r, r).real
        for noise_variance in (None, 0.1):
            state = dataclasses.replace(self.state, filters=receivers.ReceiveFilterBank(matched),
                                        noise_variance=noise_variance)
            np.testing.assert_allclose(state.filters.outputs(r), self.s, atol=1e-12)
            after = armo.sg_step(state, self.frame, self.s)
            np.testing.assert_allclose(after.filters.filters, matched, atol=1e-12)
            np.testing.assert_allclose(after.codes.matrices, state.codes.matrices, atol=1e-12)

    def test_noise_scaled_step_reduces_error(self):
        state = dataclasses.replace(self.state, noise_variance=0.1)
        before = np.sum(np.abs(self.s - state.filters.outputs(self.frame.r)) ** 2)
        after_state = armo.sg_step(state, self.frame, self.s)
        after = np.sum(np.abs(self.s - after_state.filters.outputs(self.frame.r)) ** 2)
        self.assertLess(after, before)
        self.assertGreater(after, 0.2 * before)

    def test_effective_step(self):
        self.assertEqual(armo.effective_step(0.01, None, 5.0), 0.01)
        self.assertAlmostEqual(armo.effective_step(0.01, 0.1, 1.0), 0.01 / 0.12)
        self.assertAlmostEqual(armo.effective_step(0.01, 1.0, 0.0), 0.01)
        self.assertEqual(armo.effective_step(0.0, 0.1, 3.0), 0.0)
        self.assertEqual(armo.effective_step(0.5, 0.0, 0.0), 0.0)
        for noise_variance in (0.0, 1e-6, 0.01, 1.0):
            for energy in (0.1, 10.0, 1e4):
                step = armo.effective_step(0.03, noise_variance, energy)
                self.assertLessEqual(step * energy, armo.MAX_NORMALIZED_STEP * (1 + 1e-12))

    def test_noise_scaling_matches_unit_noise_model(self):
        # weak regressors leave the unit-noise step beta / sigma^2
        noise_variance, energy = 1e-4, 1e-3
        step = armo.effective_step(0.01, noise_variance, energy)
        self.assertAlmostEqual(step * noise_variance / 0.01, 1.0, delta=0.25)

    def test_negative_step(self):
        with self.assertRaises(PreconditionError):
            dataclasses.replace(self.state, step_mu=-1.0)


class TestGradients(unittest.TestCase):
    def test_against_central_differences(self):
        generator = rng(12)
        h = 1e-6
        for _ in range(100):
            w, r0, d = (random_matrix(4, 1, generator).ravel() for _ in range(3))
            s_j = complex(random_matrix(1, 1, generator)[0, 0])
            grad_w, grad_phi = armo.cost_gradients(w, r0, s_j, d)

            direction = random_matrix(4, 1, generator).ravel()
            numeric = (armo.instantaneous_cost(w + h * direction, r0, s_j)
                       - armo.instantaneous_cost(w - h * direction, r0, s_j)) / (2 * h)
            analytic = 2 * np.real(np.vdot(grad_w, direction))
            self.assertLess(abs(numeric - analytic), 1e-5 * max(1.0, abs(analytic)))

            step = random_matrix(4, 4, generator)

            def cost(t):
                return armo.instantaneous_cost(w, r0 + t * step @ d * s_j, s_j)

            numeric = (cost(h) - cost(-h)) / (2 * h)
            analytic = 2 * np.real(np.sum(np.conj(grad_phi) * step))
            self.assertLess(abs(numeric - analytic), 1e-5 * max(1.0, abs(analytic)))


class TestLeastSquares(unittest.TestCase):
    def test_closed_form(self):
        generator = rng(13)
        r_e, d = random_matrix(4, 1, generator).ravel(), random_matrix(4, 1, generator).ravel()
        s = (1 - 1j) / np.sqrt(2)
        phi = armo.ls_code_matrix(r_e, d, s)
        np.testing.assert_allclose(phi, np.outer(r_e, d.conj()) / (s * np.vdot(d, d).real), atol=1e-10)
        np.testing.assert_allclose(phi @ d * s, r_e, atol=1e-10)

    def test_zero_symbol(self):
        with self.assertRaises(DegenerateInputError):
            armo.ls_code_matrix(np.ones(4), np.ones(4), 0)

    def test_zero_regressor(self):
        with self.assertRaises(DegenerateInputError):
            armo.ls_code_matrix(np.ones(4), np.zeros(4), 1)

    def test_hessian_is_psd(self):
        generator = rng(14)
        for _ in range(1000):
            d = random_matrix(4, 1, generator).ravel()
            s = complex(random_matrix(1, 1, generator)[0, 0])
            self.assertTrue(armo.hessian_psd_check(d, s))


class TestRLS(unittest.TestCase):
    def test_matches_batch_solution(self):
        generator = rng(15)
        forgetting, delta = 1.0, 1e-4
        state = armo.init_rls_state(4, forgetting, delta)
        z, psi = np.eye(4, dtype=complex), delta * np.eye(4, dtype=complex)
        for _ in range(100):
            r_e, r = random_matrix(4, 1, generator).ravel(), random_matrix(4, 1, generator).ravel()
            state = armo.rls_step(state, r_e, r)
            z = z + np.outer(r_e, r.conj())
            psi = psi + np.outer(r, r.conj())
        np.testing.assert_allclose(state.phi, z @ np.linalg.inv(psi), atol=1e-6)

    def test_matches_batch_with_forgetting_and_initial_estimate(self):
        generator = rng(16)
        forgetting, delta = 0.95, 0.01
        phi0 = random_matrix(4, 4, generator)
        state = armo.init_rls_state(4, forgetting, delta, phi0)
        np.testing.assert_allclose(state.phi, phi0)
        z, psi = delta * phi0, delta * np.eye(4, dtype=complex)
        for _ in range(50):
            r_e, r = random_matrix(4, 1, generator).ravel(), random_matrix(4, 1, generator).ravel()
            state = armo.rls_step(state, r_e, r)
            z = forgetting * z + np.outer(r_e, r.conj())
            psi = forgetting * psi + np.outer(r, r.conj())
        np.testing.assert_allclose(state.phi, z @ np.linalg.inv(psi), atol=1e-6)

    def test_inverse_tracks_weighted_correlation(self):
        generator = rng(21)
        forgetting, delta = 0.9, 0.5
        state = armo.init_rls_state(4, forgetting, delta)
        psi = delta * np.eye(4, dtype=complex)
        for _ in range(30):
            r = random_matrix(4, 1, generator).ravel()
            state = armo.rls_step(state, random_matrix(4, 1, generator).ravel(), r)
            psi = forgetting * psi + np.outer(r, r.conj())
            direct = np.linalg.inv(psi)
            self.assertLessEqual(np.linalg.norm(state.p - direct) / np.linalg.norm(direct), 1e-6)

    def test_zero_regressor(self):
        state = armo.init_rls_state(4, 0.5, 2.0, random_matrix(4, 4, rng(17)))
        after = armo.rls_step(state, np.ones(4), np.zeros(4))
        np.testing.assert_allclose(after.phi, state.phi)
        np.testing.assert_allclose(after.p, state.p / 0.5)
        np.testing.assert_allclose(after.z, state.z * 0.5)

    def test_delta_choice(self):
        self.assertEqual(armo.choose_rls_delta(15.0), 0.01)
        self.assertEqual(armo.choose_rls_delta(5.0), 10.0)

    def test_bad_forgetting(self):
        with self.assertRaises(PreconditionError):
            armo.init_rls_state(4, 1.5, 1.0)

    def test_bank_step_is_normalized(self):
        cfg = small_system(n_relays=2)
        generator = rng(18)
        frame, codes, s = noisy_frame(cfg, generator)
        states = armo.init_rls_grid(codes, 0.998, 0.01)
        for _ in range(5):
            states, codes = armo.rls_bank_step(states, codes, frame, s, cfg.relay_power)
            for k in range(2):
                self.assertAlmostEqual(codes.relay_power(k), cfg.relay_power, delta=1e-12)

    def test_ls_bank_step_is_normalized(self):
        cfg = small_system()
        generator = rng(19)
        frame, codes, s = noisy_frame(cfg, generator)
        codes = armo.ls_bank_step(codes, frame, s, cfg.relay_power)
        self.assertAlmostEqual(codes.relay_power(0), cfg.relay_power, delta=1e-12)


class TestInterferenceCancellation(unittest.TestCase):
    def test_leaves_own_contribution(self):
        cfg = small_system(noise_variance=0.0, n_relays=2)
        frame, codes, s = noisy_frame(cfg, rng(20))
        r_e = armo.interference_cancelled(frame, codes, s, 1, 0)
        np.testing.assert_allclose(r_e, codes.matrix(1, 0) @ frame.d_columns[1, 0] * s[0], atol=1e-12)
