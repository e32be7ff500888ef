"""
End-to-end simulation of one quasi-static frame for every scheme.

A frame draws its channels once, then sends frame_len symbol vectors.
Adaptive schemes train on the first pilot_len vectors and continue in
decision-directed mode; only the remaining data vectors count towards the
bit error rate.
"""
import dataclasses as _dc
import typing as _t

import numpy as _np

import coopdstc.armo as _armo
import coopdstc.config as _config
import coopdstc.constellation as _constellation
import coopdstc.exceptions as _ex
import coopdstc.feedback as _feedback
import coopdstc.receivers as _receivers
import coopdstc.system as _system
import coopdstc.types as _types


CONSTELLATION = _constellation.QPSK


@_dc.dataclass(frozen=True, eq=False)
class FrameOutcome:
    """
    Error statistics of one frame.

    vector_bit_errors[i] and vector_sq_errors[i] describe symbol vector i,
    pilots included, for the convergence traces.
    """
    bit_errors: int
    bits: int
    vector_bit_errors: _np.ndarray
    vector_sq_errors: _np.ndarray
    bits_per_vector: int
    flipped_feedback_bits: int = 0


@_dc.dataclass
class RelayLink:
    """
    Tracks which code bank the relays hold, given the feedback settings.

    detector_bank is the bank the destination believes the relays use: the
    quantized bank it sent, without the bit errors of the feedback channel.
    """
    cfg: _config.ExperimentConfig
    rng: _types.Rng
    relay_bank: _system.AdjustableCodeBank
    detector_bank: _system.AdjustableCodeBank = _dc.field(init=False)
    frozen: bool = False
    flipped: int = 0

    def __post_init__(self) -> None:
        self.detector_bank = self.relay_bank

    def _hold(self, bank: _system.AdjustableCodeBank) -> None:
        self.relay_bank = self.detector_bank = bank

    def send(self, dest_bank: _system.AdjustableCodeBank) -> None:
        fb = self.cfg.feedback
        if fb is None:
            self._hold(dest_bank)
            return
        relay_power = self.cfg.system.relay_power
        self.relay_bank, flipped = _feedback.feed_back_bank(dest_bank, fb, relay_power, self.rng)
        self.detector_bank = _feedback.expected_bank(dest_bank, fb, relay_power)
        self.flipped += flipped

    def start(self, dest_bank: _system.AdjustableCodeBank) -> None:
        if self.cfg.feedback is not None and self.cfg.feedback_schedule == 'per_frame' and self.cfg.pilot_len == 0:
            self.send(dest_bank)
            self.frozen = True
        elif self.cfg.feedback is not None and self.cfg.feedback_schedule == 'per_update':
            self.send(dest_bank)

    def after_update(self, index: int, dest_bank: _system.AdjustableCodeBank) -> None:
        fb = self.cfg.feedback
        if fb is None or self.cfg.feedback_schedule == 'per_update':
            self.send(dest_bank)
        elif not self.frozen:
            # training window uses error-free feedback, one quantized transmission closes it
            if index == self.cfg.pilot_len - 1:
                self.send(dest_bank)
                self.frozen = True
            else:
                self._hold(dest_bank)


def draw_symbols(system: _system.SystemConfig, frame_len: int, rng: _types.Rng) -> _t.Tuple[_types.BitArray, _types.IndexArray]:
    bits = rng.integers(0, 2, size=frame_len * system.n_antennas * CONSTELLATION.bits_per_symbol, dtype=_np.uint8)
    indices = _constellation.modulate_indices(bits, CONSTELLATION).reshape(frame_len, system.n_antennas)
    return bits.reshape(frame_len, -1), indices


def fixed_bank(cfg: _config.ExperimentConfig, system: _system.SystemConfig, rng: _types.Rng,
               fd_codes: _t.Optional[_system.AdjustableCodeBank]) -> _system.AdjustableCodeBank:
    if cfg.scheme in ('SM', 'D-Alamouti'):
        return _armo.identity_bank(system)
    if cfg.scheme == 'R-Alamouti':
        return _armo.randomized_bank(system, rng)
    if fd_codes is None:
        raise _ex.PreconditionError('FD-ARMO frames need the selected code bank.')
    return fd_codes


def known_csi_filters(system: _system.SystemConfig, chan: _system.ChannelRealization,
                      codes: _system.AdjustableCodeBank) -> _receivers.ReceiveFilterBank:
    relay = _system.effective_signal_matrix(_system.d_columns(system, chan), codes)
    noise_eq = _system.equivalent_noise_variance(system, chan, codes)
    noise = [noise_eq] * system.nt
    if system.direct_link:
        relay = _np.vstack([chan.h_sd, relay])
        noise = [system.noise_variance] * system.n_antennas + noise
    return _receivers.known_csi_filters(relay, noise, system.signal_power)


def simulate_frame(cfg: _config.ExperimentConfig, system: _system.SystemConfig, snr_db: float,
                   rng: _types.Rng, fd_codes: _t.Optional[_system.AdjustableCodeBank] = None) -> FrameOutcome:
    """
    Run one frame of the configured scheme.

    system carries the noise variance of the SNR point. Random draws happen
    in a fixed order (channels, initial codes, bits, then noise and
    feedback symbol by symbol) so a frame is fully determined by rng.
    """
    chan = _system.draw_channels(system, rng)
    if cfg.scheme == 'C-ARMO-SG':
        return _run_sg(cfg, system, chan, rng)
    if cfg.scheme in ('C-ARMO-RLS', 'C-ARMO-LS'):
        return _run_ml_adaptive(cfg, system, chan, snr_db, rng)
    return _run_fixed(cfg, system, chan, rng, fd_codes)


def _outcome(cfg: _config.ExperimentConfig, bits: _types.BitArray, decided: _types.IndexArray,
             sq_errors: _np.ndarray, flipped: int = 0) -> FrameOutcome:
    decided_bits = _constellation.demodulate(decided.ravel(), CONSTELLATION).reshape(bits.shape)
    per_vector = _np.count_nonzero(decided_bits != bits, axis=1)
    start = cfg.frame_len - cfg.data_symbols
    counted = per_vector[start:]
    return FrameOutcome(int(counted.sum()), int(counted.size * bits.shape[1]), per_vector, sq_errors, bits.shape[1], flipped)


def _run_fixed(cfg: _config.ExperimentConfig, system: _system.SystemConfig, chan: _system.ChannelRealization,
               rng: _types.Rng, fd_codes: _t.Optional[_system.AdjustableCodeBank]) -> FrameOutcome:
    codes = fixed_bank(cfg, system, rng, fd_codes)
    bits, indices = draw_symbols(system, cfg.frame_len, rng)
    symbols = CONSTELLATION.points[indices]
    decided = _np.empty_like(indices)
    sq_errors = _np.empty(cfg.frame_len)
    filters = known_csi_filters(system, chan, codes) if cfg.detector == 'mmse' else None
    book = _receivers.build_candidate_book(system.n_antennas, CONSTELLATION)
    for i in range(cfg.frame_len):
        frame = _system.assemble_received(system, chan, codes, symbols[i], rng)
        if filters is not None:
            estimate = filters.outputs(frame.r)
            decided[i] = _constellation.slice_indices(estimate, CONSTELLATION)
        else:
            best, estimate = _receivers.ml_detect(frame, codes, book)
            decided[i] = book.indices[:, best]
        sq_errors[i] = _np.mean(_np.abs(symbols[i] - estimate) ** 2)
    return _outcome(cfg, bits, decided, sq_errors)


def _run_sg(cfg: _config.ExperimentConfig, system: _system.SystemConfig, chan: _system.ChannelRealization,
            rng: _types.Rng) -> FrameOutcome:
    state = _armo.initial_sg_state(system, rng, cfg.step_beta, cfg.step_mu, system.noise_variance)
    link = RelayLink(cfg, rng, state.codes)
    link.start(state.codes)
    if link.frozen:
        state = _dc.replace(state, step_mu=0.0)
    bits, indices = draw_symbols(system, cfg.frame_len, rng)
    symbols = CONSTELLATION.points[indices]
    decided = _np.empty_like(indices)
    sq_errors = _np.empty(cfg.frame_len)
    for i in range(cfg.frame_len):
        frame = _system.assemble_received(system, chan, link.relay_bank, symbols[i], rng)
        estimate = state.filters.outputs(frame.r)
        decided[i] = _constellation.slice_indices(estimate, CONSTELLATION)
        sq_errors[i] = _np.mean(_np.abs(symbols[i] - estimate) ** 2)
        reference = symbols[i] if i < cfg.pilot_len else CONSTELLATION.points[decided[i]]
        state = _armo.sg_step(state, frame, reference)
        if not link.frozen:
            link.after_update(i, state.codes)
            if link.frozen:
                state = _dc.replace(state, step_mu=0.0)
    return _outcome(cfg, bits, decided, sq_errors, link.flipped)


def _run_ml_adaptive(cfg: _config.ExperimentConfig, system: _system.SystemConfig, chan: _system.ChannelRealization,
                     snr_db: float, rng: _types.Rng) -> FrameOutcome:
    dest = _armo.randomized_bank(system, rng)
    states = None
    if cfg.scheme == 'C-ARMO-RLS':
        delta = cfg.rls_delta if cfg.rls_delta is not None else _armo.choose_rls_delta(snr_db)
        states = _armo.init_rls_grid(dest, cfg.forgetting, delta)
    link = RelayLink(cfg, rng, dest)
    link.start(dest)
    book = _receivers.build_candidate_book(system.n_antennas, CONSTELLATION)
    bits, indices = draw_symbols(system, cfg.frame_len, rng)
    symbols = CONSTELLATION.points[indices]
    decided = _np.empty_like(indices)
    sq_errors = _np.empty(cfg.frame_len)
    for i in range(cfg.frame_len):
        frame = _system.assemble_received(system, chan, link.relay_bank, symbols[i], rng)
        best, estimate = _receivers.ml_detect(frame, link.detector_bank, book)
        decided[i] = book.indices[:, best]
        sq_errors[i] = _np.mean(_np.abs(symbols[i] - estimate) ** 2)
        if link.frozen:
            continue
        reference = symbols[i] if i < cfg.pilot_len else estimate
        if states is not None:
            states, dest = _armo.rls_bank_step(states, dest, frame, reference, system.relay_power)
        else:
            dest = _armo.ls_bank_step(dest, frame, reference, system.relay_power)
        link.after_update(i, dest)
    return _outcome(cfg, bits, decided, sq_errors, link.flipped)
