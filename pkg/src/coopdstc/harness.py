"""
Seeded Monte Carlo experiments: BER sweeps, convergence traces, bound
comparisons and feedback-free code selection runs.

Every frame draws from its own generator seeded by
(master_seed, snr_index, frame_index), so results do not depend on the
number of worker processes.
"""
import concurrent.futures as _futures
import dataclasses as _dc
import logging as _logging
import time as _time
import typing as _t

import numpy as _np

import coopdstc.analysis as _analysis
import coopdstc.armo as _armo
import coopdstc.config as _config
import coopdstc.constellation as _constellation
import coopdstc.exceptions as _ex
import coopdstc.link as _link
import coopdstc.records as _records
import coopdstc.system as _system
import coopdstc.types as _types


_logger = _logging.getLogger(__name__)

CALIBRATION_TAG = 0xCA1
FD_ARMO_TAG = 0xFD
BOUND_TAG = 0xB0
LOG10_NOISE_RANGE = (-12.0, 6.0)
BISECTION_STEPS = 80
BOUND_SCHEMES = ('D-Alamouti', 'R-Alamouti', 'FD-ARMO')

FrameTask = _t.Tuple[_config.ExperimentConfig, _system.SystemConfig, float, _t.Tuple[int, ...],
                     _t.Optional[_system.AdjustableCodeBank]]


def make_rng(*entropy: int) -> _types.Rng:
    """Independent generator for an entropy tuple."""
    return _np.random.default_rng(_np.random.SeedSequence(list(entropy)))


def calibration_system(cfg: _config.ExperimentConfig) -> _system.SystemConfig:
    return _dc.replace(cfg.system, encoder='alamouti', n_antennas=2, n_slots=2, direct_link=False)


def _with_gain(chan: _system.ChannelRealization, system: _system.SystemConfig) -> _system.ChannelRealization:
    gain = _system.amplification_gain(system) * _np.eye(system.n_antennas, dtype=_np.complex128)
    return _dc.replace(chan, a_rd=_np.repeat(gain[None], system.n_relays, axis=0))


def mean_received_snr(system: _system.SystemConfig, channels: _t.Sequence[_system.ChannelRealization]) -> float:
    """Mean linear received SNR of the identity code over the given channels."""
    codes = _armo.identity_bank(system)
    values = [10 ** (_system.received_snr(system, _with_gain(chan, system), codes) / 10) for chan in channels]
    return float(_np.mean(values))


def calibrate_noise_variance(cfg: _config.ExperimentConfig, snr_db: float) -> float:
    """
    Noise variance whose mean received SNR equals snr_db.

    Bisection on log10(sigma^2) over seeded calibration channels with the
    identity code, shared by every scheme so all curves use one SNR axis.
    """
    system = calibration_system(cfg)
    rng = make_rng(cfg.master_seed, CALIBRATION_TAG)
    channels = [_system.draw_channels(system, rng) for _ in range(cfg.calibration_draws)]
    target = 10 ** (snr_db / 10)
    lo, hi = LOG10_NOISE_RANGE
    if mean_received_snr(system.with_noise_variance(10 ** hi), channels) > target:
        raise _ex.ConfigError(f'received SNR {snr_db} dB is below the calibration range', 'snr_grid_db')
    if mean_received_snr(system.with_noise_variance(10 ** lo), channels) < target:
        raise _ex.ConfigError(f'received SNR {snr_db} dB is above the calibration range', 'snr_grid_db')
    for _ in range(BISECTION_STEPS):
        mid = (lo + hi) / 2
        if mean_received_snr(system.with_noise_variance(10 ** mid), channels) > target:
            lo = mid
        else:
            hi = mid
    noise_variance = float(10 ** ((lo + hi) / 2))
    _logger.debug('calibrated %.2f dB received SNR to noise variance %.6g', snr_db, noise_variance)
    return noise_variance


def noise_variance_for(cfg: _config.ExperimentConfig, snr_db: float) -> float:
    if cfg.snr_axis == 'noise':
        return float(10 ** (-snr_db / 10))
    return calibrate_noise_variance(cfg, snr_db)


def codeword_pair(cfg: _config.ExperimentConfig) -> _analysis.CodewordPair:
    points = _constellation.QPSK.points
    return _analysis.codeword_pair(_system.alamouti_encode(points[list(cfg.pair_first)]),
                                   _system.alamouti_encode(points[list(cfg.pair_second)]))


def fd_armo_candidates(cfg: _config.ExperimentConfig, system: _system.SystemConfig, snr_index: int,
                       relay: int) -> _t.List[_types.CMatrix]:
    rng = make_rng(cfg.master_seed, snr_index, FD_ARMO_TAG, relay)
    radius = float(_np.sqrt(system.relay_power / system.n_antennas))
    return [_system.generate_sphere_matrix(system.nt, radius, rng) for _ in range(cfg.candidates)]


def select_fd_armo_bank(cfg: _config.ExperimentConfig, system: _system.SystemConfig,
                        snr_index: int) -> _t.Tuple[_system.AdjustableCodeBank, _t.List[int]]:
    """Each relay picks its own candidate with the determinant criterion, once per SNR point."""
    n0 = system.noise_variance * system.nt
    delta = codeword_pair(cfg).delta
    chosen, indices = [], []
    for k in range(system.n_relays):
        index, phi = _analysis.fd_armo_select(fd_armo_candidates(cfg, system, snr_index, k), delta, n0)
        chosen.append(phi)
        indices.append(index)
    return _system.AdjustableCodeBank.uniform(chosen, system.n_antennas), indices


def _frame_task(task: FrameTask) -> _link.FrameOutcome:
    cfg, system, snr_db, entropy, fd_codes = task
    return _link.simulate_frame(cfg, system, snr_db, make_rng(*entropy), fd_codes)


def run_frames(cfg: _config.ExperimentConfig, system: _system.SystemConfig, snr_db: float, snr_index: int,
               fd_codes: _t.Optional[_system.AdjustableCodeBank] = None) -> _t.List[_link.FrameOutcome]:
    """Simulate cfg.frames frames, in worker processes when cfg.workers > 1."""
    tasks: _t.List[FrameTask] = [
        (cfg, system, snr_db, (cfg.master_seed, snr_index, f), fd_codes) for f in range(cfg.frames)
    ]
    if cfg.workers == 1:
        return [_frame_task(task) for task in tasks]
    chunksize = max(1, cfg.frames // (4 * cfg.workers))
    with _futures.ProcessPoolExecutor(max_workers=cfg.workers) as executor:
        return list(executor.map(_frame_task, tasks, chunksize=chunksize))


def run_ber(cfg: _config.ExperimentConfig) -> _t.List[_records.BERRecord]:
    """
    Bit error rate of the configured scheme at every SNR point.

    Examples
    --------
    >>> from coopdstc.config import build_experiment_config
    >>> cfg = build_experiment_config({'scheme': 'D-Alamouti', 'snr_grid_db': '10', 'frames': '4'})
    >>> [r.snr_db for r in run_ber(cfg)]
    [10.0]
    """
    out = []
    for snr_index, snr_db in enumerate(cfg.snr_grid_db):
        start = _time.perf_counter()
        system = cfg.system.with_noise_variance(noise_variance_for(cfg, snr_db))
        fd_codes = select_fd_armo_bank(cfg, system, snr_index)[0] if cfg.scheme == 'FD-ARMO' else None
        outcomes = run_frames(cfg, system, snr_db, snr_index, fd_codes)
        errors = sum(o.bit_errors for o in outcomes)
        bits = sum(o.bits for o in outcomes)
        elapsed = _time.perf_counter() - start
        _logger.info('%s %.2f dB: %d errors in %d bits (%.2fs)', cfg.scheme, snr_db, errors, bits, elapsed)
        flipped = sum(o.flipped_feedback_bits for o in outcomes)
        if flipped:
            _logger.debug('%s %.2f dB: %d feedback bits flipped', cfg.scheme, snr_db, flipped)
        out.append(_records.BERRecord(snr_db, errors, bits, errors / bits, system.noise_variance, elapsed))
    return out


def trailing_mean(values: _t.Any, window: int) -> _types.RVector:
    """Mean of the last `window` entries up to and including each index."""
    values = _np.asarray(values, dtype=_np.float64)
    sums = _np.cumsum(_np.concatenate([[0.0], values]))
    idx = _np.arange(values.size)
    lower = _np.maximum(0, idx - window + 1)
    return (sums[idx + 1] - sums[lower]) / (idx + 1 - lower)


def run_convergence(cfg: _config.ExperimentConfig) -> _t.List[_records.ConvergenceRecord]:
    """
    Windowed BER and MSE per received symbol index at the first SNR point,
    averaged over frames.
    """
    if not cfg.is_adaptive:
        raise _ex.ConfigError(f'convergence traces need an adaptive scheme, got {cfg.scheme}', 'scheme')
    snr_db = cfg.snr_grid_db[0]
    system = cfg.system.with_noise_variance(noise_variance_for(cfg, snr_db))
    outcomes = run_frames(cfg, system, snr_db, 0)
    ber = _np.mean([o.vector_bit_errors / o.bits_per_vector for o in outcomes], axis=0)
    mse = _np.mean([o.vector_sq_errors for o in outcomes], axis=0)
    ber_w = trailing_mean(ber, cfg.window)
    mse_w = trailing_mean(mse, cfg.window)
    _logger.info('%s convergence at %.2f dB over %d frames', cfg.scheme, snr_db, cfg.frames)
    return [_records.ConvergenceRecord(i, float(ber_w[i]), float(mse_w[i])) for i in range(cfg.frame_len)]


def bound_code_matrix(cfg: _config.ExperimentConfig, snr_index: int, snr: float) -> _types.CMatrix:
    """Code matrix of the scheme under test, scaled to tr(Phi^H Phi) = NT."""
    nt = cfg.system.nt
    if cfg.scheme == 'D-Alamouti':
        return _np.eye(nt, dtype=_np.complex128)
    radius = float(_np.sqrt(nt))
    if cfg.scheme == 'R-Alamouti':
        return _system.generate_sphere_matrix(nt, radius, make_rng(cfg.master_seed, BOUND_TAG))
    rng = make_rng(cfg.master_seed, snr_index, FD_ARMO_TAG, BOUND_TAG)
    candidates = [_system.generate_sphere_matrix(nt, radius, rng) for _ in range(cfg.candidates)]
    return _analysis.fd_armo_select(candidates, codeword_pair(cfg).delta, nt / snr)[1]


def run_bound_comparison(cfg: _config.ExperimentConfig) -> _t.List[_records.BoundRecord]:
    """
    Monte Carlo pairwise error of the configured codeword pair against the
    adaptive and traditional upper bounds. SNR here is the per-entry
    signal-to-noise ratio of R = Phi H C + W.
    """
    if cfg.scheme not in BOUND_SCHEMES:
        raise _ex.ConfigError(f'bound comparison supports {", ".join(BOUND_SCHEMES)}', 'scheme')
    pair = codeword_pair(cfg)
    n, t = pair.c1.shape
    out = []
    for snr_index, snr_db in enumerate(cfg.snr_grid_db):
        snr = 10 ** (snr_db / 10)
        phi = bound_code_matrix(cfg, snr_index, snr)
        eig_phi = _analysis.delta_eigenvalues(phi)
        mc = _analysis.monte_carlo_pep(phi, pair, snr, cfg.pep_trials, make_rng(cfg.master_seed, snr_index, BOUND_TAG, 1))
        mc_traditional = _analysis.monte_carlo_pep(_np.eye(phi.shape[0]), pair, snr, cfg.pep_trials,
                                                   make_rng(cfg.master_seed, snr_index, BOUND_TAG, 2))
        out.append(_records.BoundRecord(
            snr_db, mc, mc_traditional,
            _analysis.pep_bound_adaptive(eig_phi, pair.eigenvalues, snr, n, t),
            _analysis.pep_bound_traditional(pair.eigenvalues, snr, n, t),
        ))
        _logger.info('%s bounds at %.2f dB: mc %.3g', cfg.scheme, snr_db, mc)
    return out


def run_fd_armo(cfg: _config.ExperimentConfig) -> _t.List[_records.FDARMORecord]:
    """Relay 0's selected candidate, its criterion and exact PEP, and the candidates' mean exact PEP."""
    delta = codeword_pair(cfg).delta
    out = []
    for snr_index, snr_db in enumerate(cfg.snr_grid_db):
        system = cfg.system.with_noise_variance(noise_variance_for(cfg, snr_db))
        n0 = system.noise_variance * system.nt
        candidates = fd_armo_candidates(cfg, system, snr_index, 0)
        index, phi = _analysis.fd_armo_select(candidates, delta, n0)
        score = float(_analysis.selection_scores([phi], delta, n0)[0])
        peps = [_analysis.exact_pep(c, delta, n0, cfg.quadrature_terms) for c in candidates]
        out.append(_records.FDARMORecord(snr_db, system.noise_variance, index, score, peps[index], float(_np.mean(peps))))
        _logger.info('FD-ARMO %.2f dB: candidate %d selected', snr_db, index)
    return out
