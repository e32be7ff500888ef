"""
Functions for setting up test systems, channels and experiments.
"""
import typing as _t

import numpy as _np

import coopdstc.config as _config
import coopdstc.numerics as _numerics
import coopdstc.system as _system


def rng(seed: int = 0) -> _np.random.Generator:
    return _np.random.default_rng(seed)


def small_system(noise_variance: float = 0.1, direct_link: bool = False, n_relays: int = 1) -> _system.SystemConfig:
    return _system.SystemConfig(noise_variance=noise_variance, direct_link=direct_link, n_relays=n_relays)


def random_matrix(rows: int, cols: int, generator: _np.random.Generator) -> _np.ndarray:
    return _numerics.complex_normal(generator, (rows, cols))


def random_hermitian(n: int, generator: _np.random.Generator) -> _np.ndarray:
    m = random_matrix(n, n, generator)
    return (m + m.conj().T) / 2


def random_positive_definite(n: int, generator: _np.random.Generator) -> _np.ndarray:
    m = random_matrix(n, n, generator)
    return m @ m.conj().T + n * _np.eye(n)


def random_unitary(n: int, generator: _np.random.Generator) -> _np.ndarray:
    q, r = _np.linalg.qr(random_matrix(n, n, generator))
    return q * (_np.diag(r) / _np.abs(_np.diag(r)))


def experiment(scheme: str = 'D-Alamouti', **overrides: _t.Any) -> _config.ExperimentConfig:
    """Small fast experiment; overrides use config-file keys."""
    values = {
        'scheme': scheme,
        'snr_grid_db': '10',
        'frames': '4',
        'frame_len': '30',
        'pilot_len': '10',
        'calibration_draws': '20',
        'candidates': '20',
        'pep_trials': '2000',
        'quadrature_terms': '16',
        'master_seed': '7',
    }
    values.update({key: str(value) for key, value in overrides.items()})
    return _config.build_experiment_config(values)
