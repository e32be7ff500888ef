"""
Experiment configuration: a flat ``key = value`` text format parsed into a
frozendict and validated into frozen dataclasses before any simulation runs.
"""
import dataclasses as _dc
import pathlib as _pathlib
import typing as _t

from frozendict import frozendict

import coopdstc.exceptions as _ex
import coopdstc.feedback as _feedback
import coopdstc.system as _system


SCHEMES = ('SM', 'D-Alamouti', 'R-Alamouti', 'C-ARMO-SG', 'C-ARMO-RLS', 'C-ARMO-LS', 'FD-ARMO')
ADAPTIVE_SCHEMES = ('C-ARMO-SG', 'C-ARMO-RLS', 'C-ARMO-LS')
DETECTORS = ('mmse', 'ml')
SNR_AXES = ('received', 'noise')
DEFAULT_DETECTORS = frozendict({'C-ARMO-RLS': 'ml', 'C-ARMO-LS': 'ml'})

DEFAULTS = frozendict({
    'scheme': 'C-ARMO-SG',
    'snr_grid_db': '0,5,10,15,20',
    'frames': '200',
    'frame_len': '100',
    'master_seed': '0',
    'n_antennas': '2',
    'n_relays': '1',
    'n_slots': '2',
    'relay_power': '1.0',
    'direct_link': 'false',
    'detector': '',
    'pilot_len': '50',
    'step_beta': '0.01',
    'step_mu': '0.03',
    'forgetting': '0.998',
    'rls_delta': 'auto',
    'candidates': '500',
    'feedback_bits': '',
    'feedback_crossover': '0',
    'feedback_schedule': 'per_frame',
    'window': '20',
    'workers': '1',
    'calibration_draws': '200',
    'pep_trials': '100000',
    'quadrature_terms': '64',
    'snr_axis': 'received',
    'pair_first': '0,0',
    'pair_second': '0,1',
})

_TRUE = ('1', 'true', 'yes', 'on')
_FALSE = ('0', 'false', 'no', 'off')


@_dc.dataclass(frozen=True)
class ExperimentConfig:
    """
    Validated experiment description.

    system.noise_variance is a placeholder; the harness sets the noise
    variance of every SNR point.
    """
    scheme: str
    snr_grid_db: _t.Tuple[float, ...]
    frames: int
    frame_len: int
    master_seed: int
    system: _system.SystemConfig
    detector: str
    pilot_len: int = 50
    step_beta: float = 0.01
    step_mu: float = 0.03
    forgetting: float = 0.998
    rls_delta: _t.Optional[float] = None
    candidates: int = 500
    feedback: _t.Optional[_feedback.FeedbackModel] = None
    feedback_schedule: str = 'per_frame'
    window: int = 20
    workers: int = 1
    calibration_draws: int = 200
    pep_trials: int = 100000
    quadrature_terms: int = 64
    snr_axis: str = 'received'
    pair_first: _t.Tuple[int, ...] = (0, 0)
    pair_second: _t.Tuple[int, ...] = (0, 1)

    def __post_init__(self) -> None:
        validate(self)

    @property
    def steps(self) -> _t.Tuple[float, _t.Optional[float]]:
        """(beta, mu) for stochastic gradient, (lambda, delta) for RLS."""
        if self.scheme == 'C-ARMO-RLS':
            return self.forgetting, self.rls_delta
        return self.step_beta, self.step_mu

    @property
    def is_adaptive(self) -> bool:
        return self.scheme in ADAPTIVE_SCHEMES

    @property
    def data_symbols(self) -> int:
        """Symbol vectors per frame whose bit errors are counted."""
        return self.frame_len - self.pilot_len if self.is_adaptive else self.frame_len


def validate(cfg: ExperimentConfig) -> None:
    if cfg.scheme not in SCHEMES:
        raise _ex.ConfigError(f'unknown scheme {cfg.scheme!r}, expected one of {", ".join(SCHEMES)}', 'scheme')
    if not cfg.snr_grid_db:
        raise _ex.ConfigError('at least one SNR point is required', 'snr_grid_db')
    for key in ('frames', 'frame_len', 'candidates', 'window', 'workers', 'calibration_draws', 'pep_trials', 'quadrature_terms'):
        if getattr(cfg, key) < 1:
            raise _ex.ConfigError('must be a positive integer', key)
    if cfg.pilot_len < 0:
        raise _ex.ConfigError('must be non-negative', 'pilot_len')
    if cfg.is_adaptive and cfg.pilot_len >= cfg.frame_len:
        raise _ex.ConfigError('adaptive schemes need data symbols after the pilots', 'pilot_len')
    if cfg.detector not in DETECTORS:
        raise _ex.ConfigError(f'expected one of {", ".join(DETECTORS)}', 'detector')
    if cfg.scheme == 'C-ARMO-SG' and cfg.detector != 'mmse':
        raise _ex.ConfigError('C-ARMO-SG detects with its adaptive MMSE filters', 'detector')
    if cfg.scheme in ('C-ARMO-RLS', 'C-ARMO-LS') and cfg.detector != 'ml':
        raise _ex.ConfigError(f'{cfg.scheme} needs ML decisions', 'detector')
    if cfg.step_beta < 0 or cfg.step_mu < 0:
        raise _ex.ConfigError('step sizes must be non-negative', 'step_beta' if cfg.step_beta < 0 else 'step_mu')
    if not 0 < cfg.forgetting <= 1:
        raise _ex.ConfigError('must lie in (0, 1]', 'forgetting')
    if cfg.rls_delta is not None and cfg.rls_delta <= 0:
        raise _ex.ConfigError('must be positive', 'rls_delta')
    if cfg.feedback is not None and not cfg.is_adaptive:
        raise _ex.ConfigError(f'feedback only applies to {", ".join(ADAPTIVE_SCHEMES)}', 'feedback_bits')
    if cfg.feedback_schedule not in _feedback.SCHEDULES:
        raise _ex.ConfigError(f'expected one of {", ".join(_feedback.SCHEDULES)}', 'feedback_schedule')
    if cfg.snr_axis not in SNR_AXES:
        raise _ex.ConfigError(f'expected one of {", ".join(SNR_AXES)}', 'snr_axis')
    for key in ('pair_first', 'pair_second'):
        if len(getattr(cfg, key)) != 2 or not all(0 <= i < 4 for i in getattr(cfg, key)):
            raise _ex.ConfigError('expected two QPSK symbol indices', key)
    if cfg.pair_first == cfg.pair_second:
        raise _ex.ConfigError('codeword pair must differ', 'pair_second')


def parse_config_text(text: str) -> frozendict:
    """
    Parse ``key = value`` lines. Blank lines and ``#`` comments are ignored.

    Examples
    --------
    >>> parse_config_text('scheme = SM  # baseline\\nframes = 10')
    frozendict({'scheme': 'SM', 'frames': '10'})
    """
    values: _t.Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise _ex.ConfigError(f'line {number}: expected "key = value", got {raw.strip()!r}')
        key, value = (part.strip() for part in line.split('=', 1))
        if not key:
            raise _ex.ConfigError(f'line {number}: missing key')
        if key in values:
            raise _ex.ConfigError(f'line {number}: duplicate key', key)
        values[key] = value
    return frozendict(values)


def load_config(path: _t.Union[str, _pathlib.Path]) -> frozendict:
    try:
        text = _pathlib.Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise _ex.ConfigError(f'cannot read config file {path}: {e.strerror or e}') from e
    return parse_config_text(text)


def _as_int(values: _t.Mapping[str, str], key: str) -> int:
    try:
        return int(values[key])
    except ValueError:
        raise _ex.ConfigError(f'expected an integer, got {values[key]!r}', key) from None


def _as_float(values: _t.Mapping[str, str], key: str) -> float:
    try:
        return float(values[key])
    except ValueError:
        raise _ex.ConfigError(f'expected a number, got {values[key]!r}', key) from None


def _as_bool(values: _t.Mapping[str, str], key: str) -> bool:
    text = values[key].lower()
    if text in _TRUE:
        return True
    if text in _FALSE:
        return False
    raise _ex.ConfigError(f'expected true or false, got {values[key]!r}', key)


def _as_list(values: _t.Mapping[str, str], key: str, kind: _t.Callable[[str], _t.Any]) -> _t.Tuple[_t.Any, ...]:
    try:
        return tuple(kind(item.strip()) for item in values[key].split(',') if item.strip())
    except ValueError:
        raise _ex.ConfigError(f'cannot parse list {values[key]!r}', key) from None


def build_experiment_config(mapping: _t.Mapping[str, str],
                            overrides: _t.Optional[_t.Mapping[str, _t.Any]] = None) -> ExperimentConfig:
    """
    Merge parsed values over DEFAULTS and validate them.

    Raises ConfigError for unknown keys, malformed values and invalid
    scheme and field combinations.
    """
    unknown = sorted(set(mapping) - set(DEFAULTS))
    if unknown:
        raise _ex.ConfigError(f'unknown configuration key(s): {", ".join(unknown)}')
    values = dict(DEFAULTS)
    values.update(mapping)
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = str(value)

    scheme = values['scheme']
    detector = values['detector'] or DEFAULT_DETECTORS.get(scheme, 'mmse')
    encoder = 'none' if scheme == 'SM' else 'alamouti'
    try:
        system = _system.SystemConfig(
            n_antennas=_as_int(values, 'n_antennas'),
            n_relays=_as_int(values, 'n_relays'),
            n_slots=1 if encoder == 'none' else _as_int(values, 'n_slots'),
            relay_power=_as_float(values, 'relay_power'),
            direct_link=_as_bool(values, 'direct_link'),
            encoder=encoder,
        )
    except _ex.PreconditionError as e:
        raise _ex.ConfigError(str(e)) from e

    feedback = None
    if values['feedback_bits']:
        try:
            feedback = _feedback.FeedbackModel.for_relay_power(
                system.relay_power, _as_int(values, 'feedback_bits'), _as_float(values, 'feedback_crossover'))
        except _ex.PreconditionError as e:
            raise _ex.ConfigError(str(e), 'feedback_bits') from e

    rls_delta = None if values['rls_delta'] == 'auto' else _as_float(values, 'rls_delta')
    master_seed = _as_int(values, 'master_seed')
    if not 0 <= master_seed < 2 ** 64:
        raise _ex.ConfigError('must be an unsigned 64-bit integer', 'master_seed')

    return ExperimentConfig(
        scheme=scheme,
        snr_grid_db=_as_list(values, 'snr_grid_db', float),
        frames=_as_int(values, 'frames'),
        frame_len=_as_int(values, 'frame_len'),
        master_seed=master_seed,
        system=system,
        detector=detector,
        pilot_len=_as_int(values, 'pilot_len'),
        step_beta=_as_float(values, 'step_beta'),
        step_mu=_as_float(values, 'step_mu'),
        forgetting=_as_float(values, 'forgetting'),
        rls_delta=rls_delta,
        candidates=_as_int(values, 'candidates'),
        feedback=feedback,
        feedback_schedule=values['feedback_schedule'],
        window=_as_int(values, 'window'),
        workers=_as_int(values, 'workers'),
        calibration_draws=_as_int(values, 'calibration_draws'),
        pep_trials=_as_int(values, 'pep_trials'),
        quadrature_terms=_as_int(values, 'quadrature_terms'),
        snr_axis=values['snr_axis'],
        pair_first=_as_list(values, 'pair_first', int),
        pair_second=_as_list(values, 'pair_second', int),
    )
