"""
Adaptive relay matrix optimization: joint stochastic-gradient adaptation of
the receive filters and code matrices, recursive least-squares and
least-squares code estimation, and relay power normalization.
"""
import dataclasses as _dc
import typing as _t

import numpy as _np

import coopdstc.exceptions as _ex
import coopdstc.numerics as _numerics
import coopdstc.receivers as _receivers
import coopdstc.system as _system
import coopdstc.types as _types


PSD_TOL = 1e-10
HIGH_SNR_DELTA = 0.01
LOW_SNR_DELTA = 10.0
DELTA_SWITCH_DB = 10.0
# cap on step * regressor energy when SG steps are noise-scaled
MAX_NORMALIZED_STEP = 0.5


@_dc.dataclass(frozen=True, eq=False)
class SGState:
    """
    Receive filters, code bank and the two step sizes (beta for w, mu for Phi).

    With noise_variance set, the steps are read on the unit-noise scale of
    the received SNR (signal and noise divided by the noise deviation) and
    capped like a normalized LMS:

    beta_eff = beta / (sigma^2 + beta ||r||^2 / MAX_NORMALIZED_STEP)

    and likewise for mu with the energy of the code regressor. Without it
    the steps apply as given.
    """
    filters: _receivers.ReceiveFilterBank
    codes: _system.AdjustableCodeBank
    step_beta: float
    step_mu: float
    relay_power: float = 1.0
    noise_variance: _t.Optional[float] = None

    def __post_init__(self) -> None:
        _ex.check_non_negative(self.step_beta, 'step_beta')
        _ex.check_non_negative(self.step_mu, 'step_mu')
        _ex.check_positive(self.relay_power, 'relay_power')
        if self.noise_variance is not None:
            _ex.check_non_negative(self.noise_variance, 'noise_variance')


@_dc.dataclass(frozen=True, eq=False)
class RLSState:
    """
    Exponentially weighted least-squares state of one (relay, symbol) stream.

    p is the inverse weighted correlation of the regressor, z the weighted
    cross-correlation and phi = z p the raw (unnormalized) code estimate.
    """
    p: _types.CMatrix
    z: _types.CMatrix
    phi: _types.CMatrix
    forgetting: float
    delta: float

    def __post_init__(self) -> None:
        if not 0 < self.forgetting <= 1:
            raise _ex.PreconditionError(f'forgetting factor must lie in (0, 1], got {self.forgetting}.')
        _ex.check_positive(self.delta, 'delta')


def normalize_codes(codes: _system.AdjustableCodeBank, relay_power: float) -> _system.AdjustableCodeBank:
    """
    Scale every relay's matrices so sum_j tr(Phi[k, j] Phi[k, j]^H) == relay_power.

    Raises DegenerateInputError for a relay whose matrices are all zero.
    """
    _ex.check_positive(relay_power, 'relay_power')
    matrices = codes.matrices.copy()
    for k in range(codes.n_relays):
        power = codes.relay_power(k)
        if power == 0 or not _np.isfinite(power):
            raise _ex.DegenerateInputError(f'relay {k} has no code energy to normalize.')
        matrices[k] *= _np.sqrt(relay_power / power)
    return _system.AdjustableCodeBank(matrices)


def identity_bank(cfg: _system.SystemConfig) -> _system.AdjustableCodeBank:
    """Phi[k, j] = sqrt(P_R / (N NT)) I, the fixed distributed code."""
    scale = _np.sqrt(cfg.relay_power / (cfg.n_antennas * cfg.nt))
    eye = scale * _np.eye(cfg.nt, dtype=_np.complex128)
    return _system.AdjustableCodeBank.uniform([eye] * cfg.n_relays, cfg.n_antennas)


def randomized_bank(cfg: _system.SystemConfig, rng: _types.Rng) -> _system.AdjustableCodeBank:
    """One sphere matrix of radius sqrt(P_R / N) per relay, shared by all symbols."""
    radius = _np.sqrt(cfg.relay_power / cfg.n_antennas)
    per_relay = [_system.generate_sphere_matrix(cfg.nt, radius, rng) for _ in range(cfg.n_relays)]
    return _system.AdjustableCodeBank.uniform(per_relay, cfg.n_antennas)


def initial_sg_state(cfg: _system.SystemConfig, rng: _types.Rng, step_beta: float, step_mu: float,
                     noise_variance: _t.Optional[float] = None) -> SGState:
    filters = _receivers.ReceiveFilterBank.zeros(cfg.n_antennas, cfg.frame_dim)
    return SGState(filters, randomized_bank(cfg, rng), step_beta, step_mu, cfg.relay_power, noise_variance)


def instantaneous_cost(w: _t.Any, r: _t.Any, s_j: complex) -> float:
    """|s_j - w^H r|^2"""
    w = _np.asarray(w, dtype=_np.complex128).ravel()
    r = _np.asarray(r, dtype=_np.complex128).ravel()
    return float(abs(s_j - _np.vdot(w, r)) ** 2)


def cost_gradients(w: _t.Any, r: _t.Any, s_j: complex, d: _t.Any,
                   relay_offset: int = 0) -> _t.Tuple[_types.CVector, _types.CMatrix]:
    """
    Conjugate gradients of the instantaneous cost.

    Returns (dC/dw*, dC/dPhi*) where the code gradient is -e s_j* w_R d^H
    with w_R the relay-path part of w.
    """
    w = _np.asarray(w, dtype=_np.complex128).ravel()
    r = _np.asarray(r, dtype=_np.complex128).ravel()
    d = _np.asarray(d, dtype=_np.complex128).ravel()
    e = s_j - _np.vdot(w, r)
    grad_w = -_np.conj(e) * r
    grad_phi = -e * _np.conj(s_j) * _np.outer(w[relay_offset:], d.conj())
    return grad_w, grad_phi


def effective_step(step: float, noise_variance: _t.Optional[float], energy: float) -> float:
    """Step size after noise scaling; the raw step when noise_variance is None."""
    if noise_variance is None or step == 0:
        return step
    scale = noise_variance + step * energy / MAX_NORMALIZED_STEP
    return step / scale if scale > 0 else 0.0


def sg_step(state: SGState, frame: _system.ReceivedFrame, s_ref: _t.Any) -> SGState:
    """
    One joint stochastic-gradient update followed by power normalization.

    e_j = s_j - w_j^H r
    w_j <- w_j + beta e_j* r
    Phi[k, j] <- Phi[k, j] + mu e_j s_j* w_j,R d[k, j]^H
    """
    s_ref = _np.asarray(s_ref, dtype=_np.complex128).ravel()
    codes = state.codes
    if s_ref.size != codes.n_symbols:
        raise _ex.DimensionError(f'expected {codes.n_symbols} reference symbols, got {s_ref.size}.')
    r = frame.r
    filters = state.filters.filters
    errors = s_ref - filters.conj() @ r
    beta = effective_step(state.step_beta, state.noise_variance, float(_np.vdot(r, r).real))
    new_filters = filters + beta * _np.conj(errors)[:, None] * r[None, :]
    w_relay = filters[:, frame.relay_offset:]
    matrices = codes.matrices.copy()
    for k in range(codes.n_relays):
        for j in range(codes.n_symbols):
            d = frame.d_columns[k, j]
            energy = abs(s_ref[j]) ** 2 * float(_np.vdot(w_relay[j], w_relay[j]).real) * float(_np.vdot(d, d).real)
            mu = effective_step(state.step_mu, state.noise_variance, energy)
            matrices[k, j] += mu * errors[j] * _np.conj(s_ref[j]) * _np.outer(w_relay[j], d.conj())
    new_codes = normalize_codes(_system.AdjustableCodeBank(matrices), state.relay_power)
    return _dc.replace(state, filters=_receivers.ReceiveFilterBank(new_filters), codes=new_codes)


def ls_code_matrix(r_e: _t.Any, d: _t.Any, s_hat: complex) -> _types.CMatrix:
    """
    Least-squares code matrix Phi = s* r_e d^H (|s|^2 d d^H)^+.

    Equals r_e d^H / (s ||d||^2) for nonzero s and d.
    """
    d = _np.asarray(d, dtype=_np.complex128).ravel()
    r_e = _np.asarray(r_e, dtype=_np.complex128).ravel()
    if s_hat == 0 or not _np.any(d):
        raise _ex.DegenerateInputError('least-squares code needs a nonzero symbol and channel column.')
    if r_e.size != d.size:
        raise _ex.DimensionError(f'r_e has {r_e.size} entries, d has {d.size}.')
    gram = abs(s_hat) ** 2 * _np.outer(d, d.conj())
    return _np.conj(s_hat) * _np.outer(r_e, d.conj()) @ _numerics.pseudo_inverse(gram)


def hessian_psd_check(d: _t.Any, s: complex, tol: float = PSD_TOL) -> bool:
    """True when every eigenvalue of |s|^2 d d^H is >= -tol."""
    d = _np.asarray(d, dtype=_np.complex128).ravel()
    hessian = abs(s) ** 2 * _np.outer(d, d.conj())
    return bool(_np.all(_numerics.hermitian_eig(hessian).eigenvalues >= -tol))


def choose_rls_delta(snr_db: float) -> float:
    """Initialization constant: small at high SNR, large at low SNR."""
    return HIGH_SNR_DELTA if snr_db >= DELTA_SWITCH_DB else LOW_SNR_DELTA


def init_rls_state(dim: int, forgetting: float, delta: float,
                   phi0: _t.Optional[_t.Any] = None) -> RLSState:
    """
    P(0) = delta^-1 I. Z(0) = I, or delta phi0 when a starting estimate is
    given, so phi = Z P starts at phi0.
    """
    _ex.check_positive(delta, 'delta')
    eye = _np.eye(dim, dtype=_np.complex128)
    z0 = eye if phi0 is None else delta * _numerics.as_cmatrix(phi0, 'phi0')
    if z0.shape != (dim, dim):
        raise _ex.DimensionError(f'phi0 must be {dim} x {dim}.')
    p0 = eye / delta
    return RLSState(p0, z0, z0 @ p0, forgetting, delta)


def rls_step(state: RLSState, r_e: _t.Any, r_kj: _t.Any) -> RLSState:
    """
    One recursive least-squares update of a stream's code estimate.

    k = lambda^-1 P r / (1 + lambda^-1 r^H P r)
    P <- lambda^-1 P - lambda^-1 k r^H P
    Z <- lambda Z + r_e r^H
    Phi <- Phi + (r_e - Phi r) k^H

    The result matches the batch solution Z P of the weighted normal
    equations at every step. Phi is returned unnormalized.
    """
    r = _np.asarray(r_kj, dtype=_np.complex128).ravel()
    r_e = _np.asarray(r_e, dtype=_np.complex128).ravel()
    dim = state.p.shape[0]
    if r.size != dim or r_e.size != dim:
        raise _ex.DimensionError(f'RLS regressor and target must have {dim} entries.')
    inv_lam = 1.0 / state.forgetting
    pr = state.p @ r
    denominator = 1.0 + inv_lam * _np.vdot(r, pr).real
    if denominator <= 0:
        raise _ex.NumericalFailure('RLS inverse correlation lost positive definiteness.')
    gain = inv_lam * pr / denominator
    p = inv_lam * state.p - inv_lam * _np.outer(gain, r.conj() @ state.p)
    p = (p + p.conj().T) / 2
    z = state.forgetting * state.z + _np.outer(r_e, r.conj())
    phi = state.phi + _np.outer(r_e - state.phi @ r, gain.conj())
    return _dc.replace(state, p=p, z=z, phi=phi)


def interference_cancelled(frame: _system.ReceivedFrame, codes: _system.AdjustableCodeBank,
                           s_hat: _t.Any, k: int, j: int) -> _types.CVector:
    """Relay part of r minus every other stream's reconstructed contribution."""
    s_hat = _np.asarray(s_hat, dtype=_np.complex128).ravel()
    contributions = _np.einsum('kjab,kjb->kja', codes.matrices, frame.d_columns) * s_hat[None, :, None]
    others = contributions.sum(axis=(0, 1)) - contributions[k, j]
    return frame.relay_part - others


StateGrid = _t.Tuple[_t.Tuple[RLSState, ...], ...]


def init_rls_grid(codes: _system.AdjustableCodeBank, forgetting: float, delta: float) -> StateGrid:
    return tuple(
        tuple(init_rls_state(codes.dim, forgetting, delta, codes.matrices[k, j]) for j in range(codes.n_symbols))
        for k in range(codes.n_relays)
    )


def rls_bank_step(states: StateGrid, codes: _system.AdjustableCodeBank, frame: _system.ReceivedFrame,
                  s_hat: _t.Any, relay_power: float) -> _t.Tuple[StateGrid, _system.AdjustableCodeBank]:
    """Update every stream from one observation, then normalize the resulting bank."""
    s_hat = _np.asarray(s_hat, dtype=_np.complex128).ravel()
    new_states = []
    for k, row in enumerate(states):
        new_row = []
        for j, state in enumerate(row):
            r_e = interference_cancelled(frame, codes, s_hat, k, j)
            new_row.append(rls_step(state, r_e, frame.d_columns[k, j] * s_hat[j]))
        new_states.append(tuple(new_row))
    raw = _np.array([[state.phi for state in row] for row in new_states])
    return tuple(new_states), normalize_codes(_system.AdjustableCodeBank(raw), relay_power)


def ls_bank_step(codes: _system.AdjustableCodeBank, frame: _system.ReceivedFrame,
                 s_hat: _t.Any, relay_power: float) -> _system.AdjustableCodeBank:
    """Replace every code matrix with its single-observation least-squares fit."""
    s_hat = _np.asarray(s_hat, dtype=_np.complex128).ravel()
    matrices = codes.matrices.copy()
    for k in range(codes.n_relays):
        for j in range(codes.n_symbols):
            r_e = interference_cancelled(frame, codes, s_hat, k, j)
            matrices[k, j] = ls_code_matrix(r_e, frame.d_columns[k, j], s_hat[j])
    return normalize_codes(_system.AdjustableCodeBank(matrices), relay_power)
