"""
Two-hop amplify-and-forward cooperative system model.

The source broadcasts N symbols to n_relays relays, each relay amplifies
and encodes its observation with an Alamouti code spread over T slots,
an adjustable code matrix Phi is applied per transmitted symbol, and the
destination stacks its slot observations (slot 2 conjugated) into one
vector of length N*T, optionally preceded by the N-row direct link.
"""
import dataclasses as _dc
import typing as _t

import numpy as _np

import coopdstc.exceptions as _ex
import coopdstc.numerics as _numerics
import coopdstc.types as _types


ENCODERS = ('alamouti', 'none')

# Alamouti slot-2 symbol swap: conj(column 2 of M(s)) == J s
ALAMOUTI_SWAP = _np.array([[0, -1], [1, 0]], dtype=_np.complex128)


@_dc.dataclass(frozen=True)
class SystemConfig:
    """
    Dimensions and power budget of the relay network.

    encoder 'alamouti' requires n_antennas == n_slots == 2,
    encoder 'none' (plain spatial multiplexing) requires n_slots == 1.
    """
    n_antennas: int = 2
    n_relays: int = 1
    n_slots: int = 2
    noise_variance: float = 1.0
    relay_power: float = 1.0
    direct_link: bool = False
    signal_power: float = 1.0
    encoder: str = 'alamouti'

    def __post_init__(self) -> None:
        for name in ('n_antennas', 'n_relays', 'n_slots'):
            if getattr(self, name) < 1:
                raise _ex.PreconditionError(f'{name} must be a positive integer.')
        _ex.check_non_negative(self.noise_variance, 'noise_variance')
        _ex.check_positive(self.relay_power, 'relay_power')
        _ex.check_positive(self.signal_power, 'signal_power')
        if self.encoder not in ENCODERS:
            raise _ex.PreconditionError(f'unknown encoder {self.encoder!r}.')
        if self.encoder == 'alamouti' and (self.n_antennas, self.n_slots) != (2, 2):
            raise _ex.PreconditionError('the Alamouti encoder needs n_antennas == n_slots == 2.')
        if self.encoder == 'none' and self.n_slots != 1:
            raise _ex.PreconditionError('an uncoded relay uses a single slot.')

    @property
    def nt(self) -> int:
        return self.n_antennas * self.n_slots

    @property
    def frame_dim(self) -> int:
        return self.nt + (self.n_antennas if self.direct_link else 0)

    @property
    def relay_offset(self) -> int:
        """Index of the first relay-path entry in a received vector."""
        return self.n_antennas if self.direct_link else 0

    def with_noise_variance(self, noise_variance: float) -> 'SystemConfig':
        return _dc.replace(self, noise_variance=noise_variance)


@_dc.dataclass(frozen=True, eq=False)
class ChannelRealization:
    """Per-frame channels. f_sr, g_rd, a_rd are stacked along relay index."""
    h_sd: _types.CMatrix
    f_sr: _np.ndarray
    g_rd: _np.ndarray
    a_rd: _np.ndarray

    @property
    def n_relays(self) -> int:
        return self.f_sr.shape[0]


@_dc.dataclass(frozen=True, eq=False)
class AdjustableCodeBank:
    """
    Code matrices Phi[k, j] of shape (n_relays, n_symbols, NT, NT).

    Relay k's power is the sum over j of tr(Phi[k, j] Phi[k, j]^H).
    """
    matrices: _np.ndarray

    def __post_init__(self) -> None:
        m = self.matrices
        if m.ndim != 4 or m.shape[2] != m.shape[3]:
            raise _ex.DimensionError(f'code bank must have shape (K, N, NT, NT), got {m.shape}.')

    @property
    def n_relays(self) -> int:
        return self.matrices.shape[0]

    @property
    def n_symbols(self) -> int:
        return self.matrices.shape[1]

    @property
    def dim(self) -> int:
        return self.matrices.shape[2]

    def matrix(self, k: int, j: int) -> _types.CMatrix:
        return self.matrices[k, j]

    def relay_power(self, k: int) -> float:
        return float(_np.sum(_np.abs(self.matrices[k]) ** 2))

    def with_matrix(self, k: int, j: int, phi: _t.Any) -> 'AdjustableCodeBank':
        matrices = self.matrices.copy()
        matrices[k, j] = phi
        return AdjustableCodeBank(matrices)

    @classmethod
    def uniform(cls, per_relay: _t.Sequence[_t.Any], n_symbols: int) -> 'AdjustableCodeBank':
        """Bank that applies the same matrix to every symbol of a relay."""
        stacked = _np.stack([_numerics.as_cmatrix(p) for p in per_relay])
        return cls(_np.repeat(stacked[:, None, :, :], n_symbols, axis=1).copy())


@_dc.dataclass(frozen=True, eq=False)
class ReceivedFrame:
    """
    One destination observation.

    r : received vector (direct rows first when present)
    d_columns : (n_relays, N, NT) effective relay columns d_{k,j}
    noise_var_eq : per-entry variance of the relay-path noise
    h_sd : direct channel, None without a direct link
    """
    r: _types.CVector
    d_columns: _np.ndarray
    noise_var_eq: float
    noise_variance: float
    h_sd: _t.Optional[_types.CMatrix] = None

    @property
    def relay_offset(self) -> int:
        return 0 if self.h_sd is None else self.h_sd.shape[0]

    @property
    def relay_part(self) -> _types.CVector:
        return self.r[self.relay_offset:]


class EquivalentChannel(_t.NamedTuple):
    g_eq: _types.CMatrix
    conjugated_slots: _t.Tuple[bool, ...]


def amplification_gain(cfg: SystemConfig) -> float:
    """Scalar AF gain sqrt(P_R / (N (sigma_s^2 + sigma^2)))."""
    return float(_np.sqrt(cfg.relay_power / (cfg.n_antennas * (cfg.signal_power + cfg.noise_variance))))


def draw_channels(cfg: SystemConfig, rng: _types.Rng) -> ChannelRealization:
    """
    Draw i.i.d. CN(0, 1) source-destination, source-relay and relay-destination
    channels. The direct channel is always drawn so random streams do not
    depend on direct_link.
    """
    n, k = cfg.n_antennas, cfg.n_relays
    h_sd = _numerics.complex_normal(rng, (n, n))
    f_sr = _numerics.complex_normal(rng, (k, n, n))
    g_rd = _numerics.complex_normal(rng, (k, n, n))
    a_rd = _np.repeat((amplification_gain(cfg) * _np.eye(n, dtype=_np.complex128))[None], k, axis=0)
    return ChannelRealization(h_sd, f_sr, g_rd, a_rd)


def amplify(r_sr: _t.Any, a: _t.Any) -> _types.CVector:
    """Relay amplify step: A r."""
    a = _numerics.as_cmatrix(a, 'amplification')
    r_sr = _np.asarray(r_sr, dtype=_np.complex128)
    if a.shape[1] != r_sr.shape[0]:
        raise _ex.DimensionError(f'amplification is {a.shape}, received vector has {r_sr.shape[0]} entries.')
    return a @ r_sr


def alamouti_encode(s_tilde: _t.Any) -> _types.CMatrix:
    """
    2 x 2 Alamouti code matrix, columns are the two time slots.

    Examples
    --------
    >>> alamouti_encode([1, 1j])
    array([[1.+0.j, 0.+1.j],
           [0.+1.j, 1.-0.j]])
    """
    s = _np.asarray(s_tilde, dtype=_np.complex128).ravel()
    if s.size != 2:
        raise _ex.DimensionError(f'Alamouti encodes two symbols, got {s.size}.')
    return _np.array([[s[0], -_np.conj(s[1])], [s[1], _np.conj(s[0])]])


def build_equivalent_channel(g: _t.Any, encoder: str = 'alamouti') -> EquivalentChannel:
    """
    Linear equivalent channel of the relay-to-destination hop.

    For Alamouti the stacked observation [y1; conj(y2)] equals
    [G; conj(G) J] s_tilde, so G_eq does not depend on the symbols.
    """
    g = _numerics.as_cmatrix(g, 'g')
    _ex.check_square(g, 'g')
    if encoder == 'none':
        return EquivalentChannel(g.copy(), (False,))
    if g.shape != (2, 2):
        raise _ex.DimensionError('Alamouti equivalent channel needs a 2 x 2 channel.')
    return EquivalentChannel(_np.vstack([g, _np.conj(g) @ ALAMOUTI_SWAP]), (False, True))


def slot_blocks(phi_eq: _t.Any, n_slots: int) -> _t.List[_types.CMatrix]:
    """Diagonal blocks of a block-diagonal Phi_eq, one per slot."""
    phi_eq = _numerics.as_cmatrix(phi_eq, 'phi_eq')
    _ex.check_square(phi_eq, 'phi_eq')
    n = phi_eq.shape[0] // n_slots
    if n * n_slots != phi_eq.shape[0]:
        raise _ex.DimensionError('phi_eq size is not a multiple of the slot count.')
    blocks = [phi_eq[t * n:(t + 1) * n, t * n:(t + 1) * n] for t in range(n_slots)]
    off = phi_eq.copy()
    for t in range(n_slots):
        off[t * n:(t + 1) * n, t * n:(t + 1) * n] = 0
    if _np.any(off != 0):
        raise _ex.PreconditionError('phi_eq must be block diagonal over slots.')
    return blocks


def second_hop_matrix_form(g: _t.Any, phi_eq: _t.Any, s_tilde: _t.Any) -> _types.CMatrix:
    """
    Noiseless N x T slot observations with Alamouti code matrix M(s_tilde):
    column 1 is Phi_1 G M[:, 0], column 2 is conj(Phi_2) G M[:, 1].
    """
    g = _numerics.as_cmatrix(g, 'g')
    phi_1, phi_2 = slot_blocks(phi_eq, 2)
    m = alamouti_encode(s_tilde)
    return _np.column_stack([phi_1 @ g @ m[:, 0], _np.conj(phi_2) @ g @ m[:, 1]])


def vectorize_slots(r_matrix: _t.Any) -> _types.CVector:
    """Stack slot columns, conjugating the second slot."""
    r_matrix = _numerics.as_cmatrix(r_matrix)
    columns = [r_matrix[:, 0]] + [_np.conj(r_matrix[:, t]) for t in range(1, r_matrix.shape[1])]
    return _np.concatenate(columns)


def combined_channel(chan: ChannelRealization, k: int, encoder: str = 'alamouti') -> _types.CMatrix:
    """D_k = G_eq,k A_k F_k, the NT x N map from source symbols to relay k's stacked output."""
    g_eq = build_equivalent_channel(chan.g_rd[k], encoder).g_eq
    return g_eq @ chan.a_rd[k] @ chan.f_sr[k]


def d_columns(cfg: SystemConfig, chan: ChannelRealization) -> _np.ndarray:
    """Array (n_relays, N, NT) with d[k, j] = column j of D_k."""
    return _np.stack([combined_channel(chan, k, cfg.encoder).T for k in range(cfg.n_relays)])


def noise_transfer_matrix(cfg: SystemConfig, chan: ChannelRealization, codes: AdjustableCodeBank) -> _types.CMatrix:
    """Column j is sum_k Phi[k, j] [G_eq,k A_k]_j, the relay noise gain for symbol j."""
    _check_bank(cfg, codes)
    out = _np.zeros((cfg.nt, cfg.n_antennas), dtype=_np.complex128)
    for k in range(cfg.n_relays):
        ga = build_equivalent_channel(chan.g_rd[k], cfg.encoder).g_eq @ chan.a_rd[k]
        for j in range(cfg.n_antennas):
            out[:, j] += codes.matrices[k, j] @ ga[:, j]
    return out


def effective_signal_matrix(d_cols: _np.ndarray, codes: AdjustableCodeBank) -> _types.CMatrix:
    """NT x N matrix whose column j is sum_k Phi[k, j] d[k, j]."""
    if d_cols.shape[:2] != codes.matrices.shape[:2] or d_cols.shape[2] != codes.dim:
        raise _ex.DimensionError(f'channel columns {d_cols.shape} do not match code bank {codes.matrices.shape}.')
    return _np.einsum('kjab,kjb->aj', codes.matrices, d_cols)


def equivalent_noise_variance(cfg: SystemConfig, chan: ChannelRealization, codes: AdjustableCodeBank) -> float:
    return float(cfg.noise_variance * (1 + _numerics.frobenius_norm(noise_transfer_matrix(cfg, chan, codes)) ** 2))


def generate_sphere_matrix(dim: int, radius: float, rng: _types.Rng) -> _types.CMatrix:
    """
    dim x dim complex matrix drawn uniformly on the Frobenius sphere of the
    given radius (normalized complex Gaussian).
    """
    if dim < 1:
        raise _ex.PreconditionError('dim must be a positive integer.')
    _ex.check_positive(radius, 'radius')
    while True:
        m = _numerics.complex_normal(rng, (dim, dim))
        norm = _numerics.frobenius_norm(m)
        if norm > 0:
            return radius * m / norm


def assemble_received(
    cfg: SystemConfig,
    chan: ChannelRealization,
    codes: AdjustableCodeBank,
    s: _t.Any,
    rng: _types.Rng
) -> ReceivedFrame:
    """
    Destination observation for one symbol vector s.

    The relay part is sum_{k,j} Phi[k, j] d[k, j] s_j plus white noise of
    variance sigma^2 (1 + ||noise transfer||_F^2). With a direct link the
    N-row block H_sd s + n_sd comes first.
    """
    s = _np.asarray(s, dtype=_np.complex128).ravel()
    if s.size != cfg.n_antennas:
        raise _ex.DimensionError(f'expected {cfg.n_antennas} symbols, got {s.size}.')
    d_cols = d_columns(cfg, chan)
    noise_var_eq = equivalent_noise_variance(cfg, chan, codes)
    r = effective_signal_matrix(d_cols, codes) @ s + _numerics.complex_normal(rng, cfg.nt, noise_var_eq)
    h_sd = None
    if cfg.direct_link:
        h_sd = chan.h_sd
        direct = h_sd @ s + _numerics.complex_normal(rng, cfg.n_antennas, cfg.noise_variance)
        r = _np.concatenate([direct, r])
    return ReceivedFrame(r, d_cols, noise_var_eq, cfg.noise_variance, h_sd)


def frame_matrix(frame: ReceivedFrame, codes: AdjustableCodeBank) -> _types.CMatrix:
    """Full L x N noiseless map from s to r for the given destination-side codes."""
    relay = effective_signal_matrix(frame.d_columns, codes)
    if frame.h_sd is None:
        return relay
    return _np.vstack([frame.h_sd, relay])


def received_snr(cfg: SystemConfig, chan: ChannelRealization, codes: AdjustableCodeBank) -> float:
    """
    Received SNR in dB of the relay path:
    ||sum Phi D||_F^2 / (sigma^2 (1 + ||sum Phi G A||_F^2)).

    Returns -inf for a zero signal and +inf for noiseless links.
    """
    signal = _numerics.frobenius_norm(effective_signal_matrix(d_columns(cfg, chan), codes)) ** 2
    if signal == 0:
        return float('-inf')
    noise = equivalent_noise_variance(cfg, chan, codes)
    if noise == 0:
        return float('inf')
    return float(10 * _np.log10(signal / noise))


def _check_bank(cfg: SystemConfig, codes: AdjustableCodeBank) -> None:
    expected = (cfg.n_relays, cfg.n_antennas, cfg.nt, cfg.nt)
    if codes.matrices.shape != expected:
        raise _ex.DimensionError(f'code bank shape {codes.matrices.shape} does not match system {expected}.')
