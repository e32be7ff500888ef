"""
Destination receivers: linear MMSE filters, the MMSE code matrix and the
exhaustive ML detector.
"""
import dataclasses as _dc
import itertools as _itertools
import typing as _t

import numpy as _np

import coopdstc.constellation as _constellation
import coopdstc.exceptions as _ex
import coopdstc.numerics as _numerics
import coopdstc.system as _system
import coopdstc.types as _types


DEFAULT_RIDGE = 1e-6


@_dc.dataclass(frozen=True, eq=False)
class ReceiveFilterBank:
    """filters[j] is w_j, the linear estimator of symbol j (y_j = w_j^H r)."""
    filters: _types.CMatrix

    @classmethod
    def zeros(cls, n_symbols: int, length: int) -> 'ReceiveFilterBank':
        return cls(_np.zeros((n_symbols, length), dtype=_np.complex128))

    def outputs(self, r: _t.Any) -> _types.CVector:
        r = _np.asarray(r, dtype=_np.complex128)
        if r.size != self.filters.shape[1]:
            raise _ex.DimensionError(f'filters have length {self.filters.shape[1]}, r has {r.size}.')
        return self.filters.conj() @ r


@_dc.dataclass(frozen=True, eq=False)
class CandidateBook:
    """All M^N symbol vectors as N x D columns, in lexicographic index order."""
    symbols: _types.CMatrix
    indices: _np.ndarray

    @property
    def size(self) -> int:
        return self.symbols.shape[1]


def build_candidate_book(n_symbols: int, c: _constellation.Constellation = _constellation.QPSK) -> CandidateBook:
    indices = _np.array(list(_itertools.product(range(c.size), repeat=n_symbols)), dtype=_np.int64).T
    return CandidateBook(c.points[indices], indices)


def estimate_correlations(samples: _t.Sequence[_t.Tuple[_t.Any, _t.Any]], j: int) -> _t.Tuple[_types.CMatrix, _types.CVector]:
    """
    Sample estimates R = mean(r r^H) and p = mean(r conj(s_j)).

    Parameters
    ----------
    samples : sequence of (r, s) pairs
    j : int
        Symbol index whose cross-correlation is estimated.
    """
    if not samples:
        raise _ex.PreconditionError('cannot estimate correlations from zero samples.')
    rs = _np.array([_np.asarray(r, dtype=_np.complex128).ravel() for r, _ in samples])
    ss = _np.array([_np.asarray(s, dtype=_np.complex128).ravel()[j] for _, s in samples])
    r_mat = rs.T @ rs.conj() / len(samples)
    p = rs.T @ ss.conj() / len(samples)
    return r_mat, p


def analytic_correlations(h_full: _t.Any, noise_diagonal: _t.Any, j: int,
                          signal_power: float = 1.0) -> _t.Tuple[_types.CMatrix, _types.CVector]:
    """Known-CSI R = sigma_s^2 H H^H + diag(noise) and p = sigma_s^2 h_j."""
    h = _numerics.as_cmatrix(h_full, 'h_full')
    r_mat = signal_power * h @ h.conj().T + _np.diag(_np.asarray(noise_diagonal, dtype=_np.float64))
    return r_mat, signal_power * h[:, j]


def mmse_filter(r_mat: _t.Any, p: _t.Any) -> _types.CVector:
    """
    Wiener solution w = R^{-1} p.

    Raises NumericalFailure when R is not positive definite.
    """
    w = _numerics.solve_hermitian_pd(r_mat, p)
    return _np.asarray(w).ravel()


def known_csi_filters(h_full: _t.Any, noise_diagonal: _t.Any, signal_power: float = 1.0) -> ReceiveFilterBank:
    h = _numerics.as_cmatrix(h_full, 'h_full')
    filters = [mmse_filter(*analytic_correlations(h, noise_diagonal, j, signal_power)) for j in range(h.shape[1])]
    return ReceiveFilterBank(_np.array(filters))


def estimate_code_correlations(
    samples: _t.Sequence[_t.Tuple[complex, complex, _t.Any, _t.Any]]
) -> _t.Tuple[_types.CMatrix, _types.CMatrix]:
    """
    Sample estimates of R~ = E[s_j s~_j w w^H] and P~ = E[s_j s~_j w g^H].

    Each sample is (s_j, s~_j, w, g) with w the relay part of the receive
    filter and g the matching column of the equivalent relay channel.
    """
    if not samples:
        raise _ex.PreconditionError('cannot estimate correlations from zero samples.')
    r_acc: _t.Any = 0
    p_acc: _t.Any = 0
    for s_j, s_tilde_j, w, g in samples:
        w = _np.asarray(w, dtype=_np.complex128).ravel()
        g = _np.asarray(g, dtype=_np.complex128).ravel()
        r_acc = r_acc + s_j * s_tilde_j * _np.outer(w, w.conj())
        p_acc = p_acc + s_j * s_tilde_j * _np.outer(w, g.conj())
    return r_acc / len(samples), p_acc / len(samples)


def mmse_code_matrix(
    r_tilde: _t.Any,
    p_tilde: _t.Any,
    ridge: float = DEFAULT_RIDGE,
    relay_power: _t.Optional[float] = None
) -> _types.CMatrix:
    """
    Code matrix minimizing the MSE: solves (R~ + ridge I) Phi = P~.

    When relay_power is given the result is scaled to that Frobenius power.
    """
    _ex.check_non_negative(ridge, 'ridge')
    r_tilde = _numerics.as_cmatrix(r_tilde, 'r_tilde')
    _ex.check_square(r_tilde, 'r_tilde')
    phi = _numerics.as_cmatrix(_numerics.solve(r_tilde + ridge * _np.eye(r_tilde.shape[0]), p_tilde))
    if relay_power is not None:
        norm = _numerics.frobenius_norm(phi)
        if norm == 0:
            raise _ex.DegenerateInputError('zero code matrix cannot be scaled to the relay power.')
        phi = phi * _np.sqrt(relay_power) / norm
    return phi


def ml_metrics(r: _t.Any, h_full: _t.Any, book: CandidateBook) -> _types.RVector:
    """||r - H s_d||^2 for every candidate d."""
    r = _np.asarray(r, dtype=_np.complex128).ravel()
    h = _numerics.as_cmatrix(h_full, 'h_full')
    if h.shape[0] != r.size or h.shape[1] != book.symbols.shape[0]:
        raise _ex.DimensionError(f'channel {h.shape} does not match r ({r.size}) and candidates ({book.symbols.shape[0]}).')
    return _np.sum(_np.abs(r[:, None] - h @ book.symbols) ** 2, axis=0)


def ml_detect(frame: _system.ReceivedFrame, codes: _system.AdjustableCodeBank,
              book: CandidateBook) -> _t.Tuple[int, _types.CVector]:
    """
    Exhaustive ML detection over the candidate book.

    Returns the first minimizing candidate index and its symbol vector.
    """
    if book.size == 0:
        raise _ex.PreconditionError('empty candidate book.')
    metrics = ml_metrics(frame.r, _system.frame_matrix(frame, codes), book)
    best = int(_np.argmin(metrics))
    return best, book.symbols[:, best]


def detect_linear(r: _t.Any, filters: ReceiveFilterBank,
                  c: _constellation.Constellation = _constellation.QPSK) -> _types.IndexArray:
    """Slice every linear estimate y_j = w_j^H r."""
    return _constellation.slice_indices(filters.outputs(r), c)
