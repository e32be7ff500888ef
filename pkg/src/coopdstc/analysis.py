"""
Pairwise error probability analysis of adaptive distributed space-time
codes: Chernoff-type upper bounds, moment generating functions, exact
PEP by Gauss-Chebyshev quadrature and feedback-free code selection.
"""
import dataclasses as _dc
import itertools as _itertools
import typing as _t

import numpy as _np
import scipy.special as _special

import coopdstc.constellation as _constellation
import coopdstc.exceptions as _ex
import coopdstc.numerics as _numerics
import coopdstc.system as _system
import coopdstc.types as _types


EIG_TOL = 1e-10
PROBABILITY_TOL = 1e-9
DET_FLOOR = 1e-300
# MGF scale constant a (and the selection constant c) of the exact PEP integral
MGF_CONSTANT = 0.25
MC_CHUNK = 50_000


@_dc.dataclass(frozen=True, eq=False)
class CodewordPair:
    """Two codewords, their difference and the eigenvalues of Delta^H Delta (descending)."""
    c1: _types.CMatrix
    c2: _types.CMatrix
    delta: _types.CMatrix
    eigenvalues: _types.RVector


def codeword_pair(c1: _t.Any, c2: _t.Any) -> CodewordPair:
    c1 = _numerics.as_cmatrix(c1, 'c1')
    c2 = _numerics.as_cmatrix(c2, 'c2')
    if c1.shape != c2.shape:
        raise _ex.DimensionError(f'codewords must have equal shapes, got {c1.shape} and {c2.shape}.')
    delta = c1 - c2
    return CodewordPair(c1, c2, delta, delta_eigenvalues(delta))


def alamouti_pairs(c: _constellation.Constellation = _constellation.QPSK) -> _t.List[CodewordPair]:
    """Every ordered pair of distinct Alamouti codewords over the constellation."""
    words = [_system.alamouti_encode(c.points[list(i)]) for i in _itertools.product(range(c.size), repeat=2)]
    return [codeword_pair(a, b) for a, b in _itertools.permutations(words, 2)]


def delta_eigenvalues(delta: _t.Any, outer: bool = False) -> _types.RVector:
    """Eigenvalues of Delta^H Delta, or of Delta Delta^H when outer, clipped at zero."""
    delta = _numerics.as_cmatrix(delta, 'delta')
    gram = delta @ delta.conj().T if outer else delta.conj().T @ delta
    return _np.clip(_numerics.hermitian_eig(gram).eigenvalues, 0, None)


def _check_eigenvalues(values: _t.Any, name: str) -> _types.RVector:
    values = _np.asarray(values, dtype=_np.float64).ravel()
    if _np.any(values < -EIG_TOL):
        raise _ex.PreconditionError(f'{name} must be non-negative.')
    return _np.sort(_np.clip(values, 0, None))[::-1]


def pep_bound_adaptive(eig_phi: _t.Any, eig_c: _t.Any, snr: float, n: int, t: int) -> float:
    """
    Upper bound 1 / prod_{i<n} (1 + snr lambda_phi,i lambda_c,i / 4)^(n t).

    Both eigenvalue lists are sorted descending and paired index by index
    over the first n entries; missing entries count as zero. The bound is a
    Chernoff bound of the averaged pairwise error when Phi^H Phi is a
    multiple of the identity; for other code matrices it only uses the n
    largest eigenvalues of Phi^H Phi.

    Examples
    --------
    >>> pep_bound_adaptive([1, 1], [0, 0], 10.0, 2, 2)
    1.0
    >>> pep_bound_adaptive([1, 1], [0.4, 0], 10.0, 2, 2)
    0.0625
    """
    _ex.check_non_negative(snr, 'snr')
    if n < 1 or t < 1:
        raise _ex.PreconditionError('n and t must be positive integers.')
    phi = _check_eigenvalues(eig_phi, 'eig_phi')
    c = _check_eigenvalues(eig_c, 'eig_c')
    phi = _np.pad(phi, (0, max(0, n - phi.size)))[:n]
    c = _np.pad(c, (0, max(0, n - c.size)))[:n]
    return float(_np.prod((1 + snr * phi * c / 4) ** (-(n * t))))


def pep_bound_traditional(eig_c: _t.Any, snr: float, n: int, t: int) -> float:
    """The adaptive bound with Phi = I."""
    return pep_bound_adaptive(_np.ones(n), eig_c, snr, n, t)


def union_bound(pair_bounds: _t.Iterable[float]) -> float:
    return float(sum(pair_bounds))


def gaussian_q(x: _t.Any) -> _t.Any:
    return 0.5 * _special.erfc(_np.asarray(x) / _np.sqrt(2))


def conditional_pep(phi: _t.Any, channel: _t.Any, delta: _t.Any, snr: float) -> float:
    """Q(sqrt(snr / 2) ||Phi D Delta||_F) for a fixed channel D."""
    product = _numerics.as_cmatrix(phi) @ _numerics.as_cmatrix(channel) @ _numerics.as_cmatrix(delta)
    return float(gaussian_q(_np.sqrt(snr / 2) * _numerics.frobenius_norm(product)))


def expand_eigenvalues(lam: _t.Any, dim: int) -> _types.RVector:
    """Repeat an eigenvalue list over slots (I_T kron Lambda) to reach dim entries."""
    lam = _np.asarray(lam, dtype=_np.float64)
    if lam.ndim == 2:
        lam = _np.diag(lam).real
    if lam.size == 0 or dim % lam.size:
        raise _ex.DimensionError(f'{lam.size} eigenvalues cannot be expanded to dimension {dim}.')
    return _np.tile(lam, dim // lam.size)


def mgf_theta(phi: _t.Any, lam: _t.Any, c: complex, n0: float) -> complex:
    """
    det(I + c / (2 sqrt(2 N0)) Phi Lambda Phi^H)^-1

    lam is the eigenvalue list (or diagonal matrix) of Delta Delta^H and is
    expanded over slots to Phi's dimension.
    """
    _ex.check_positive(n0, 'n0')
    phi = _numerics.as_cmatrix(phi, 'phi')
    _ex.check_square(phi, 'phi')
    lam = expand_eigenvalues(lam, phi.shape[1])
    scale = c / (2 * _np.sqrt(2 * n0))
    m = _np.eye(phi.shape[0]) + scale * (phi * lam[None, :]) @ phi.conj().T
    det = _numerics.determinant(m)
    if abs(det) < DET_FLOOR:
        raise _ex.NumericalFailure('MGF determinant vanished.')
    return 1 / det


def quadrature_nodes(terms: int, a: float = MGF_CONSTANT) -> _types.CVector:
    """c_i = a (1 + j tan((2 i - 1) pi / (4 J))), i = 1..J."""
    if terms < 1:
        raise _ex.PreconditionError('quadrature needs at least one term.')
    angles = (2 * _np.arange(1, terms + 1) - 1) * _np.pi / (4 * terms)
    return a * (1 + 1j * _np.tan(angles))


def exact_pep(phi: _t.Any, delta: _t.Any, n0: float, terms: int = 64, a: float = MGF_CONSTANT) -> float:
    """
    Exact pairwise error probability averaged over the channel:

    P = 1/(2J) sum_i [Re Theta(c_i) + tan(theta_i) Im Theta(c_i)]

    A zero difference matrix gives 1/2.
    """
    lam = delta_eigenvalues(delta, outer=True)
    nodes = quadrature_nodes(terms, a)
    total = 0.0
    for node in nodes:
        theta = mgf_theta(phi, lam, node, n0)
        total += theta.real + (node.imag / a) * theta.imag
    p = total / (2 * terms)
    if p < -PROBABILITY_TOL or p > 1 + PROBABILITY_TOL:
        raise _ex.NumericalFailure(f'quadrature produced probability {p}.')
    return float(min(max(p, 0.0), 1.0))


def selection_scores(candidates: _t.Sequence[_t.Any], delta: _t.Any, n0: float, c: float = MGF_CONSTANT) -> _types.RVector:
    """|det(I + c / (2 sqrt(2 N0)) Phi Lambda Phi^H)| for every candidate."""
    lam = delta_eigenvalues(delta, outer=True)
    return _np.array([1 / abs(mgf_theta(phi, lam, c, n0)) for phi in candidates])


def fd_armo_select(candidates: _t.Sequence[_t.Any], delta: _t.Any, n0: float, c: float = MGF_CONSTANT,
                   relay_power: _t.Optional[float] = None) -> _t.Tuple[int, _types.CMatrix]:
    """
    Pick the candidate code matrix with the largest determinant criterion.

    Ties go to the first candidate. When relay_power is given every
    candidate must respect tr(Phi Phi^H) <= relay_power.
    """
    if len(candidates) == 0:
        raise _ex.PreconditionError('candidate set is empty.')
    if relay_power is not None:
        for i, phi in enumerate(candidates):
            if _numerics.frobenius_norm(phi) ** 2 > relay_power * (1 + 1e-9):
                raise _ex.PreconditionError(f'candidate {i} exceeds the relay power.')
    scores = selection_scores(candidates, delta, n0, c)
    best = int(_np.argmax(scores))
    return best, _numerics.as_cmatrix(candidates[best])


def monte_carlo_pep(phi: _t.Any, pair: CodewordPair, snr: float, trials: int, rng: _types.Rng) -> float:
    """
    Fraction of trials in which c2 is closer than c1 to R = Phi H c1 + W,
    with H Rayleigh (Phi columns x codeword rows) and W of variance 1/snr.
    """
    _ex.check_positive(snr, 'snr')
    if trials < 1:
        raise _ex.PreconditionError('trials must be positive.')
    phi = _numerics.as_cmatrix(phi, 'phi')
    n_rows, n_cols = phi.shape[1], pair.c1.shape[0]
    errors = 0
    remaining = trials
    while remaining:
        batch = min(remaining, MC_CHUNK)
        h = _numerics.complex_normal(rng, (batch, n_rows, n_cols))
        noise = _numerics.complex_normal(rng, (batch, phi.shape[0], pair.c1.shape[1]), 1 / snr)
        x1 = phi @ h @ pair.c1
        x2 = phi @ h @ pair.c2
        r = x1 + noise
        d1 = _np.sum(_np.abs(r - x1) ** 2, axis=(1, 2))
        d2 = _np.sum(_np.abs(r - x2) ** 2, axis=(1, 2))
        errors += int(_np.count_nonzero(d2 < d1))
        remaining -= batch
    return errors / trials
