"""
Dense eigenvalue solver for the small non-Hermitian matrices of this project (n <= 8).

Balancing and Hessenberg reduction come from scipy.linalg; the eigenvalues are then extracted with
single-shift complex QR sweeps (Wilkinson shift, Givens rotations) and deflation of negligible
subdiagonal entries.
"""
import logging

import numpy as np
import numpy.typing as npt
from scipy.linalg import hessenberg, matrix_balance

from base.errors import ConvergenceError, NonFiniteStateError

MAX_DIMENSION = 8
ITERATIONS_PER_DIMENSION = 100
# An exceptional (ad hoc) shift every this many sweeps breaks rare QR cycles.
_EXCEPTIONAL_SHIFT_PERIOD = 11

_EPS = float(np.finfo(np.float64).eps)


def _givens(x: complex, y: complex) -> tuple[float, complex]:
    """(c, s) with [[c, s], [-conj(s), c]] @ [x, y] = [r, 0]."""
    if y == 0:
        return 1.0, 0j
    if x == 0:
        return 0.0, np.conj(y) / abs(y)
    r = np.hypot(abs(x), abs(y))
    return abs(x) / r, (x / abs(x)) * np.conj(y) / r


def _wilkinson_shift(block: npt.NDArray[np.complex128]) -> complex:
    a, b, c, d = block[0, 0], block[0, 1], block[1, 0], block[1, 1]
    half_trace = (a + d) / 2
    disc = np.sqrt(((a - d) / 2) ** 2 + b * c)
    mu1, mu2 = half_trace + disc, half_trace - disc
    return complex(mu1 if abs(mu1 - d) <= abs(mu2 - d) else mu2)


def _qr_sweep(h: npt.NDArray[np.complex128], lo: int, hi: int, shift: complex) -> None:
    """One explicit shifted QR step on the active block h[lo:hi+1, lo:hi+1], in place."""
    block = h[lo:hi + 1, lo:hi + 1]
    size = block.shape[0]
    block -= shift * np.eye(size)
    rotations = []
    for i in range(size - 1):
        c, s = _givens(block[i, i], block[i + 1, i])
        top = block[i, :].copy()
        bottom = block[i + 1, :].copy()
        block[i, :] = c * top + s * bottom
        block[i + 1, :] = -np.conj(s) * top + c * bottom
        rotations.append((c, s))
    for i, (c, s) in enumerate(rotations):
        left = block[:, i].copy()
        right = block[:, i + 1].copy()
        block[:, i] = c * left + np.conj(s) * right
        block[:, i + 1] = -s * left + c * right
    block += shift * np.eye(size)


def _negligible(h: npt.NDArray[np.complex128], i: int, scale: float) -> bool:
    reference = abs(h[i - 1, i - 1]) + abs(h[i, i])
    if reference == 0:
        reference = scale
    return abs(h[i, i - 1]) <= _EPS * reference


def _close_under_conjugation(values: npt.NDArray[np.complex128]) -> npt.NDArray[np.complex128]:
    """Pair eigenvalues of a real matrix with their conjugates so the returned set is exactly closed."""
    remaining = list(values)
    result: list[complex] = []
    while remaining:
        lam = remaining.pop(0)
        if remaining:
            distances = [abs(mu - np.conj(lam)) for mu in remaining]
            j = int(np.argmin(distances))
            if distances[j] < abs(lam - np.conj(lam)):
                mu = remaining.pop(j)
                mean = (lam + np.conj(mu)) / 2
                result.extend([mean, np.conj(mean)])
                continue
        result.append(complex(lam.real, 0.0))
    return np.array(result, dtype=np.complex128)


def eigen_numeric(matrix: npt.ArrayLike) -> npt.NDArray[np.complex128]:
    """All eigenvalues (with multiplicity) of a dense n x n matrix, n <= 8."""
    a = np.array(matrix)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"Expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n > MAX_DIMENSION:
        raise ValueError(f"eigen_numeric handles at most {MAX_DIMENSION}x{MAX_DIMENSION} matrices, got {n}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteStateError("Matrix has non-finite entries")
    real_input = not np.iscomplexobj(a) or not np.any(a.imag)
    if n == 0:
        return np.zeros(0, dtype=np.complex128)

    balanced, _ = matrix_balance(a.astype(np.complex128), permute=False)
    h = np.array(hessenberg(balanced), dtype=np.complex128)
    scale = float(np.linalg.norm(h)) or 1.0

    cap = ITERATIONS_PER_DIMENSION * n
    iterations = 0
    hi = n - 1
    while hi > 0:
        lo = hi
        while lo > 0 and not _negligible(h, lo, scale):
            lo -= 1
        if lo > 0:
            h[lo, lo - 1] = 0
        if lo == hi:
            hi -= 1
            continue
        if iterations >= cap:
            raise ConvergenceError(f"QR iteration did not converge within {cap} sweeps")
        iterations += 1
        if iterations % _EXCEPTIONAL_SHIFT_PERIOD == 0:
            shift = complex(h[hi, hi] + abs(h[hi, hi - 1]))
        else:
            shift = _wilkinson_shift(h[hi - 1:hi + 1, hi - 1:hi + 1])
        _qr_sweep(h, lo, hi, shift)

    logging.debug(f"eigen_numeric: {n}x{n} converged after {iterations} sweeps")
    values = np.diag(h).copy()
    if real_input:
        values = _close_under_conjugation(values)
    return values
