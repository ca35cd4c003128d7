"""Spectrum-preserving matrix all-pass filters: cepstral parameters, the
unitary frequency response they generate, conjugation by spectral roots,
verification, and inversion to time-domain coefficients."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericError, ShapeError
from .factorize import RootGrid
from .series import MapFilter
from .spectral import FreqGrid, SpectralGrid, ct

COEFF_TAIL_TOL = 1e-8
IMAG_RESIDUE_TOL = 1e-6


@dataclass
class CepstralParams:
    """Free parameter vector for the truncated cepstral unitary class.

    Packing order (fixed; serialized results and optimizer restarts depend
    on it): the strict lower triangle of the skew-symmetric lag-0 matrix in
    column-major order, then each lag-k matrix (k = 1..r) row-major. Total
    length r*n^2 + n*(n-1)/2. Negative-lag matrices are never stored; they
    are the negative transposes of the positive lags.
    """

    n: int
    r: int
    theta: np.ndarray

    def __post_init__(self):
        if self.n < 1 or self.r < 0:
            raise DataError("need dimension n >= 1 and truncation r >= 0")
        self.theta = np.asarray(self.theta, dtype=float).ravel()
        want = self.n_params(self.n, self.r)
        if self.theta.size != want:
            raise ShapeError(
                f"parameter vector of length {self.theta.size}; n={self.n}, "
                f"r={self.r} needs {want}"
            )

    @staticmethod
    def n_params(n: int, r: int) -> int:
        return r * n * n + n * (n - 1) // 2

    @classmethod
    def zeros(cls, n: int, r: int) -> "CepstralParams":
        return cls(n, r, np.zeros(cls.n_params(n, r)))


def _lower_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Strict lower-triangle indices in column-major order."""
    rows, cols = [], []
    for j in range(n - 1):
        for i in range(j + 1, n):
            rows.append(i)
            cols.append(j)
    return np.array(rows, dtype=int), np.array(cols, dtype=int)


def unpack(params: CepstralParams) -> tuple[np.ndarray, np.ndarray]:
    """Parameter vector -> (skew-symmetric lag-0 matrix, lag 1..r stack)."""
    n, r = params.n, params.r
    nskew = n * (n - 1) // 2
    rows, cols = _lower_indices(n)
    lower = np.zeros((n, n))
    if nskew:
        lower[rows, cols] = params.theta[:nskew]
    omega0 = lower - lower.T
    omegas = params.theta[nskew:].reshape(r, n, n) if r else np.zeros((0, n, n))
    return omega0, omegas


def pack(omega0: np.ndarray, omegas: np.ndarray) -> CepstralParams:
    """Inverse of `unpack`; omega0 must be skew-symmetric."""
    omega0 = np.asarray(omega0, dtype=float)
    omegas = np.asarray(omegas, dtype=float)
    if omegas.ndim == 2:
        omegas = omegas[np.newaxis]
    if omegas.size == 0:
        omegas = omegas.reshape(0, *omega0.shape)
    n = omega0.shape[0]
    if np.max(np.abs(omega0 + omega0.T)) > 1e-10:
        raise DataError("lag-0 cepstral matrix must be skew-symmetric")
    rows, cols = _lower_indices(n)
    head = omega0[rows, cols] if rows.size else np.empty(0)
    return CepstralParams(
        n, omegas.shape[0], np.concatenate([head, omegas.ravel()])
    )


def _omega_stack(params: CepstralParams, lambdas: np.ndarray) -> np.ndarray:
    """Evaluate the truncated cepstral Laurent series at z = e^{-i lambda}.

    Output is skew-Hermitian at every frequency by construction.
    """
    omega0, omegas = unpack(params)
    N = lambdas.size
    out = np.broadcast_to(
        omega0.astype(complex), (N, params.n, params.n)
    ).copy()
    if params.r:
        k = np.arange(1, params.r + 1)
        zpow = np.exp(-1j * np.outer(lambdas, k))  # (N, r)
        out += np.einsum("jk,kab->jab", zpow, omegas)
        out -= np.einsum("jk,kba->jab", zpow.conj(), omegas)
    return out


def _expm_skew(omega: np.ndarray) -> np.ndarray:
    """Unitary exponential of a stack of skew-Hermitian matrices.

    Diagonalizes the Hermitian matrix -i*omega, so the result is unitary to
    eigensolver accuracy.
    """
    h = -1j * omega
    h = 0.5 * (h + ct(h))
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * w)[..., None, :]) @ ct(v)


def unitary_grid(params: CepstralParams, grid: FreqGrid) -> SpectralGrid:
    """The unitary frequency response U(e^{-i lambda_j}) over a grid."""
    mats = _expm_skew(_omega_stack(params, grid.lambdas))
    return SpectralGrid(grid, mats, "frf")


def unitary_at(params: CepstralParams, lam: float) -> np.ndarray:
    """The unitary frequency response at one frequency."""
    return _expm_skew(_omega_stack(params, np.array([float(lam)])))[0]


def map_frf(params: CepstralParams, roots: RootGrid) -> SpectralGrid:
    """All-pass frequency response root_j U_j root_j^{-1} on the grid."""
    if roots.n != params.n:
        raise ShapeError(
            f"roots of dimension {roots.n} vs parameters for n={params.n}"
        )
    u = _expm_skew(_omega_stack(params, roots.grid.lambdas))
    return SpectralGrid(roots.grid, roots.roots @ u @ roots.inverses, "frf")


def verify_smap(frf: SpectralGrid, s: SpectralGrid) -> float:
    """Worst relative Frobenius error of Psi S Psi^* = S over the grid."""
    if frf.grid.N != s.grid.N or frf.n != s.n:
        raise ShapeError("frequency response and spectrum grids do not match")
    lhs = frf.mats @ s.mats @ ct(frf.mats)
    num = np.linalg.norm(lhs - s.mats, axis=(1, 2))
    den = np.linalg.norm(s.mats, axis=(1, 2))
    return float(np.max(num / den))


def frf_to_coeffs(frf: SpectralGrid, tail_tol: float = COEFF_TAIL_TOL) -> MapFilter:
    """Fourier-invert a frequency response to two-sided real coefficients.

    Coefficients are computed for k = -N/2+1..N/2 and truncated to the
    smallest halfwidth M whose dropped tail is below tail_tol in Frobenius
    norm (capped at N/2 - 1); the largest dropped norm is recorded.
    A conjugate-symmetric response yields real coefficients; a larger
    imaginary residue indicates a corrupted response and raises.
    """
    N = frf.grid.N
    # lambda_j = -pi + 2*pi*j/N makes the inversion an ifft up to (-1)^k.
    raw = np.fft.ifft(frf.mats, axis=0)
    signs = np.where(np.arange(N) % 2 == 0, 1.0, -1.0)
    raw = raw * signs[:, None, None]
    imag_res = float(np.max(np.abs(raw.imag)))
    if imag_res > IMAG_RESIDUE_TOL:
        raise NumericError(
            f"imaginary residue {imag_res:.2e} in filter coefficients; the "
            "frequency response is not conjugate-symmetric"
        )
    lags = np.where(np.arange(N) <= N // 2, np.arange(N), np.arange(N) - N)
    coeff = {int(k): raw[j].real for j, k in enumerate(lags)}
    norms = {k: float(np.linalg.norm(c)) for k, c in coeff.items()}
    cap = N // 2 - 1
    large = [abs(k) for k, v in norms.items() if v >= tail_tol]
    M = min(max(large, default=0), cap)
    tail = [v for k, v in norms.items() if abs(k) > M]
    tail_norm = max(tail, default=0.0)
    if tail_norm >= tail_tol:
        warnings.warn(
            f"filter truncated at the grid half-size with tail norm "
            f"{tail_norm:.2e} >= {tail_tol:.0e}; consider a larger grid",
            RuntimeWarning,
        )
    n = frf.n
    stack = np.stack([coeff[k] for k in range(-M, M + 1)]) if M else coeff[0][np.newaxis]
    return MapFilter(stack.reshape(2 * M + 1, n, n), M, tail_norm)


def filter_to_doc(
    f: MapFilter,
    smap_error: float | None = None,
    params: CepstralParams | None = None,
) -> dict:
    """JSON document for a fitted filter (coefficients row-major, k=-M..M)."""
    doc = {
        "halfwidth": f.halfwidth,
        "coeffs": f.coeffs.tolist(),
        "tail_norm": f.tail_norm,
        "smap_error": smap_error,
        "theta": None if params is None else params.theta.tolist(),
        "r": None if params is None else params.r,
    }
    return doc


def filter_from_doc(doc: dict) -> MapFilter:
    try:
        coeffs = np.asarray(doc["coeffs"], dtype=float)
        halfwidth = int(doc["halfwidth"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"bad filter document: {exc}") from exc
    return MapFilter(coeffs, halfwidth, float(doc.get("tail_norm", 0.0)))


def save_filter(path, f: MapFilter, **meta) -> None:
    with open(path, "w") as fh:
        json.dump(filter_to_doc(f, **meta), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_filter(path) -> MapFilter:
    with open(path) as fh:
        return filter_from_doc(json.load(fh))
