"""Spectral factorization by Bauer's block-Toeplitz Cholesky method and
per-frequency spectral roots."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DataError, FactorizationError, NumericError, ShapeError
from .series import AcvfSeq
from .spectral import FreqGrid, SpectralGrid, ct, lag_window_spectrum

RECON_WARN_REL = 1e-3
MAX_ROOT_COND = 1e10


@dataclass
class VmaFactor:
    """Moving-average spectral factor Theta(z) Sigma^{1/2}.

    theta stacks Theta_0..Theta_q with Theta_0 = I; sigma is the innovation
    covariance. recon_error is the worst relative Frobenius gap between
    Theta(z) Sigma Theta(z)^* and the input spectrum over the check grid.
    """

    theta: np.ndarray  # (q + 1, n, n)
    sigma: np.ndarray  # (n, n)
    m: int
    recon_error: float

    def __post_init__(self):
        t = np.asarray(self.theta, dtype=float)
        if t.ndim != 3 or t.shape[1] != t.shape[2]:
            raise ShapeError("theta must be a stack of square matrices")
        if np.max(np.abs(t[0] - np.eye(t.shape[1]))) > 1e-12:
            raise DataError("leading MA coefficient must be the identity")
        self.theta = t
        self.sigma = np.asarray(self.sigma, dtype=float)

    @property
    def n(self) -> int:
        return self.theta.shape[1]

    @property
    def q(self) -> int:
        return self.theta.shape[0] - 1

    def frf(self, grid: FreqGrid) -> np.ndarray:
        """Theta(e^{-i lambda_j}) stacked over the grid."""
        zpow = np.exp(
            -1j * np.outer(grid.lambdas, np.arange(self.q + 1))
        )  # (N, q+1)
        return np.einsum("jk,kab->jab", zpow, self.theta.astype(complex))

    def to_model_doc(self) -> dict:
        """Serialize as a moving-average model document (`ma` + `sigma`)."""
        return {
            "ma": self.theta[1:].tolist(),
            "sigma": self.sigma.tolist(),
        }


@dataclass
class RootGrid:
    """Per-frequency spectral roots S^+(lambda_j) and their inverses."""

    grid: FreqGrid
    roots: np.ndarray  # (N, n, n) complex
    inverses: np.ndarray  # (N, n, n) complex
    max_cond: float

    @property
    def n(self) -> int:
        return self.roots.shape[1]

    def implied_spectrum(self) -> SpectralGrid:
        """The spectrum these roots factor exactly: S_j = root_j root_j^*."""
        mats = self.roots @ ct(self.roots)
        mats = 0.5 * (mats + ct(mats))
        return SpectralGrid(self.grid, mats, "marginal")


def _truncated_spectrum(acvf: AcvfSeq, grid: FreqGrid) -> np.ndarray:
    weights = np.ones(acvf.maxlag + 1)
    mats = lag_window_spectrum(acvf.gamma, weights, grid)
    return 0.5 * (mats + ct(mats))


def truncated_spectrum_min_eig(acvf: AcvfSeq, grid: FreqGrid | None = None) -> float:
    """Smallest eigenvalue of sum_{|h|<=q} gamma(h) e^{-i lambda h} on the grid."""
    mats = _truncated_spectrum(acvf, grid or FreqGrid(512))
    return float(np.linalg.eigvalsh(mats).min())


def _banded_toeplitz_cholesky(acvf: AcvfSeq, m: int) -> np.ndarray:
    """Cholesky factor band of the block-Toeplitz covariance of m stacked
    observations; the matrix is block-banded with block bandwidth q."""
    n, q = acvf.n, acvf.maxlag
    qb = min(q, m - 1)
    bw = qb * n + (n - 1)  # scalar lower bandwidth
    size = m * n
    ab = np.zeros((bw + 1, size))
    for h in range(qb + 1):
        cols_max = (m - h) * n  # block row i+h exists while i < m - h
        for a in range(n):
            for b in range(n):
                off = h * n + a - b
                if off < 0:
                    continue
                ab[off, b:cols_max:n] = acvf.gamma[h][a, b]
    try:
        return scipy.linalg.cholesky_banded(ab, lower=True)
    except np.linalg.LinAlgError:
        raise FactorizationError(
            "block-Toeplitz matrix not positive definite; apply pd_truncate "
            "to the spectral estimate or reduce the lag budget"
        ) from None


def bauer_factorize(
    acvf: AcvfSeq,
    m: int | None = None,
    grid: FreqGrid | None = None,
    check_pd: bool = True,
) -> VmaFactor:
    """Factor sum_{|h|<=q} gamma(h) e^{-i lambda h} as Theta(z) Sigma Theta(z)^*.

    Builds the mn x mn block-Toeplitz covariance of a length-m sample,
    Cholesky-factors it, and reads the moving-average coefficients off the
    last block row, normalized so Theta_0 = I with the residual scale folded
    into Sigma. Convergence in m is geometric; the reconstruction identity
    is evaluated on ``grid`` and reported as recon_error.
    """
    q = acvf.maxlag
    if q == 0:
        sigma = 0.5 * (acvf.gamma[0] + acvf.gamma[0].T)
        try:
            np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError:
            raise FactorizationError(
                "lag-0 covariance not positive definite; apply pd_truncate "
                "to the spectral estimate first"
            ) from None
        return VmaFactor(np.eye(acvf.n)[np.newaxis], sigma, m=1, recon_error=0.0)
    if m is None:
        m = min(40 * q, 2000)
        m = max(m, 5 * q)
    if m < 5 * q:
        raise DataError(f"Toeplitz size m = {m} must be at least 5q = {5 * q}")
    grid = grid or FreqGrid(512)
    if check_pd:
        mineig = truncated_spectrum_min_eig(acvf, grid)
        if mineig <= 0:
            raise FactorizationError(
                f"lag-truncated spectrum has min eigenvalue {mineig:.3e} <= 0 "
                "on the grid; apply pd_truncate (or raise the eigenvalue "
                "floor) first"
            )
    band = _banded_toeplitz_cholesky(acvf, m)
    n = acvf.n
    # L[row, col] = band[row - col, col]; take the last block row.
    blocks = np.empty((q + 1, n, n))
    for j in range(q + 1):
        for a in range(n):
            for b in range(n):
                blocks[j, a, b] = band[j * n + a - b, (m - 1 - j) * n + b] if j * n + a - b >= 0 else 0.0
    b0 = blocks[0]
    theta = np.linalg.solve(b0.T, blocks.transpose(0, 2, 1)).transpose(0, 2, 1)
    theta[0] = np.eye(n)
    sigma = b0 @ b0.T
    sigma = 0.5 * (sigma + sigma.T)
    factor = VmaFactor(theta, sigma, m=m, recon_error=0.0)
    target = _truncated_spectrum(acvf, grid)
    frf = factor.frf(grid)
    recon = frf @ sigma @ ct(frf)
    num = np.linalg.norm(recon - target, axis=(1, 2))
    den = np.linalg.norm(target, axis=(1, 2))
    factor.recon_error = float(np.max(num / den))
    if factor.recon_error > RECON_WARN_REL:
        warnings.warn(
            f"factorization reconstruction error {factor.recon_error:.2e}; "
            "consider a larger Toeplitz size m",
            RuntimeWarning,
        )
    return factor


def spectral_root_grid(f: VmaFactor, grid: FreqGrid) -> RootGrid:
    """Evaluate roots S^+(lambda_j) = Theta(e^{-i lambda_j}) Sigma^{1/2}.

    Sigma^{1/2} is the symmetric eigendecomposition square root, which keeps
    the roots conjugate-symmetric and downstream filter coefficients real.
    """
    w, v = np.linalg.eigh(f.sigma)
    if w.min() <= 0:
        raise FactorizationError("innovation covariance not positive definite")
    sig_half = (v * np.sqrt(w)) @ v.T
    roots = f.frf(grid) @ sig_half
    conds = np.linalg.cond(roots)
    worst = int(np.argmax(conds))
    if conds[worst] > MAX_ROOT_COND:
        raise NumericError(
            f"spectral root nearly singular at frequency index {worst} "
            f"(condition number {conds[worst]:.2e})"
        )
    inverses = np.linalg.inv(roots)
    return RootGrid(grid, roots, inverses, max_cond=float(conds[worst]))
