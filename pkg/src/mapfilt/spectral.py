"""Frequency grid, spectral matrix container, positive-definite flat-top
spectral estimation, and frequency-domain conditioning."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConditioningError, DataError, ShapeError
from .series import AcvfSeq

GRID_KINDS = ("joint", "marginal", "conditional", "root", "frf")


def ct(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose over the trailing two axes."""
    return a.conj().swapaxes(-1, -2)


@dataclass(frozen=True)
class FreqGrid:
    """Symmetric frequency grid lambda_j = -pi + 2*pi*j/N, j = 0..N-1.

    N must be even so that -lambda_j is again a grid point (index N-j mod N).
    """

    N: int

    def __post_init__(self):
        if self.N < 8 or self.N % 2 != 0:
            raise DataError(f"grid size must be even and >= 8, got {self.N}")

    @property
    def lambdas(self) -> np.ndarray:
        return -np.pi + 2.0 * np.pi * np.arange(self.N) / self.N

    def neg_index(self, j: int) -> int:
        return (self.N - j) % self.N


@dataclass
class SpectralGrid:
    """Complex n x n matrices sampled on a FreqGrid.

    ``kind`` tags the invariants: joint/marginal/conditional grids are
    Hermitian per frequency; root/frf grids are only conjugate-symmetric
    across +-lambda.
    """

    grid: FreqGrid
    mats: np.ndarray  # (N, n, n) complex
    kind: str = "joint"

    def __post_init__(self):
        m = np.asarray(self.mats, dtype=complex)
        if m.ndim != 3 or m.shape[1] != m.shape[2]:
            raise ShapeError("spectral values must be a stack of square matrices")
        if m.shape[0] != self.grid.N:
            raise ShapeError(
                f"{m.shape[0]} matrices for a grid of size {self.grid.N}"
            )
        if self.kind not in GRID_KINDS:
            raise DataError(f"unknown grid kind {self.kind!r}")
        self.mats = m

    @property
    def n(self) -> int:
        return self.mats.shape[1]

    def marginal_block(self, nx: int) -> "SpectralGrid":
        """Leading nx x nx diagonal block at every frequency."""
        if not 1 <= nx <= self.n:
            raise DataError(f"block size {nx} out of range for dimension {self.n}")
        return SpectralGrid(self.grid, self.mats[:, :nx, :nx].copy(), "marginal")

    def max_hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.mats - ct(self.mats))))

    def max_conjsym_defect(self) -> float:
        flipped = np.roll(self.mats[::-1], 1, axis=0)  # value at -lambda_j
        return float(np.max(np.abs(flipped - self.mats.conj())))


@dataclass
class TaperSpec:
    """Flat-top lag-window settings: flat half-width in lags and the
    eigenvalue floor used by `pd_truncate`."""

    bandwidth: int
    eps: float

    def __post_init__(self):
        if self.bandwidth < 1:
            raise DataError("taper bandwidth must be >= 1")
        if self.eps <= 0:
            raise DataError("eigenvalue floor must be > 0")


def default_taper(T: int) -> TaperSpec:
    """Rule-of-thumb taper: bandwidth ceil(T^(1/3)), floor 1/T."""
    return TaperSpec(bandwidth=math.ceil(T ** (1.0 / 3.0)), eps=1.0 / T)


def flat_top_weight(u: np.ndarray | float) -> np.ndarray | float:
    """Trapezoidal flat-top kernel: 1 on |u|<=1, linear to 0 at |u|=2."""
    au = np.abs(u)
    return np.clip(2.0 - au, 0.0, 1.0)


def lag_window_spectrum(
    gammas: np.ndarray, weights: np.ndarray, grid: FreqGrid
) -> np.ndarray:
    """sum_{|h| <= H} w_h gamma(h) e^{-i lambda_j h} over the grid.

    gamma(-h) = gamma(h)'. Evaluated by FFT: on this grid e^{-i lambda_j h}
    equals (-1)^h e^{-2 pi i j h / N}, so the lag sum is an exact DFT of the
    sign-flipped weighted sequence (lags folded mod N, which reproduces the
    direct sum exactly since the exponential is N-periodic in h).
    """
    H = len(weights) - 1
    n = gammas.shape[1]
    N = grid.N
    d = np.zeros((N, n, n), dtype=complex)
    d[0] = weights[0] * gammas[0]
    for h in range(1, H + 1):
        if weights[h] == 0.0:
            continue
        g = ((-1.0) ** h * weights[h]) * gammas[h]
        d[h % N] += g
        d[(N - h) % N] += g.T
    return np.fft.fft(d, axis=0)


def flat_top_estimate(
    acvf: AcvfSeq, grid: FreqGrid, taper: TaperSpec
) -> SpectralGrid:
    """Lag-window spectral estimate with the trapezoidal flat-top taper.

    S_hat(lambda_j) = sum_{|h| <= 2*bandwidth} w(h/bandwidth) gamma(h)
    e^{-i lambda_j h}, Hermitian-symmetrized per frequency. Not necessarily
    positive definite; follow with `pd_truncate`.
    """
    if acvf.maxlag < taper.bandwidth:
        raise DataError(
            f"acvf maxlag {acvf.maxlag} below taper bandwidth {taper.bandwidth}"
        )
    hmax = min(acvf.maxlag, 2 * taper.bandwidth)
    weights = flat_top_weight(np.arange(hmax + 1) / taper.bandwidth)
    mats = lag_window_spectrum(acvf.gamma[: hmax + 1], weights, grid)
    mats = 0.5 * (mats + ct(mats))
    return SpectralGrid(grid, mats, "joint")


def pd_truncate(s: SpectralGrid, eps: float) -> SpectralGrid:
    """Clamp the eigenvalues of each (Hermitian) matrix to [eps, inf)."""
    if eps <= 0:
        raise DataError("eigenvalue floor must be > 0")
    w, v = np.linalg.eigh(s.mats)
    w = np.maximum(w, eps)
    mats = (v * w[:, None, :]) @ ct(v)
    mats = 0.5 * (mats + ct(mats))
    return SpectralGrid(s.grid, mats, s.kind)


def conditional_spectrum(joint: SpectralGrid, nx: int) -> SpectralGrid:
    """Per-frequency Schur complement S_x - S_xz S_z^{-1} S_zx.

    Requires the joint grid to be positive definite at every frequency;
    the result is the conditional (residual) spectral density of the
    leading nx channels given the rest.
    """
    n = joint.n
    if not 1 <= nx < n:
        raise DataError(f"leading block size {nx} must be in [1, {n - 1}]")
    sx = joint.mats[:, :nx, :nx]
    sxz = joint.mats[:, :nx, nx:]
    sz = joint.mats[:, nx:, nx:]
    try:
        solved = np.linalg.solve(sz, ct(sxz))
    except np.linalg.LinAlgError:
        bad = _first_singular(sz)
        raise ConditioningError(
            f"auxiliary spectral block singular at frequency index {bad}"
        ) from None
    mats = sx - sxz @ solved
    mats = 0.5 * (mats + ct(mats))
    out = SpectralGrid(joint.grid, mats, "conditional")
    mineig = np.linalg.eigvalsh(out.mats).min(axis=1)
    if np.any(mineig <= 0):
        bad = int(np.argmax(mineig <= 0))
        raise ConditioningError(
            f"conditional spectrum not positive definite at frequency index {bad}"
        )
    return out


def _first_singular(stack: np.ndarray) -> int:
    for j in range(stack.shape[0]):
        if np.linalg.matrix_rank(stack[j]) < stack.shape[1]:
            return j
    return -1


def acvf_from_spectrum(s: SpectralGrid, maxlag: int) -> AcvfSeq:
    """Grid inverse transform gamma(h) = N^{-1} sum_j e^{i lambda_j h} S_j.

    Valid for Hermitian conjugate-symmetric grids; the imaginary residue is
    checked and dropped.
    """
    if maxlag >= s.grid.N // 2:
        raise DataError(
            f"maxlag {maxlag} too large for grid of size {s.grid.N}"
        )
    # e^{i lambda_j h} = (-1)^h e^{2 pi i j h / N} on this grid.
    raw = np.fft.ifft(s.mats, axis=0)[: maxlag + 1]
    signs = np.where(np.arange(maxlag + 1) % 2 == 0, 1.0, -1.0)
    raw = raw * signs[:, None, None]
    if np.max(np.abs(raw.imag)) > 1e-6:
        raise DataError(
            "spectral grid is not conjugate-symmetric; cannot invert to "
            "real autocovariances"
        )
    gam = raw.real.copy()
    gam[0] = 0.5 * (gam[0] + gam[0].T)
    return AcvfSeq(gam)


def export_spectral_csv(s: SpectralGrid, path) -> None:
    """Dump a grid as CSV rows (j, lambda, re_kl, im_kl per entry)."""
    n = s.n
    header = ["j", "lambda"]
    for k in range(n):
        for l in range(n):
            header += [f"re_{k + 1}{l + 1}", f"im_{k + 1}{l + 1}"]
    with open(path, "w", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for j in range(s.grid.N):
            row = [j, repr(float(s.grid.lambdas[j]))]
            for k in range(n):
                for l in range(n):
                    row += [
                        repr(float(s.mats[j, k, l].real)),
                        repr(float(s.mats[j, k, l].imag)),
                    ]
            w.writerow(row)
