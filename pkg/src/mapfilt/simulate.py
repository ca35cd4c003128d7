"""Generators for the benchmark simulation designs (VAR, VARMA(1,1), and
VAR with an ARCH(1) innovation channel) plus closed-form model spectra."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericError, ShapeError
from .series import MultiSeries
from .spectral import FreqGrid, SpectralGrid, ct

STATIONARITY_MARGIN = 1e-10
DEFAULT_BURNIN = 500


def check_stationary(coeffs) -> bool:
    """True iff the companion matrix spectral radius is < 1 - 1e-10."""
    a = np.asarray(coeffs, dtype=float)
    if a.ndim == 2:
        a = a[np.newaxis]
    if a.ndim != 3 or a.shape[1] != a.shape[2]:
        raise ShapeError("AR coefficients must be square matrices of equal size")
    p, n = a.shape[0], a.shape[1]
    comp = np.zeros((p * n, p * n))
    comp[:n] = a.transpose(1, 0, 2).reshape(n, p * n)
    if p > 1:
        comp[n:, : (p - 1) * n] = np.eye((p - 1) * n)
    radius = np.max(np.abs(np.linalg.eigvals(comp)))
    return bool(radius < 1.0 - STATIONARITY_MARGIN)


def _check_spd(sigma: np.ndarray, what: str) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ShapeError(f"{what} must be a square matrix")
    if np.max(np.abs(sigma - sigma.T)) > 1e-10:
        raise DataError(f"{what} must be symmetric")
    try:
        np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise DataError(f"{what} must be positive definite") from None
    return sigma


@dataclass
class VarModel:
    """VAR(p): w_t = A_1 w_{t-1} + ... + A_p w_{t-p} + eps_t, eps ~ N(0, sigma)."""

    coeffs: np.ndarray  # (p, n, n)
    noise_cov: np.ndarray  # (n, n)

    def __post_init__(self):
        a = np.asarray(self.coeffs, dtype=float)
        if a.ndim == 2:
            a = a[np.newaxis]
        self.coeffs = a
        self.noise_cov = _check_spd(self.noise_cov, "noise covariance")
        if a.shape[1] != self.noise_cov.shape[0]:
            raise ShapeError("AR and noise dimensions differ")
        if not check_stationary(a):
            raise DataError("VAR coefficients are not stationary")

    @property
    def n(self) -> int:
        return self.noise_cov.shape[0]

    @property
    def p(self) -> int:
        return self.coeffs.shape[0]


@dataclass
class Varma11Model:
    """VARMA(1,1): w_t = ar w_{t-1} + eps_t + ma eps_{t-1}."""

    ar: np.ndarray
    ma: np.ndarray
    noise_cov: np.ndarray

    def __post_init__(self):
        self.ar = np.asarray(self.ar, dtype=float)
        self.ma = np.asarray(self.ma, dtype=float)
        self.noise_cov = _check_spd(self.noise_cov, "noise covariance")
        n = self.noise_cov.shape[0]
        if self.ar.shape != (n, n) or self.ma.shape != (n, n):
            raise ShapeError("AR/MA matrices must match the noise dimension")
        if not check_stationary(self.ar):
            raise DataError("VARMA AR matrix is not stationary")

    @property
    def n(self) -> int:
        return self.noise_cov.shape[0]


@dataclass
class ArchSpec:
    """Scalar ARCH(1) law for one innovation channel:
    h_t = alpha0 + alpha1 * z_{t-1}^2, z_t = sqrt(h_t) e_t."""

    alpha0: float
    alpha1: float

    def __post_init__(self):
        if self.alpha0 <= 0:
            raise DataError("alpha0 must be > 0")
        if not 0.0 <= self.alpha1 < 1.0:
            raise DataError("alpha1 must lie in [0, 1)")

    @property
    def stationary_variance(self) -> float:
        return self.alpha0 / (1.0 - self.alpha1)


@dataclass
class VarArchModel:
    """Bivariate-style VAR(1) whose first innovation channel is ARCH(1)."""

    a: np.ndarray
    arch: ArchSpec

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        if self.a.ndim != 2 or self.a.shape[0] != self.a.shape[1]:
            raise ShapeError("AR matrix must be square")
        if not check_stationary(self.a):
            raise DataError("VAR coefficients are not stationary")

    @property
    def n(self) -> int:
        return self.a.shape[0]


def simulate_var(
    m: VarModel, T: int, seed: int, burnin: int = DEFAULT_BURNIN
) -> MultiSeries:
    """Simulate a Gaussian VAR path; deterministic given the seed."""
    if T < 1 or burnin < 0:
        raise DataError("need T >= 1 and burnin >= 0")
    rng = np.random.default_rng(seed)
    chol = np.linalg.cholesky(m.noise_cov)
    total = T + burnin
    eps = rng.standard_normal((total, m.n)) @ chol.T
    w = np.zeros((total, m.n))
    for t in range(total):
        acc = eps[t].copy()
        for i in range(m.p):
            if t - 1 - i >= 0:
                acc += m.coeffs[i] @ w[t - 1 - i]
        w[t] = acc
    return MultiSeries(w[burnin:], [f"w{i + 1}" for i in range(m.n)])


def simulate_varma11(
    m: Varma11Model, T: int, seed: int, burnin: int = DEFAULT_BURNIN
) -> MultiSeries:
    """Simulate a Gaussian VARMA(1,1) path; deterministic given the seed."""
    if T < 1 or burnin < 0:
        raise DataError("need T >= 1 and burnin >= 0")
    rng = np.random.default_rng(seed)
    chol = np.linalg.cholesky(m.noise_cov)
    total = T + burnin
    eps = rng.standard_normal((total, m.n)) @ chol.T
    w = np.zeros((total, m.n))
    for t in range(total):
        w[t] = eps[t]
        if t >= 1:
            w[t] += m.ar @ w[t - 1] + m.ma @ eps[t - 1]
    return MultiSeries(w[burnin:], [f"w{i + 1}" for i in range(m.n)])


def simulate_var_arch(
    a: np.ndarray,
    arch: ArchSpec,
    T: int,
    seed: int,
    burnin: int = DEFAULT_BURNIN,
) -> tuple[MultiSeries, MultiSeries]:
    """Simulate q_t = a q_{t-1} + zeta_t with ARCH(1) first innovation channel.

    The remaining innovation channels are independent standard normal.
    Returns the state series (the sensitive data) and the first innovation
    channel (the auxiliary data an attacker may hold).
    """
    model = VarArchModel(a, arch)
    if T < 1 or burnin < 0:
        raise DataError("need T >= 1 and burnin >= 0")
    n = model.n
    rng = np.random.default_rng(seed)
    total = T + burnin
    e = rng.standard_normal((total, n))
    zeta = np.empty((total, n))
    q = np.zeros((total, n))
    prev_sq = arch.stationary_variance  # start the recursion at E[z^2]
    for t in range(total):
        h = arch.alpha0 + arch.alpha1 * prev_sq
        zeta[t, 0] = np.sqrt(h) * e[t, 0]
        zeta[t, 1:] = e[t, 1:]
        prev_sq = zeta[t, 0] ** 2
        q[t] = zeta[t]
        if t >= 1:
            q[t] += model.a @ q[t - 1]
    x = MultiSeries(q[burnin:], [f"q{i + 1}" for i in range(n)])
    z = MultiSeries(zeta[burnin:, :1], ["z1"])
    return x, z


def model_spectrum(m: VarModel | Varma11Model, grid: FreqGrid) -> SpectralGrid:
    """Closed-form VARMA spectrum on the grid (Hermitian PD per frequency)."""
    lam = grid.lambdas
    z = np.exp(-1j * lam)
    if isinstance(m, VarModel):
        n = m.n
        arpoly = np.broadcast_to(np.eye(n, dtype=complex), (grid.N, n, n)).copy()
        for i in range(m.p):
            arpoly -= (z ** (i + 1))[:, None, None] * m.coeffs[i]
        mapoly = np.broadcast_to(np.eye(n, dtype=complex), (grid.N, n, n)).copy()
        sigma = m.noise_cov
    elif isinstance(m, Varma11Model):
        n = m.n
        eye = np.eye(n, dtype=complex)
        arpoly = eye[None] - z[:, None, None] * m.ar
        mapoly = eye[None] + z[:, None, None] * m.ma
        sigma = m.noise_cov
    else:
        raise DataError(f"no closed-form spectrum for {type(m).__name__}")
    try:
        h = np.linalg.solve(arpoly, mapoly)
    except np.linalg.LinAlgError:
        raise NumericError("AR polynomial singular on the grid") from None
    mats = h @ sigma @ ct(h)
    mats = 0.5 * (mats + ct(mats))
    return SpectralGrid(grid, mats, "joint")


def _matrix_list(doc, key: str) -> np.ndarray:
    try:
        arr = np.asarray(doc[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise DataError(f"model field {key!r}: {exc}") from exc
    return arr


def load_model(doc: dict) -> VarModel | Varma11Model | VarArchModel:
    """Build a simulation model from its JSON document.

    Schema: `ar` / `ma` are lists of row-major square matrices, `sigma` a
    square matrix, `arch` an {alpha0, alpha1} object. Presence of `arch`
    selects the ARCH design, `ma` the VARMA(1,1), otherwise plain VAR.
    """
    if not isinstance(doc, dict):
        raise DataError("model document must be a JSON object")
    if "arch" in doc:
        if "ar" not in doc:
            raise DataError("ARCH model requires field 'ar'")
        ar = _matrix_list(doc, "ar")
        if ar.ndim == 3:
            if ar.shape[0] != 1:
                raise DataError("ARCH model takes a single 'ar' matrix")
            ar = ar[0]
        spec = doc["arch"]
        for f in ("alpha0", "alpha1"):
            if f not in spec:
                raise DataError(f"model field 'arch' missing {f!r}")
        return VarArchModel(ar, ArchSpec(float(spec["alpha0"]), float(spec["alpha1"])))
    for f in ("ar", "sigma"):
        if f not in doc:
            raise DataError(f"model document missing field {f!r}")
    ar = _matrix_list(doc, "ar")
    if ar.ndim == 2:
        ar = ar[np.newaxis]
    sigma = _matrix_list(doc, "sigma")
    if "ma" in doc:
        ma = _matrix_list(doc, "ma")
        if ma.ndim == 3:
            if ma.shape[0] != 1:
                raise DataError("VARMA(1,1) takes a single 'ma' matrix")
            ma = ma[0]
        if ar.shape[0] != 1:
            raise DataError("VARMA(1,1) takes a single 'ar' matrix")
        return Varma11Model(ar[0], ma, sigma)
    return VarModel(ar, sigma)


def load_model_file(path) -> VarModel | Varma11Model | VarArchModel:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON: {exc}") from exc
    return load_model(doc)


def model_to_doc(m: VarModel | Varma11Model | VarArchModel) -> dict:
    if isinstance(m, VarModel):
        return {"ar": m.coeffs.tolist(), "sigma": m.noise_cov.tolist()}
    if isinstance(m, Varma11Model):
        return {
            "ar": [m.ar.tolist()],
            "ma": m.ma.tolist(),
            "sigma": m.noise_cov.tolist(),
        }
    if isinstance(m, VarArchModel):
        return {
            "ar": m.a.tolist(),
            "arch": {"alpha0": m.arch.alpha0, "alpha1": m.arch.alpha1},
        }
    raise DataError(f"cannot serialize {type(m).__name__}")


def example_var1() -> VarModel:
    """4-variate VAR(1) benchmark design (first two channels sensitive)."""
    a = np.array(
        [
            [0.5, 0.1, 0.0, 0.0],
            [0.2, 0.4, 0.1, 0.0],
            [0.1, 0.2, 0.6, 0.2],
            [0.0, 0.1, 0.2, 0.5],
        ]
    )
    sigma = np.array(
        [
            [1.0, 0.2, 0.1, 0.0],
            [0.2, 1.0, 0.2, 0.1],
            [0.1, 0.2, 1.0, 0.3],
            [0.0, 0.1, 0.3, 1.0],
        ]
    )
    return VarModel(a[np.newaxis], sigma)


def example_varma11() -> Varma11Model:
    """4-variate VARMA(1,1) benchmark design."""
    phi = np.array(
        [
            [-0.00556, -0.6353, 0.2529, -0.0096],
            [-0.2288, 0.3506, 0.2414, -0.02505],
            [-0.23423, -1.33007, 0.517, -0.1978],
            [0.1624, 0.5523, 0.4042, -0.1412],
        ]
    )
    theta = np.zeros((4, 4))
    theta[0, 0] = 0.6
    theta[0, 1] = 0.2
    theta[1, 1] = 0.3
    sigma = np.diag([0.09, 0.03, 0.05, 0.07])
    return Varma11Model(phi, theta, sigma)


def example_var_arch() -> VarArchModel:
    """Bivariate VAR(1) with ARCH(1) first innovation channel."""
    a = np.array([[0.5, 0.1], [0.2, 0.4]])
    return VarArchModel(a, ArchSpec(alpha0=1.0, alpha1=0.5))
