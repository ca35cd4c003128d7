"""Multivariate series container, sample autocovariances, differencing with
exact reintegration, forecast extension, and two-sided matrix filtering."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, InvalidLagError, LengthError, ShapeError


@dataclass
class MultiSeries:
    """A length-T, dimension-n real-valued time series.

    ``values`` holds one row per time point. ``names`` labels the channels
    and must be unique. ``period`` is an optional seasonal period (e.g. 4
    for quarterly data); it is metadata only and never applied implicitly.
    """

    values: np.ndarray
    names: list[str] | None = None
    period: int | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v.reshape(-1, 1)
        if v.ndim != 2:
            raise ShapeError("series values must be a T x n matrix")
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise DataError("series needs at least one row and one channel")
        if not np.all(np.isfinite(v)):
            raise DataError("series contains non-finite values")
        self.values = v
        if self.names is None:
            self.names = [f"c{i + 1}" for i in range(v.shape[1])]
        else:
            self.names = [str(s) for s in self.names]
        if len(self.names) != v.shape[1]:
            raise ShapeError(
                f"{len(self.names)} names for {v.shape[1]} channels"
            )
        if len(set(self.names)) != len(self.names):
            raise DataError("channel names must be unique")
        if self.period is not None and int(self.period) < 1:
            raise DataError("period must be a positive integer")

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def select(self, channels: list[int]) -> "MultiSeries":
        """Subseries keeping the given channel indices, in order."""
        return MultiSeries(
            self.values[:, channels],
            [self.names[i] for i in channels],
            self.period,
        )


@dataclass
class AcvfSeq:
    """Matrix autocovariance sequence gamma[h], h = 0..maxlag.

    gamma[h] estimates Cov(x_{t+h}, x_t). Negative lags are never stored;
    ``at(-h)`` returns gamma[h].T.
    """

    gamma: np.ndarray  # (maxlag + 1, n, n)

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        if g.ndim == 2:
            g = g[np.newaxis]
        if g.ndim != 3 or g.shape[1] != g.shape[2]:
            raise ShapeError("acvf must be a stack of square matrices")
        self.gamma = g

    @property
    def n(self) -> int:
        return self.gamma.shape[1]

    @property
    def maxlag(self) -> int:
        return self.gamma.shape[0] - 1

    def at(self, h: int) -> np.ndarray:
        if abs(h) > self.maxlag:
            raise InvalidLagError(f"lag {h} beyond maxlag {self.maxlag}")
        return self.gamma[h] if h >= 0 else self.gamma[-h].T

    def block(self, channels: list[int]) -> "AcvfSeq":
        """Restrict to a channel subset (same-position cross blocks kept)."""
        idx = np.asarray(channels)
        return AcvfSeq(self.gamma[:, idx[:, None], idx[None, :]])

    def reversed_time(self) -> "AcvfSeq":
        """Autocovariances of the time-reversed process: gamma[h] -> gamma[h].T."""
        return AcvfSeq(np.transpose(self.gamma, (0, 2, 1)))

    def truncate(self, maxlag: int) -> "AcvfSeq":
        if maxlag > self.maxlag:
            raise InvalidLagError(f"cannot extend acvf to lag {maxlag}")
        return AcvfSeq(self.gamma[: maxlag + 1])


@dataclass
class DiffSpec:
    """Differencing order: (1-B)^d (1-B^s)^D applied channelwise."""

    d: int = 0
    D: int = 0
    s: int = 1

    def __post_init__(self):
        if self.d < 0 or self.D < 0:
            raise DataError("differencing orders must be >= 0")
        if self.s < 1:
            raise DataError("seasonal period must be >= 1")

    @property
    def drop(self) -> int:
        """Number of leading observations consumed."""
        return self.d + self.D * self.s


@dataclass
class DiffState:
    """Initial observations consumed by each differencing stage, in
    application order; holding them makes `integrate` an exact inverse."""

    stages: list[np.ndarray] = field(default_factory=list)

    def select(self, channels: list[int]) -> "DiffState":
        return DiffState([st[:, channels].copy() for st in self.stages])


@dataclass
class MapFilter:
    """Two-sided real matrix filter with coefficients for k = -M..M.

    ``coeffs[k + halfwidth]`` is the matrix applied to x_{t-k}. tail_norm
    is the largest Frobenius norm among coefficients dropped at truncation.
    """

    coeffs: np.ndarray  # (2M + 1, n, n)
    halfwidth: int
    tail_norm: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 3 or c.shape[1] != c.shape[2]:
            raise ShapeError("filter coefficients must be square matrices")
        if c.shape[0] != 2 * self.halfwidth + 1:
            raise ShapeError(
                f"{c.shape[0]} coefficient matrices for halfwidth {self.halfwidth}"
            )
        if not np.all(np.isfinite(c)):
            raise DataError("filter has non-finite coefficients")
        self.coeffs = c

    @property
    def n(self) -> int:
        return self.coeffs.shape[1]

    def coeff(self, k: int) -> np.ndarray:
        return self.coeffs[k + self.halfwidth]


def sample_acvf(x: MultiSeries, maxlag: int) -> AcvfSeq:
    """Sample autocovariances with divisor T (biased, PSD-preserving).

    gamma_hat(h) = T^{-1} sum_t (x_{t+h} - xbar)(x_t - xbar)' for h = 0..maxlag.
    """
    if maxlag >= x.T:
        raise InvalidLagError(f"maxlag {maxlag} must be < series length {x.T}")
    if maxlag < 0:
        raise InvalidLagError("maxlag must be >= 0")
    xc = x.values - x.values.mean(axis=0)
    T = x.T
    # FFT cross-correlation; zero-padding past 2T avoids circular wrap.
    nfft = 1 << (2 * T - 1).bit_length()
    f = np.fft.fft(xc, nfft, axis=0)
    cross = np.einsum("ja,jb->jab", f, f.conj())
    gam = np.fft.ifft(cross, axis=0)[: maxlag + 1].real / T
    gam[0] = 0.5 * (gam[0] + gam[0].T)
    return AcvfSeq(gam)


def difference(x: MultiSeries, spec: DiffSpec) -> tuple[MultiSeries, DiffState]:
    """Apply (1-B)^d (1-B^s)^D channelwise, keeping consumed prefixes."""
    if x.T <= spec.drop:
        raise LengthError(
            f"series of length {x.T} too short for differencing (needs > {spec.drop})"
        )
    vals = x.values
    stages: list[np.ndarray] = []
    for _ in range(spec.d):
        stages.append(vals[:1].copy())
        vals = vals[1:] - vals[:-1]
    for _ in range(spec.D):
        stages.append(vals[: spec.s].copy())
        vals = vals[spec.s :] - vals[: -spec.s]
    return MultiSeries(vals, x.names, x.period), DiffState(stages)


def integrate(y: MultiSeries, state: DiffState, spec: DiffSpec) -> MultiSeries:
    """Exact left inverse of `difference`: reinsert prefixes and cumulate."""
    expected = [1] * spec.d + [spec.s] * spec.D
    if len(state.stages) != len(expected) or any(
        len(st) != p for st, p in zip(state.stages, expected)
    ):
        raise LengthError("differencing state does not match spec")
    vals = y.values
    for prefix in reversed(state.stages):
        if prefix.shape[1] != vals.shape[1]:
            raise ShapeError("state channel count does not match series")
        p = prefix.shape[0]
        out = np.empty((p + vals.shape[0], vals.shape[1]))
        out[:p] = prefix
        for t in range(p, out.shape[0]):
            out[t] = vals[t - p] + out[t - p]
        vals = out
    return MultiSeries(vals, y.names, y.period)


def _yule_walker(acvf: AcvfSeq, order: int) -> np.ndarray:
    """Solve the multivariate Yule-Walker system for A_1..A_p.

    Returns coefficients stacked as (p, n, n); raises LinAlgError upward.
    """
    n = acvf.n
    big = np.empty((order * n, order * n))
    rhs = np.empty((n, order * n))
    for i in range(order):
        for j in range(order):
            big[i * n : (i + 1) * n, j * n : (j + 1) * n] = acvf.at(j - i)
        rhs[:, i * n : (i + 1) * n] = acvf.at(i + 1)
    sol = np.linalg.solve(big, rhs.T).T  # (n, p*n)
    return np.stack([sol[:, i * n : (i + 1) * n] for i in range(order)])


def _var_forecast(tail: np.ndarray, coefs: np.ndarray, steps: int) -> np.ndarray:
    """Iterate x_hat_{t+h} = sum_i A_i x_hat_{t+h-i} from the last p rows."""
    hist = [row for row in tail]
    out = np.empty((steps, tail.shape[1]))
    for h in range(steps):
        nxt = np.zeros(tail.shape[1])
        for i, a in enumerate(coefs):
            nxt += a @ hist[-1 - i]
        out[h] = nxt
        hist.append(nxt)
    return out


def forecast_extend(
    x: MultiSeries, acvf: AcvfSeq, extension: int, order: int | None = None
) -> MultiSeries:
    """Pad a (de-meaned) series with best linear forecasts on both sides.

    A VAR(p) is fitted by Yule-Walker from ``acvf``; forecasts run forward
    off the last p values and backcasts use the time-reversed process
    (transposed autocovariances). A singular predictor system falls back to
    zero (mean) extension with a warning.
    """
    if extension < 0:
        raise DataError("extension length must be >= 0")
    if acvf.n != x.n:
        raise ShapeError("acvf dimension does not match series")
    if extension == 0:
        return MultiSeries(x.values.copy(), x.names, x.period)
    order = min(10, acvf.maxlag // 2) if order is None else order
    order = min(order, acvf.maxlag, x.T)
    if order == 0:
        pad = np.zeros((extension, x.n))
        return MultiSeries(
            np.vstack([pad, x.values, pad]), x.names, x.period
        )
    try:
        fwd = _yule_walker(acvf, order)
        bwd = _yule_walker(acvf.reversed_time(), order)
    except np.linalg.LinAlgError:
        warnings.warn(
            "singular predictor system; falling back to mean extension",
            RuntimeWarning,
        )
        pad = np.zeros((extension, x.n))
        return MultiSeries(
            np.vstack([pad, x.values, pad]), x.names, x.period
        )
    ahead = _var_forecast(x.values[-order:], fwd, extension)
    behind = _var_forecast(x.values[:order][::-1], bwd, extension)[::-1]
    return MultiSeries(
        np.vstack([behind, x.values, ahead]), x.names, x.period
    )


def apply_filter(x_ext: MultiSeries, f: MapFilter) -> MultiSeries:
    """y_t = sum_{k=-M..M} Psi_k x_{t-k} over the central points.

    The input must carry M rows of padding on each side; the output drops
    the padding, so its length is len(x_ext) - 2M. No implicit zero-padding.
    """
    if f.n != x_ext.n:
        raise ShapeError("filter dimension does not match series")
    M = f.halfwidth
    T = x_ext.T - 2 * M
    if T < 1:
        raise LengthError(
            f"series of length {x_ext.T} leaves no output after 2x{M} padding"
        )
    out = np.zeros((T, x_ext.n))
    for k in range(-M, M + 1):
        out += x_ext.values[M - k : M - k + T] @ f.coeff(k).T
    return MultiSeries(out, x_ext.names, x_ext.period)


def read_series_csv(path) -> tuple[MultiSeries, list[str]]:
    """Read `time,<name1>,...` CSV; returns the series and raw time labels."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows[0]) < 2:
        raise DataError(f"{path}: expected header 'time,<name1>,...'")
    names = rows[0][1:]
    labels = []
    data = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(names) + 1:
            raise DataError(f"{path}: row {i} has {len(row)} fields")
        labels.append(row[0])
        try:
            data.append([float(v) for v in row[1:]])
        except ValueError as exc:
            raise DataError(f"{path}: row {i}: {exc}") from exc
    if not data:
        raise DataError(f"{path}: no data rows")
    return MultiSeries(np.array(data), names), labels


def write_series_csv(path, x: MultiSeries, time: list[str] | None = None) -> None:
    """Write `time,<name1>,...` CSV with shortest-roundtrip float formatting."""
    if time is None:
        time = [str(t) for t in range(x.T)]
    if len(time) != x.T:
        raise ShapeError("time labels do not match series length")
    with open(path, "w", newline="\n") as fh:
        fh.write("time," + ",".join(x.names) + "\n")
        for t in range(x.T):
            vals = ",".join(repr(float(v)) for v in x.values[t])
            fh.write(f"{time[t]},{vals}\n")
