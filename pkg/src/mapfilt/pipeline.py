"""End-to-end privatization pipeline: detrend, estimate, factor, optimize,
filter, reintegrate, report."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .allpass import frf_to_coeffs, map_frf
from .errors import DataError, FactorizationError, LengthError
from .factorize import (
    bauer_factorize,
    spectral_root_grid,
    truncated_spectrum_min_eig,
)
from .privacy import (
    OptimizerOptions,
    OptResult,
    make_context,
    optimize,
    privacy_report,
)
from .series import (
    DiffSpec,
    MapFilter,
    MultiSeries,
    apply_filter,
    difference,
    forecast_extend,
    integrate,
    sample_acvf,
)
from .spectral import (
    FreqGrid,
    TaperSpec,
    acvf_from_spectrum,
    conditional_spectrum,
    flat_top_estimate,
    pd_truncate,
)


def default_lag_budget(T: int) -> int:
    return math.ceil(2.0 * T ** (1.0 / 3.0))


@dataclass
class PipelineConfig:
    """One privatization run, fully determined.

    nx is the number of leading sensitive channels; the rest are auxiliary.
    Fields left at None are derived from the detrended sample length using
    the documented defaults.
    """

    nx: int = 1
    diff: DiffSpec = field(default_factory=DiffSpec)
    grid_size: int = 512
    cepstral_order: int = 1
    taper_bandwidth: int | None = None
    taper_eps: float | None = None
    lag_budget: int | None = None
    forecast_order: int | None = None
    toeplitz_size: int | None = None
    tail_tol: float = 1e-8
    optimizer: OptimizerOptions = field(default_factory=OptimizerOptions)
    seed: int = 0

    def __post_init__(self):
        if self.nx < 1:
            raise DataError("nx must be >= 1")
        if self.grid_size < 8 or self.grid_size % 2:
            raise DataError("grid_size must be even and >= 8")
        if self.cepstral_order < 0:
            raise DataError("cepstral order must be >= 0")
        if self.taper_bandwidth is not None and self.taper_bandwidth < 1:
            raise DataError("taper bandwidth must be >= 1")
        if self.taper_eps is not None and self.taper_eps <= 0:
            raise DataError("taper eps must be > 0")
        if self.lag_budget is not None and self.lag_budget < 1:
            raise DataError("lag budget must be >= 1")
        if self.toeplitz_size is not None and self.toeplitz_size < 2:
            raise DataError("Toeplitz size must be >= 2")
        if self.tail_tol <= 0:
            raise DataError("tail tolerance must be > 0")

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        doc = dict(doc)
        unknown = set(doc) - {
            "nx",
            "diff",
            "grid_size",
            "cepstral_order",
            "taper_bandwidth",
            "taper_eps",
            "lag_budget",
            "forecast_order",
            "toeplitz_size",
            "tail_tol",
            "optimizer",
            "seed",
        }
        if unknown:
            raise DataError(f"unknown config fields: {sorted(unknown)}")
        if "diff" in doc:
            d = doc.pop("diff") or {}
            doc["diff"] = DiffSpec(
                int(d.get("d", 0)), int(d.get("D", 0)), int(d.get("s", 1))
            )
        if "optimizer" in doc:
            o = doc.pop("optimizer") or {}
            bad = set(o) - {"restarts", "seed", "max_iter", "tol", "n_free"}
            if bad:
                raise DataError(f"unknown optimizer fields: {sorted(bad)}")
            doc["optimizer"] = OptimizerOptions(**o)
        try:
            return cls(**doc)
        except TypeError as exc:
            raise DataError(f"bad config: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "nx": self.nx,
            "diff": {"d": self.diff.d, "D": self.diff.D, "s": self.diff.s},
            "grid_size": self.grid_size,
            "cepstral_order": self.cepstral_order,
            "taper_bandwidth": self.taper_bandwidth,
            "taper_eps": self.taper_eps,
            "lag_budget": self.lag_budget,
            "forecast_order": self.forecast_order,
            "toeplitz_size": self.toeplitz_size,
            "tail_tol": self.tail_tol,
            "optimizer": {
                "restarts": self.optimizer.restarts,
                "seed": self.optimizer.seed,
                "max_iter": self.optimizer.max_iter,
                "tol": self.optimizer.tol,
                "n_free": self.optimizer.n_free,
            },
            "seed": self.seed,
        }


@dataclass
class PrivatizeResult:
    """Artifacts of one pipeline run, original-scale output plus the
    detrended intermediates used for assessment."""

    y: MultiSeries
    report: dict
    map_filter: MapFilter
    opt: OptResult
    detrended_x: MultiSeries
    privatized_detrended: MultiSeries
    ridge: float


def build_context(w: MultiSeries, config: PipelineConfig):
    """Estimation stages shared by the pipeline: sample acvf, flat-top PD
    spectral estimate, conditioning, factorization, roots, criterion context.

    ``w`` is the detrended joint series (sensitive channels first). Returns
    (ctx, joint acvf, ridge) where ridge is the diagonal lift (usually 0)
    applied to keep the lag-truncated sensitive spectrum factorizable.
    """
    nx = config.nx
    if not 1 <= nx < w.n:
        raise DataError(
            f"nx = {nx} must satisfy 1 <= nx < {w.n} (the channel count)"
        )
    T = w.T
    if T < 2 * w.n:
        raise LengthError(
            f"detrended length {T} too short for {w.n} channels (need >= {2 * w.n})"
        )
    bandwidth = (
        math.ceil(T ** (1.0 / 3.0))
        if config.taper_bandwidth is None
        else config.taper_bandwidth
    )
    eps = 1.0 / T if config.taper_eps is None else config.taper_eps
    taper = TaperSpec(bandwidth, eps)
    lag_budget = (
        max(default_lag_budget(T), 2 * bandwidth)
        if config.lag_budget is None
        else config.lag_budget
    )
    if lag_budget >= T:
        raise LengthError(
            f"lag budget {lag_budget} must be below the detrended length {T}"
        )
    grid = FreqGrid(config.grid_size)
    acvf = sample_acvf(w, lag_budget)
    s_joint = pd_truncate(flat_top_estimate(acvf, grid, taper), taper.eps)
    s_cond = conditional_spectrum(s_joint, nx)
    s_x = s_joint.marginal_block(nx)
    q = min(lag_budget, grid.N // 2 - 1)
    acvf_x = acvf_from_spectrum(s_x, q)
    base_gamma0 = acvf_x.gamma[0].copy()
    # Lag truncation can push the factorization target off positive definite
    # between grid points; lift gamma(0) by the deficit measured on a grid
    # fine enough for the polynomial degree, escalating in the rare case the
    # factorization (whose positivity requirement is stricter) still fails.
    fine = FreqGrid(max(grid.N, min(1 << (4 * (q + 1) - 1).bit_length(), 1 << 14)))
    mineig = truncated_spectrum_min_eig(acvf_x, fine)
    ridge = abs(mineig) + taper.eps if mineig <= 0 else 0.0
    factor = None
    for _ in range(10):
        acvf_x.gamma[0] = base_gamma0 + ridge * np.eye(nx)
        try:
            factor = bauer_factorize(
                acvf_x, m=config.toeplitz_size, grid=grid, check_pd=False
            )
            break
        except FactorizationError:
            ridge = 2.0 * ridge if ridge > 0 else taper.eps
    if factor is None:
        raise FactorizationError(
            "could not make the lag-truncated sensitive spectrum positive "
            "definite; reduce the lag budget or bandwidth"
        )
    roots = spectral_root_grid(factor, grid)
    ctx = make_context(s_cond, roots)
    return ctx, acvf, ridge


def run_privatize(x: MultiSeries, config: PipelineConfig) -> PrivatizeResult:
    """Full privatization: the sensitive channels of ``x`` are replaced by a
    filtered release with (estimated) matching second-order structure.

    Stages: difference, de-mean, estimate the joint spectrum, condition on
    the auxiliary channels, factor the sensitive spectrum, optimize the
    privacy criterion, invert the optimal response to coefficients, filter
    the forecast-extended detrended series, restore mean and trend.
    """
    start = time.perf_counter()
    w, state = difference(x, config.diff)
    means = w.values.mean(axis=0)
    wc = MultiSeries(w.values - means, w.names, w.period)
    ctx, acvf, ridge = build_context(wc, config)
    opts = config.optimizer
    if opts.seed == 0 and config.seed != 0:
        opts = OptimizerOptions(
            restarts=opts.restarts,
            seed=config.seed,
            max_iter=opts.max_iter,
            tol=opts.tol,
            n_free=opts.n_free,
        )
    opt = optimize(ctx, config.cepstral_order, opts)
    frf = map_frf(opt.theta_opt, ctx.roots)
    filt = frf_to_coeffs(frf, config.tail_tol)
    xc = wc.select(list(range(config.nx)))
    x_ext = forecast_extend(
        xc, acvf.block(list(range(config.nx))), filt.halfwidth, config.forecast_order
    )
    y_diff = apply_filter(x_ext, filt)
    y_diff = MultiSeries(
        y_diff.values + means[: config.nx], y_diff.names, y_diff.period
    )
    y = integrate(y_diff, state.select(list(range(config.nx))), config.diff)
    z = (
        wc.select(list(range(config.nx, w.n)))
        if w.n > config.nx
        else None
    )
    report = privacy_report(
        x=wc.select(list(range(config.nx))),
        z=z,
        y=MultiSeries(y_diff.values - means[: config.nx], y_diff.names),
        theta_opt=opt.theta_opt,
        ctx=ctx,
        lag_budget=config.lag_budget,
        runtime_seconds=time.perf_counter() - start,
        extra={
            "filter_halfwidth": filt.halfwidth,
            "filter_tail_norm": filt.tail_norm,
            "converged": opt.converged,
            "restarts": opt.restarts_used,
            "acvf_ridge": ridge,
        },
    )
    return PrivatizeResult(
        y=y,
        report=report,
        map_filter=filt,
        opt=opt,
        detrended_x=xc,
        privatized_detrended=MultiSeries(
            y_diff.values - means[: config.nx], y_diff.names
        ),
        ridge=ridge,
    )
