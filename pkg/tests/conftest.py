import numpy as np
import pytest

import mapfilt as mf


def lyapunov_gamma0(a: np.ndarray, sigma: np.ndarray, iters: int = 10000) -> np.ndarray:
    """Fixed-point iteration for the VAR(1) stationary covariance."""
    g = sigma.copy()
    for _ in range(iters):
        nxt = a @ g @ a.T + sigma
        if np.max(np.abs(nxt - g)) < 1e-14:
            return nxt
        g = nxt
    return g


@pytest.fixture(scope="session")
def var1_model():
    return mf.example_var1()


@pytest.fixture(scope="session")
def var1_series(var1_model):
    return mf.simulate_var(var1_model, 2000, seed=7)


@pytest.fixture(scope="session")
def var1_context(var1_series):
    """Default-settings pipeline context for the 4-channel benchmark series."""
    w = var1_series
    wc = mf.MultiSeries(w.values - w.values.mean(axis=0), w.names)
    cfg = mf.PipelineConfig(nx=2)
    ctx, acvf, ridge = mf.build_context(wc, cfg)
    return ctx
