import json

import numpy as np
import pytest

import mapfilt as mf
from mapfilt.errors import DataError
from mapfilt.spectral import FreqGrid, ct

from conftest import lyapunov_gamma0


def test_check_stationary_benchmark(var1_model):
    assert mf.check_stationary(var1_model.coeffs)


def test_check_stationary_identity_false():
    assert not mf.check_stationary(np.eye(3))


def test_check_stationary_scaled_false(var1_model):
    a = var1_model.coeffs[0]
    # power iteration for the spectral radius
    v = np.ones(4)
    for _ in range(2000):
        v = a @ v
        v /= np.linalg.norm(v)
    radius = np.linalg.norm(a @ v)
    scaled = a * (1.2 / radius)
    assert not mf.check_stationary(scaled)


def test_var_model_rejects_nonstationary():
    with pytest.raises(DataError):
        mf.VarModel(np.eye(2), np.eye(2))


def test_simulate_var_reproducible(var1_model):
    a = mf.simulate_var(var1_model, 100, seed=3)
    b = mf.simulate_var(var1_model, 100, seed=3)
    assert np.array_equal(a.values, b.values)
    c = mf.simulate_var(var1_model, 100, seed=4)
    assert not np.array_equal(a.values, c.values)


def test_simulate_var_zero_coeffs_iid():
    sigma = np.array([[2.0, 0.5], [0.5, 1.0]])
    m = mf.VarModel(np.zeros((1, 2, 2)), sigma)
    x = mf.simulate_var(m, 100000, seed=0)
    cov = np.cov(x.values.T, bias=True)
    assert np.linalg.norm(cov - sigma) / np.linalg.norm(sigma) < 0.05


def test_simulate_varma_theta_zero_matches_yule_walker():
    phi = np.array([[0.5, 0.1], [0.0, 0.3]])
    sigma = np.eye(2)
    m = mf.Varma11Model(phi, np.zeros((2, 2)), sigma)
    x = mf.simulate_varma11(m, 100000, seed=1)
    acvf = mf.sample_acvf(x, 1)
    oracle0 = lyapunov_gamma0(phi, sigma)
    assert np.linalg.norm(acvf.gamma[1] - phi @ oracle0) / np.linalg.norm(
        phi @ oracle0
    ) < 0.1


def test_simulate_varma_white_noise_case():
    sigma = np.diag([0.09, 0.03, 0.05, 0.07])
    m = mf.Varma11Model(np.zeros((4, 4)), np.zeros((4, 4)), sigma)
    x = mf.simulate_varma11(m, 100000, seed=2)
    cov = np.cov(x.values.T, bias=True)
    assert np.linalg.norm(cov - sigma) / np.linalg.norm(sigma) < 0.05
    y = mf.simulate_varma11(m, 50, seed=9)
    z = mf.simulate_varma11(m, 50, seed=9)
    assert np.array_equal(y.values, z.values)


def test_simulate_varma_benchmark_accepted():
    m = mf.example_varma11()
    x = mf.simulate_varma11(m, 500, seed=0)
    assert x.n == 4 and x.T == 500


def test_var_arch_stationary_variance():
    arch = mf.ArchSpec(alpha0=1.0, alpha1=0.5)
    a = np.zeros((2, 2))
    x, z = mf.simulate_var_arch(a, arch, 200000, seed=5)
    assert z.n == 1
    var1 = z.values[:, 0].var()
    assert var1 == pytest.approx(arch.stationary_variance, rel=0.1)


def test_var_arch_alpha1_zero_iid():
    arch = mf.ArchSpec(alpha0=0.8, alpha1=0.0)
    x, z = mf.simulate_var_arch(np.zeros((2, 2)), arch, 100000, seed=6)
    assert z.values[:, 0].var() == pytest.approx(0.8, rel=0.05)


def test_var_arch_reproducible():
    am = mf.example_var_arch()
    x1, z1 = mf.simulate_var_arch(am.a, am.arch, 100, seed=7)
    x2, z2 = mf.simulate_var_arch(am.a, am.arch, 100, seed=7)
    assert np.array_equal(x1.values, x2.values)
    assert np.array_equal(z1.values, z2.values)


def test_arch_spec_rejects_bad_alpha():
    with pytest.raises(DataError):
        mf.ArchSpec(alpha0=1.0, alpha1=1.0)
    with pytest.raises(DataError):
        mf.ArchSpec(alpha0=0.0, alpha1=0.5)


def test_model_spectrum_white_noise_constant():
    sigma = np.array([[1.5, 0.2], [0.2, 0.9]])
    m = mf.Varma11Model(np.zeros((2, 2)), np.zeros((2, 2)), sigma)
    s = mf.model_spectrum(m, FreqGrid(16))
    assert np.allclose(s.mats, sigma, atol=1e-12)


def test_model_spectrum_scalar_ar1():
    m = mf.VarModel(np.array([[[0.5]]]), np.array([[1.0]]))
    grid = FreqGrid(8)
    s = mf.model_spectrum(m, grid)
    j0 = int(np.argmin(np.abs(grid.lambdas)))
    assert s.mats[j0, 0, 0].real == pytest.approx(4.0, abs=1e-12)


def test_model_spectrum_grid_average_is_gamma0(var1_model):
    s = mf.model_spectrum(var1_model, FreqGrid(1024))
    avg = s.mats.mean(axis=0)
    oracle = lyapunov_gamma0(var1_model.coeffs[0], var1_model.noise_cov)
    assert np.max(np.abs(avg - oracle)) < 1e-3


def test_model_spectrum_hermitian_pd(var1_model):
    s = mf.model_spectrum(var1_model, FreqGrid(64))
    assert s.max_hermitian_defect() < 1e-12
    assert np.linalg.eigvalsh(s.mats).min() > 0
    assert s.max_conjsym_defect() < 1e-12


def test_simulated_acf_converges_to_oracle(var1_model):
    x = mf.simulate_var(var1_model, 100000, seed=8)
    acvf = mf.sample_acvf(x, 5)
    g0 = lyapunov_gamma0(var1_model.coeffs[0], var1_model.noise_cov)
    a = var1_model.coeffs[0]
    g = g0
    for h in range(6):
        rel = np.linalg.norm(acvf.gamma[h] - g) / np.linalg.norm(g)
        assert rel < 0.1, f"lag {h}: {rel}"
        g = a @ g


def test_varma_acf_converges_to_oracle():
    m = mf.example_varma11()
    x = mf.simulate_varma11(m, 100000, seed=12)
    acvf = mf.sample_acvf(x, 5)
    phi, th, sig = m.ar, m.ma, m.noise_cov
    c = sig + th @ sig @ th.T + phi @ sig @ th.T + th @ sig @ phi.T
    g = sig.copy()
    for _ in range(20000):
        g = phi @ g @ phi.T + c
    rel0 = np.linalg.norm(acvf.gamma[0] - g) / np.linalg.norm(g)
    assert rel0 < 0.1
    g1 = phi @ g + th @ sig
    assert np.linalg.norm(acvf.gamma[1] - g1) / np.linalg.norm(g1) < 0.1
    gh = g1
    for h in range(2, 6):
        gh = phi @ gh
        assert np.linalg.norm(acvf.gamma[h] - gh) / np.linalg.norm(gh) < 0.1


def test_model_json_roundtrip(tmp_path, var1_model):
    doc = mf.simulate.model_to_doc(var1_model)
    path = tmp_path / "m.json"
    path.write_text(json.dumps(doc))
    loaded = mf.simulate.load_model_file(path)
    assert isinstance(loaded, mf.VarModel)
    assert np.allclose(loaded.coeffs, var1_model.coeffs)
    assert np.allclose(loaded.noise_cov, var1_model.noise_cov)


def test_model_json_errors():
    with pytest.raises(DataError, match="sigma"):
        mf.load_model({"ar": [[0.5]]})
    with pytest.raises(DataError, match="alpha0"):
        mf.load_model({"ar": [[0.5]], "arch": {"alpha1": 0.2}})


def test_model_json_varma_and_arch_roundtrip():
    varma = mf.example_varma11()
    doc = mf.simulate.model_to_doc(varma)
    loaded = mf.load_model(doc)
    assert isinstance(loaded, mf.Varma11Model)
    assert np.allclose(loaded.ma, varma.ma)
    arch = mf.example_var_arch()
    loaded2 = mf.load_model(mf.simulate.model_to_doc(arch))
    assert isinstance(loaded2, mf.VarArchModel)
    assert loaded2.arch.alpha1 == arch.arch.alpha1
