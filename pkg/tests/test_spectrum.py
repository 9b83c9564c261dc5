import numpy as np
import pytest

from weakdsf import ConfigurationError, ProtocolConfig, run_ensemble
from weakdsf.analysis import (
    Ensemble,
    VanHoveGrid,
    dsf,
    filter_correlations,
    fourier_cutoff,
    lowpass_matrix,
    lowpass_sites,
    q_grid,
    van_hove,
    van_hove_from_correlations,
)

T = np.round(np.arange(0, 121) * 0.05, 12)


def grid(values, disp):
    return VanHoveGrid(displacements=np.asarray(disp), times=T, values=values,
                       sem=np.zeros_like(values), pairs=np.ones(len(disp), dtype=int))


def test_q_grid():
    q = q_grid(11)
    assert q.size == 11 and np.all(q > -np.pi) and np.all(q <= np.pi) and 0.0 in q
    assert np.isclose(q_grid(4)[-1], np.pi)


def test_constant_signal_peaks_at_origin():
    disp = np.arange(-5, 6)
    s = dsf(grid(np.ones((11, T.size)), disp), np.linspace(-3, 3, 121))
    iq, iw = np.unravel_index(np.argmax(np.abs(s.values.real)), s.values.shape)
    assert s.q[iq] == 0.0 and s.omegas[iw] == pytest.approx(0.0)


@pytest.mark.parametrize("window", ["hann", "none"])
def test_cosine_signal_peaks_at_its_frequency(window):
    disp = np.arange(-3, 4)
    w0 = 2.0
    values = np.zeros((7, T.size))
    values[3] = np.cos(w0 * T)
    omegas = np.linspace(0, 4, 401)
    s = dsf(grid(values, disp), omegas, window=window)
    for row in s.values.real:
        assert omegas[np.argmax(row)] == pytest.approx(w0, abs=0.02)
    # no q dependence for an on-site signal
    assert np.allclose(s.values, s.values[0])
    # the peak width is set by the window length T = 6
    row = s.values.real[0]
    half = omegas[row >= row.max() / 2]
    assert 0.3 < half[-1] - half[0] < 2.5


def test_dsf_rejects_uneven_grid():
    g = VanHoveGrid(np.array([0]), np.array([0.0, 0.1, 0.3]), np.ones((1, 3)), np.zeros((1, 3)), np.ones(1))
    with pytest.raises(ValueError):
        dsf(g, [0.0])


def test_explicit_q_matches_grid_q():
    disp = np.arange(-3, 4)
    values = np.random.default_rng(0).normal(size=(7, T.size))
    g = grid(values, disp)
    s = dsf(g, [0.5, 1.0])
    t = dsf(g, [0.5, 1.0], q=s.q[[2, 4]])
    assert np.allclose(t.values, s.values[[2, 4]])


def test_cutoff_identity_and_constant():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(5, 12))
    assert np.array_equal(lowpass_sites(x, np.pi), x)
    c = np.full(12, 1.7)
    for k in (0.1, 0.5, 2.0):
        assert np.allclose(lowpass_sites(c, k), c, atol=1e-14)
    with pytest.raises(ConfigurationError):
        lowpass_sites(x, 0.0)


def test_impulse_response_is_dirichlet_kernel():
    sites, k_max = 32, 0.5
    impulse = np.zeros(sites)
    impulse[0] = 1.0
    out = lowpass_sites(impulse, k_max)
    k = 2 * np.pi * np.arange(sites) / sites
    k = np.where(k > np.pi, k - 2 * np.pi, k)
    keep = np.abs(k) <= k_max
    j = np.arange(sites)
    # direct (non-FFT) sum over the kept modes
    direct = np.array([np.sum(np.cos(k[keep] * x)) for x in j]) / sites
    assert np.allclose(out, direct, atol=1e-14)
    assert keep.sum() == 5


def test_projector_properties():
    p = lowpass_matrix(10, 1.3)
    assert np.allclose(p, p.T) and np.allclose(p @ p, p)
    corr = np.random.default_rng(2).normal(size=(3, 10, 10))
    assert np.allclose(filter_correlations(corr, 1.3), p @ corr @ p.T)


def test_ensemble_cutoff(ensemble6):
    f = fourier_cutoff(ensemble6, 1.0)
    assert f.k_max == 1.0
    assert np.allclose(f.densities.sum(-1), ensemble6.densities.sum(-1))
    assert fourier_cutoff(f, 1.0) is f
    same = fourier_cutoff(ensemble6, np.pi)
    assert np.array_equal(same.densities, ensemble6.densities) and np.array_equal(same.first, ensemble6.first)


def test_filtered_estimate_matches_filtered_oracle(ensemble6, oracle6):
    f = fourier_cutoff(ensemble6, 1.0)
    est = van_hove(f, include_noise=False, keep_samples=False)
    exact = van_hove_from_correlations(oracle6.times, filter_correlations(oracle6.correlations, 1.0))
    assert np.mean(np.abs(est.values - exact.values) <= 3 * est.sem) >= 0.99


OMEGAS = np.arange(0, 8.01, 0.1)


@pytest.mark.xfail(
    strict=True,
    reason="the O(gamma) estimator bias adds up coherently in the time integral; "
    "at gamma = 0.05 it exceeds 3 sem at q != 0 (see the gamma = 0.0125 test)",
)
def test_estimated_dsf_matches_oracle_dsf_at_gamma_005(ensemble6, oracle6):
    est = dsf(van_hove(ensemble6, include_noise=False), OMEGAS)
    exact = dsf(oracle6.van_hove(), OMEGAS)
    assert np.all(np.abs(est.values.real - exact.values.real) <= 3 * est.sem)


def test_estimated_dsf_matches_oracle_dsf_at_weak_gamma(chain6, oracle6):
    _, _, psi0, prop = chain6
    cfg = ProtocolConfig(gamma=0.0125, trajectories=2000, seed=0)
    est = dsf(van_hove(Ensemble.from_records(run_ensemble(psi0, cfg, prop)), include_noise=False), OMEGAS)
    exact = dsf(oracle6.van_hove(), OMEGAS)
    assert np.all(np.abs(est.values.real - exact.values.real) <= 3 * est.sem)
