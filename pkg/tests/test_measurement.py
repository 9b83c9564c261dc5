import numpy as np
import pytest

from weakdsf import (
    MeasurementStrength,
    NoiseRealization,
    QuantumState,
    density_expectation,
    exact_kraus_measure,
    measurement_stream,
    sample_noise,
    weak_measure,
)


def test_streams_are_reproducible_and_distinct():
    a = measurement_stream(3, 5, 0, 2).standard_normal(4)
    b = measurement_stream(3, 5, 0, 2).standard_normal(4)
    c = measurement_stream(3, 5, 1, 2).standard_normal(4)
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    assert np.array_equal(sample_noise(measurement_stream(0, 0, 0), 6).values,
                          sample_noise(measurement_stream(0, 0, 0), 6).values)


def test_noise_moments():
    v = measurement_stream(0, 0, 0).standard_normal(1_000_000)
    assert abs(v.mean()) < 0.004
    assert abs(np.mean(v**4) - 3.0) < 0.06
    m = measurement_stream(1, 0, 0).standard_normal((100_000, 4))
    assert np.all(np.abs(np.cov(m, rowvar=False) - np.eye(4)) < 0.02)


def test_gamma_validation():
    with pytest.raises(ValueError):
        MeasurementStrength(0.0)
    assert MeasurementStrength(0.25).noise_scale == pytest.approx(1.0)


def test_fock_state_is_not_disturbed(chain4, rng):
    basis = chain4[0]
    fock = QuantumState.fock(basis, (2, 0, 1, 1))
    noise = sample_noise(rng, 4)
    out, post = weak_measure(fock, 0.1, noise)
    assert np.allclose(post.amplitudes, fock.amplitudes)
    assert np.allclose(out.record, np.array([2, 0, 1, 1]) + noise.values / (2 * np.sqrt(0.1)))


def test_zero_noise(chain4):
    _, _, psi0, _ = chain4
    for g in (0.01, 0.001):
        out, post = weak_measure(psi0, g, NoiseRealization(np.zeros(4)))
        assert np.array_equal(out.record, out.densities)
        dist = np.linalg.norm(post.amplitudes - psi0.amplitudes)
        assert dist < 5 * g


def test_record_variance(chain4):
    _, _, psi0, _ = chain4
    g = 0.1
    rng = np.random.default_rng(7)
    dev = np.array([weak_measure(psi0, g, sample_noise(rng, 4))[0].record for _ in range(10_000)])
    dev -= density_expectation(psi0)
    assert np.all(np.abs(dev.var(axis=0) * 4 * g - 1) < 0.05)


def test_strong_gamma_warns(chain4, rng):
    with pytest.warns(RuntimeWarning):
        weak_measure(chain4[2], 0.8, sample_noise(rng, 4))


def test_kraus_fock_and_projective_limit(chain4):
    basis, _, psi0, _ = chain4
    fock = QuantumState.fock(basis, (1, 1, 1, 1))
    recs = []
    for i in range(4000):
        out, post = exact_kraus_measure(fock, 0.2, measurement_stream(0, i, 0))
        recs.append(out.record)
        if i < 5:
            assert np.allclose(post.amplitudes, fock.amplitudes)
    recs = np.array(recs)
    assert np.all(np.abs(recs.mean(0) - 1) < 3 * np.sqrt(1 / (0.8 * 4000)))
    assert np.all(np.abs(recs.var(0) * 0.8 - 1) < 0.1)
    _, post = exact_kraus_measure(psi0, 200.0, measurement_stream(0, 0, 0))
    assert post.probabilities().max() > 0.999


def test_kraus_and_linearized_agree_to_first_order(chain4):
    _, _, psi0, _ = chain4
    dists = []
    for g in (0.04, 0.02, 0.01):
        out, kraus = exact_kraus_measure(psi0, g, measurement_stream(2, 0, 0))
        # same outcome fed to the linearized update
        noise = NoiseRealization(2 * np.sqrt(g) * (out.record - out.densities))
        _, lin = weak_measure(psi0, g, noise)
        dists.append(np.linalg.norm(kraus.amplitudes - lin.amplitudes))
    assert dists[0] > dists[1] > dists[2]
    ratios = np.array(dists[:-1]) / np.array(dists[1:])
    assert np.all((ratios > 1.4) & (ratios < 3.0))
