import numpy as np
import pytest

from havokts.embedding import (
    EmbeddingConfig, ami, embed, first_local_minimum, fnn_percentage, mutual_information, select_delay,
    select_dimension, _bin_index,
)
from havokts.errors import BoundsError, InsufficientDataError, ParameterError


def hist_entropy(x, bins=16):
    p = np.bincount(_bin_index(np.asarray(x, float), bins), minlength=bins) / len(x)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def test_embed_examples():
    H = embed(np.array([1.0, 2, 3, 4, 5]), EmbeddingConfig(1, 2))
    assert H.data.T.tolist() == [[1, 2], [2, 3], [3, 4], [4, 5]]
    assert embed(np.arange(100.0), EmbeddingConfig(13, 4)).n_t == 61
    x = np.arange(7.0)
    assert np.array_equal(embed(x, EmbeddingConfig(3, 1)).data, x[None, :])
    with pytest.raises(BoundsError):
        embed(np.arange(10.0), EmbeddingConfig(5, 3))


@pytest.mark.parametrize("tau,dim,n", [(1, 3, 10), (2, 4, 15), (3, 2, 9), (5, 3, 11)])
def test_hankel_structure_exhaustive(tau, dim, n):
    x = np.random.default_rng(n).standard_normal(n)
    D = embed(x, EmbeddingConfig(tau, dim)).data
    for i in range(dim):
        for j in range(D.shape[1]):
            assert D[i, j] == x[j + i * tau]
            if i > 0 and j + tau < D.shape[1]:
                assert D[i, j] == D[i - 1, j + tau]


def test_embedding_config_validation():
    for bad in [(0, 2), (1, 0), (1.5, 2)]:
        with pytest.raises(ParameterError):
            EmbeddingConfig(*bad)


def test_ami_at_zero_is_entropy_and_maximal(lorenz_x):
    x = lorenz_x.values[:5000]
    h = ami(x, 0)
    assert h == pytest.approx(hist_entropy(x), abs=1e-12)
    assert all(ami(x, t) <= h + 1e-12 for t in range(1, 30))


def test_ami_independent_noise(rng):
    a, b = rng.standard_normal(100_000), rng.standard_normal(100_000)
    assert mutual_information(a, b) < 0.01


def test_ami_symmetric(rng):
    x = np.cumsum(rng.standard_normal(3000))
    for tau in (1, 5, 17):
        assert mutual_information(x[:-tau], x[tau:]) == pytest.approx(mutual_information(x[tau:], x[:-tau]), abs=1e-12)


def test_ami_needs_pairs():
    with pytest.raises(InsufficientDataError):
        ami(np.arange(40.0), 10, bins=16)


@pytest.mark.parametrize("period", [16, 20, 28, 32, 40])
def test_delay_quarter_period(period):
    # only periods that alias cleanly onto 16 equal-width bins are checked here
    x = np.sin(2 * np.pi * np.arange(4000) / period)
    sel = select_delay(x, tau_max=30)
    assert sel.local_minimum
    assert abs(sel.tau - period / 4) <= 1


def test_delay_fallback_on_monotone_curve(rng):
    walk = np.cumsum(rng.standard_normal(5000))
    sel = select_delay(walk, tau_max=20)
    assert np.all(np.diff(sel.curve) < 0)
    assert not sel.local_minimum and sel.tau == 20


def test_first_local_minimum_plateau():
    assert first_local_minimum([5, 3, 1, 1, 1, 2, 4]) == 3
    assert first_local_minimum([5, 4, 3, 2]) is None
    assert first_local_minimum([3, 1, 2, 0, 5]) == 1


def test_fnn_linear_recurrence_is_zero():
    x = np.sin(0.07 * np.arange(5000))
    assert fnn_percentage(x, 22, 2) < 0.5


def test_fnn_monotone_up_to_true_dimension():
    t = np.arange(8000)
    x = np.sin(0.05 * t) + 0.6 * np.sin(0.137 * t)
    curve = [fnn_percentage(x, 8, d) for d in range(1, 5)]
    assert all(b <= a + 1e-9 for a, b in zip(curve, curve[1:]))
    assert curve[-1] < 1.0


def test_fnn_lorenz(lorenz_x):
    tau = select_delay(lorenz_x, tau_max=30).tau
    assert fnn_percentage(lorenz_x, tau, 1) > 50
    assert fnn_percentage(lorenz_x, tau, 3) < 5
    sel = select_dimension(lorenz_x, tau, d_max=10)
    assert sel.dropped and abs(sel.dim - 3) <= 1


def test_fnn_white_noise_never_drops(rng):
    sel = select_dimension(rng.standard_normal(3000), 1, d_max=8)
    assert not sel.dropped and sel.dim == 8


def test_fnn_needs_points():
    with pytest.raises(InsufficientDataError):
        fnn_percentage(np.arange(5.0), 2, 3)
