import numpy as np
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from havokts.clustering import silhouette_samples
from havokts.distributions import kolmogorov_sf, ks_statistic, shift_positive
from havokts.embedding import EmbeddingConfig, embed
from havokts.forecast import error_evolution, forcing_active
from havokts.havok import ridge_solve, sequential_threshold_ridge, svd
from havokts.pipeline import split_index
from havokts.serialize import fmt_float

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@given(arrays(np.float64, st.integers(1, 60), elements=finite))
def test_shift_positive_keeps_gaps(v):
    out = shift_positive(v)
    m = v.min()
    assert out.min() == (0.0 if m <= 0 else 2 * m)
    assert np.allclose(np.diff(out), np.diff(v), atol=1e-9 * (1 + np.abs(v).max()))


@given(st.floats(allow_nan=False))
def test_float_round_trip(x):
    assert float(fmt_float(x)) == x


@given(arrays(np.float64, st.integers(0, 80), elements=st.floats(-1, 1)), st.floats(0, 0.9), st.integers(0, 5))
def test_forcing_intervals_cover_exactly_the_active_samples(v, thr, gap):
    iv = forcing_active(v, thr, merge_gap=gap)
    mask = np.zeros(v.size, bool)
    for a, b in iv:
        assert 0 <= a < b <= v.size
        mask[a:b] = True
    active = np.abs(v) > thr
    assert np.all(mask[active])
    if gap == 0:
        assert np.array_equal(mask, active)
    # merging bridges only gaps shorter than merge_gap, and both ends of each interval are active
    for a, b in iv:
        assert active[a] and active[b - 1]
    for (_, b1), (a2, _) in zip(iv, iv[1:]):
        assert a2 - b1 >= max(gap, 1)


@given(arrays(np.float64, st.tuples(st.integers(1, 20), st.integers(1, 10)), elements=st.floats(-100, 100)))
def test_rmse_dominates_mae(e):
    ev = error_evolution(e, np.zeros_like(e))
    assert np.all(ev.rmse >= ev.mae - 1e-12)
    assert np.all(ev.vae >= 0)


@settings(max_examples=50)
@given(st.integers(5, 200), st.integers(0, 2**32 - 1))
def test_ks_statistic_bounds(n, seed):
    x = np.random.default_rng(seed).standard_normal(n)
    cdf = lambda t: 0.5 * (1 + np.tanh(t))
    d = ks_statistic(x, cdf)
    assert 0.5 / n - 1e-15 <= d <= 1.0


@given(st.floats(0, 10), st.floats(0, 10))
def test_kolmogorov_sf_monotone(a, b):
    lo, hi = sorted((a, b))
    assert 0.0 <= kolmogorov_sf(hi) <= kolmogorov_sf(lo) + 1e-12 <= 1.0 + 1e-12


@given(st.integers(2, 10_000), st.floats(0.01, 0.99))
def test_split_index_in_range(n, frac):
    try:
        idx = split_index(n, frac)
    except Exception:
        assert round(frac * n) in (0, n)
        return
    assert 1 <= idx < n


@settings(max_examples=50)
@given(st.integers(1, 5), st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_hankel_layout(tau, dim, seed):
    x = np.random.default_rng(seed).standard_normal(60)
    H = embed(x, EmbeddingConfig(tau, dim)).data
    assert H.shape == (dim, 60 - (dim - 1) * tau)
    i, t = np.meshgrid(np.arange(dim), np.arange(H.shape[1]), indexing="ij")
    assert np.array_equal(H, x[t + i * tau])


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_svd_sign_convention_and_reconstruction(seed):
    X = np.random.default_rng(seed).standard_normal((6, 9))
    f = svd(X)
    idx = np.argmax(np.abs(f.U), axis=0)
    assert np.all(f.U[idx, np.arange(f.U.shape[1])] > 0)
    assert np.allclose(f.reconstruct(f.rank), X, atol=1e-10)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.floats(1e-6, 10))
def test_ridge_normal_equations(seed, lam):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((40, 5))
    y = rng.standard_normal(40)
    a = ridge_solve(G, y, lam)
    assert np.allclose((G.T @ G + lam * np.eye(5)) @ a, G.T @ y, atol=1e-8)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1.0))
def test_threshold_ridge_fixpoint(seed, eps):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((50, 6))
    y = G @ np.array([2.0, 0.0, -1.5, 0.0, 0.5, 0.0]) + 0.01 * rng.standard_normal(50)
    try:
        fit = sequential_threshold_ridge(G, y, 1e-3, eps)
    except Exception:
        return
    assert np.all(fit.coef[~fit.active] == 0.0)
    assert np.all(np.abs(fit.coef[fit.active]) >= eps)
    # refitting on the active set reproduces the coefficients
    again = ridge_solve(G[:, fit.active], y, 1e-3)
    assert np.allclose(again, fit.coef[fit.active])


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4))
def test_silhouette_range(seed, k):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((20, 2))
    labels = np.arange(20) % k
    s = silhouette_samples(X, labels)
    assert np.all((-1 <= s) & (s <= 1))
