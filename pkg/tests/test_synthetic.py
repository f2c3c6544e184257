import numpy as np
import pytest

from havokts.errors import ParameterError
from havokts.synthetic import GeneratorSpec, demo_corpus, generate, lorenz_states


def test_sine_closed_form():
    s = generate(GeneratorSpec("sine", 0.01, 1000, {"amplitude": 1.0, "frequency": 0.5}))
    assert s.values[0] == 0.0
    assert abs(s.values[25] - np.sin(2 * np.pi * 0.5 * 0.25)) < 1e-12


def test_noisy_sine_is_reproducible():
    spec = GeneratorSpec("noisy-sine", 0.01, 500, {"seed": 7})
    a, b = generate(spec).values, generate(spec).values
    assert np.array_equal(a, b)
    c = generate(GeneratorSpec("noisy-sine", 0.01, 500, {"seed": 8})).values
    assert not np.array_equal(a, c)


def test_chirp_frequency_sweep():
    s = generate(GeneratorSpec("chirp", 0.001, 20000, {"f0": 1.0, "f1": 5.0}))
    x = s.values
    first = np.count_nonzero(np.diff(np.signbit(x[:2000])))
    last = np.count_nonzero(np.diff(np.signbit(x[-2000:])))
    assert last > 3 * first


@pytest.mark.parametrize("kw", [dict(dt=0.0), dict(dt=-1.0), dict(n_samples=1), dict(kind="tent")])
def test_invalid_specs(kw):
    base = dict(kind="sine", dt=0.01, n_samples=10)
    base.update(kw)
    with pytest.raises(ParameterError):
        GeneratorSpec(**base)


def test_lorenz_rk4_order():
    # the difference between dt and dt/2 runs shrinks ~16x per halving
    def at_one(dt):
        st = lorenz_states(GeneratorSpec("lorenz", dt, int(round(1.0 / dt)) + 1, {"transient": 0.0}))
        return st[-1]
    e1 = np.linalg.norm(at_one(2e-3) - at_one(1e-3))
    e2 = np.linalg.norm(at_one(1e-3) - at_one(5e-4))
    assert 12 <= e1 / e2 <= 20


def test_lorenz_bounded():
    st = lorenz_states(GeneratorSpec("lorenz", 0.01, 5000))
    assert np.max(np.linalg.norm(st, axis=1)) < 100


def test_lorenz_starts_after_transient():
    st = lorenz_states(GeneratorSpec("lorenz", 0.01, 3, {"transient": 0.0}))
    assert st[0].tolist() == [-8.0, 8.0, 27.0]


def test_demo_corpus_layout():
    ds = demo_corpus(n_per_family=3, n_samples=300)
    assert ds.ids == [f"{f}-{i:02d}" for f in ("slow", "fast", "chirp") for i in range(3)]
    again = demo_corpus(n_per_family=3, n_samples=300)
    assert all(np.array_equal(a.values, b.values) for a, b in zip(ds, again))
