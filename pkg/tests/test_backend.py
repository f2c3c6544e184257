"""The compiled kernels and their pure-Python twins must agree."""
import subprocess
import sys

import numpy as np
import pytest

from havokts import _pykernels as py

cy = pytest.importorskip("havokts._kernels")


def test_lorenz_bitwise():
    a = cy.lorenz_rk4(-8.0, 8.0, 27.0, 10.0, 28.0, 8.0 / 3.0, 0.01, 100, 5000)
    b = py.lorenz_rk4(-8.0, 8.0, 27.0, 10.0, 28.0, 8.0 / 3.0, 0.01, 100, 5000)
    assert np.array_equal(np.asarray(a), b)


def test_forced_linear(rng):
    A = rng.standard_normal((6, 6)) * 0.3
    B = rng.standard_normal(6)
    v0 = rng.standard_normal(6)
    u = rng.standard_normal(400)
    a = np.asarray(cy.forced_linear_rk4(A, B, v0, u, 0.01, 400))
    b = py.forced_linear_rk4(A, B, v0, u, 0.01, 400)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


def test_nearest_neighbors(rng):
    pts = rng.standard_normal((500, 4))
    pts[10] = pts[20]  # a duplicate pair
    ia, da = (np.asarray(v) for v in cy.nearest_neighbors(pts))
    ib, db = py.nearest_neighbors(pts)
    assert np.allclose(da, db, rtol=1e-12, atol=0)
    assert da[10] == 0.0 and ia[10] == 20 and ib[20] == 10
    same = ia == ib
    # ties aside, the neighbor indices agree
    assert same.mean() > 0.99


def test_mutual_information(rng):
    ia = rng.integers(0, 16, 5000).astype(np.int64)
    ib = ((ia + rng.integers(0, 3, 5000)) % 16).astype(np.int64)
    assert cy.binned_mutual_information(ia, ib, 16) == pytest.approx(py.binned_mutual_information(ia, ib, 16), rel=1e-12)


def test_env_var_forces_fallback():
    code = "import havokts; print(havokts.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env={"HAVOKTS_BACKEND": "python", "PATH": ""},
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_pipeline_pieces_agree_across_backends(monkeypatch, lorenz_x):
    from havokts import embedding, forecast
    from havokts.embedding import EmbeddingConfig
    from havokts.havok import fit_havok

    x = lorenz_x.values[:4000]
    results = []
    for mod in (cy, py):
        monkeypatch.setattr(embedding, "kernels", mod)
        monkeypatch.setattr(forecast, "kernels", mod)
        sel = embedding.select_delay(x, tau_max=20)
        dim = embedding.select_dimension(x, sel.tau, d_max=8)
        m = fit_havok(x, EmbeddingConfig(1, 30), 8, dt=0.01)
        f = forecast.simulate(m, m.V_r[0, :-1], m.forcing, 500)
        results.append((sel.tau, dim.dim, f.x_hat))
    assert results[0][:2] == results[1][:2]
    assert np.allclose(results[0][2], results[1][2], rtol=1e-9, atol=1e-9)
