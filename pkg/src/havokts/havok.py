"""Forced linear models in delay coordinates (HAVOK) fitted by sequentially thresholded ridge."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from havokts.embedding import EmbeddingConfig, HankelMatrix, embed
from havokts.errors import (
    DataError,
    EmptyModelError,
    InsufficientDataError,
    ParameterError,
    SingularityError,
)
from havokts.signal import Sequence

DEFAULT_LAMBDA = 1e-2
DEFAULT_EPS = 1e-6


@dataclass(frozen=True, eq=False)
class SvdFactors:
    """Thin SVD ``X = U diag(S) V^T``; U is (d, k), V is (n_t, k)."""

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray

    @property
    def rank(self) -> int:
        tol = max(self.U.shape[0], self.V.shape[0]) * np.finfo(np.float64).eps * (self.S[0] if self.S.size else 0)
        return int(np.count_nonzero(self.S > tol))

    def reconstruct(self, r: int | None = None) -> np.ndarray:
        r = self.S.size if r is None else r
        return (self.U[:, :r] * self.S[:r]) @ self.V[:, :r].T


def svd(X) -> SvdFactors:
    """Thin SVD with each left singular vector's largest-magnitude entry made positive."""
    data = X.data if isinstance(X, HankelMatrix) else np.asarray(X, dtype=np.float64)
    if data.size == 0:
        raise DataError("cannot decompose an empty matrix")
    if not np.all(np.isfinite(data)):
        raise DataError("matrix has non-finite entries")
    U, S, Vt = np.linalg.svd(data, full_matrices=False)
    cols = np.arange(U.shape[1])
    sign = np.sign(U[np.argmax(np.abs(U), axis=0), cols])
    sign[sign == 0] = 1.0
    return SvdFactors(U * sign, S, Vt.T * sign)


@dataclass(frozen=True)
class RankPolicy:
    """How to pick the truncation rank: ``manual`` (value = r), ``energy`` (value = share
    of squared singular values) or ``hard-threshold`` (optimal hard threshold, unknown noise)."""

    kind: str = "manual"
    value: float | None = None

    @classmethod
    def parse(cls, text) -> "RankPolicy":
        if isinstance(text, RankPolicy):
            return text
        if isinstance(text, (int, np.integer)):
            return cls("manual", int(text))
        t = str(text).strip().lower()
        if t in ("hard-threshold", "hard_threshold", "svht"):
            return cls("hard-threshold")
        if t.startswith("energy"):
            _, _, v = t.partition(":")
            return cls("energy", float(v) if v else 0.99)
        if t.startswith("manual:"):
            t = t.split(":", 1)[1]
        try:
            return cls("manual", int(t))
        except ValueError:
            raise ParameterError(f"cannot parse rank policy {text!r}") from None

    def __str__(self):
        if self.kind == "manual":
            return str(int(self.value))
        if self.kind == "energy":
            return f"energy:{self.value:g}"
        return self.kind


def _svht_omega(beta: float) -> float:
    # polynomial fit to the optimal coefficient for unknown noise (median-based)
    return 0.56 * beta**3 - 0.95 * beta**2 + 1.82 * beta + 1.43


def truncation_rank(S, policy: RankPolicy | int | str = 12, shape: tuple[int, int] | None = None) -> int:
    S = np.asarray(S, dtype=np.float64)
    if S.size == 0:
        raise ParameterError("empty singular value list")
    policy = RankPolicy.parse(policy)
    k = S.size
    if policy.kind == "manual":
        r = int(min(max(int(policy.value), 2), k))
    elif policy.kind == "energy":
        eta = float(policy.value)
        if not 0.0 < eta <= 1.0:
            raise ParameterError(f"energy share must lie in (0, 1], got {eta}")
        e = np.cumsum(S**2) / np.sum(S**2)
        r = k if eta >= 1.0 else int(np.searchsorted(e, eta - 1e-15) + 1)
    elif policy.kind == "hard-threshold":
        m, n = shape if shape is not None else (k, k)
        beta = min(m, n) / max(m, n)
        thr = _svht_omega(beta) * np.median(S)
        r = int(np.count_nonzero(S > thr))
    else:
        raise ParameterError(f"unknown rank policy {policy.kind!r}")
    if r < 2:
        raise ParameterError(f"policy {policy} keeps r={r}; a forced model needs r >= 2")
    return r


def differentiate(V, dt: float) -> np.ndarray:
    """Fourth-order central differences along axis 0; drops two rows at each end."""
    V = np.asarray(V, dtype=np.float64)
    if V.shape[0] < 5:
        raise InsufficientDataError(f"need at least 5 rows to differentiate, got {V.shape[0]}")
    return (-V[4:] + 8.0 * V[3:-1] - 8.0 * V[1:-3] + V[:-4]) / (12.0 * dt)


def ridge_solve(G, y, lam: float = DEFAULT_LAMBDA) -> np.ndarray:
    """Solve ``(G^T G + lam I) a = G^T y`` by Cholesky factorization."""
    G = np.asarray(G, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if lam < 0:
        raise ParameterError(f"lambda must be >= 0, got {lam}")
    p = G.shape[1]
    M = G.T @ G
    if lam > 0:
        M[np.diag_indices(p)] += lam
    elif np.linalg.matrix_rank(G) < p:
        raise SingularityError("G^T G is singular at lambda = 0; use lambda > 0")
    try:
        c = linalg.cho_factor(M, check_finite=False)
    except linalg.LinAlgError:
        raise SingularityError("regularized normal equations are not positive definite; "
                               "increase lambda") from None
    return linalg.cho_solve(c, G.T @ y, check_finite=False)


@dataclass(frozen=True, eq=False)
class SparseFit:
    coef: np.ndarray
    active: np.ndarray
    iterations: int


def _stridge_column(G, y, lam, eps, max_iter):
    p = G.shape[1]
    active = np.ones(p, dtype=bool)
    coef = np.zeros(p)
    for it in range(1, max_iter + 1):
        a = ridge_solve(G if active.all() else G[:, active], y, lam)
        small = np.abs(a) < eps
        if not small.any():
            coef[:] = 0.0
            coef[active] = a
            return coef, active, it
        idx = np.flatnonzero(active)
        active[idx[small]] = False
        if not active.any():
            raise EmptyModelError(f"every coefficient fell below eps={eps:g}")
    raise EmptyModelError(f"active set did not settle within {max_iter} iterations")


def sequential_threshold_ridge(G, y, lam: float = DEFAULT_LAMBDA, eps: float = DEFAULT_EPS,
                               max_iter: int | None = None) -> SparseFit:
    """Ridge-solve, drop predictors with ``|coef| < eps``, refit on the survivors, repeat
    until the active set stops changing.

    ``y`` may hold several targets as columns; each gets its own active set.
    Pruned coefficients are exactly zero.
    """
    if not eps > 0:
        raise ParameterError(f"eps must be > 0, got {eps}")
    G = np.asarray(G, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    vector = y.ndim == 1
    Y = y[:, None] if vector else y
    max_iter = max_iter or G.shape[1] + 1
    coefs, actives, its = [], [], 0
    for j in range(Y.shape[1]):
        c, a, it = _stridge_column(G, Y[:, j], lam, eps, max_iter)
        coefs.append(c)
        actives.append(a)
        its = max(its, it)
    coef = np.column_stack(coefs)
    active = np.column_stack(actives)
    if vector:
        coef, active = coef[:, 0], active[:, 0]
    return SparseFit(coef, active, its)


@dataclass(frozen=True, eq=False)
class HavokModel:
    """``dv/dt = A v + B u`` with ``v`` the first r-1 delay coordinates and ``u = v_r``.

    ``U_r`` and ``S_r`` map coordinates back to delay vectors; ``V_r`` keeps the
    training coordinates (rows = Hankel columns).
    """

    r: int
    A: np.ndarray
    B: np.ndarray
    U_r: np.ndarray
    S_r: np.ndarray
    V_r: np.ndarray
    singular_values: np.ndarray
    dt: float
    embedding: EmbeddingConfig
    ridge_lambda: float
    threshold: float
    active: np.ndarray = field(default=None)

    @property
    def forcing(self) -> np.ndarray:
        return self.V_r[:, -1]

    @property
    def coefficients(self) -> np.ndarray:
        """[A | B], shape (r-1, r)."""
        return np.hstack([self.A, self.B[:, None]])

    def project(self, x) -> np.ndarray:
        """Delay coordinates of a new series, one row per Hankel column."""
        H = embed(x, self.embedding)
        return (H.data.T @ self.U_r) / self.S_r

    def residual(self) -> float:
        dV = differentiate(self.V_r[:, : self.r - 1], self.dt)
        return float(np.linalg.norm(dV - self.V_r[2:-2] @ self.coefficients.T))


def fit_havok(x, embedding: EmbeddingConfig, r: RankPolicy | int | str = 12,
              lam: float = DEFAULT_LAMBDA, eps: float = DEFAULT_EPS, dt: float | None = None) -> HavokModel:
    """Embed, decompose, truncate and regress the derivatives of the first r-1 coordinates
    on all r coordinates; the last coordinate is the forcing and gets no equation."""
    if isinstance(x, Sequence):
        dt = x.dt if dt is None else dt
        values = x.values
    else:
        values = np.asarray(x, dtype=np.float64)
        if dt is None:
            raise ParameterError("dt is required for a raw array")
    H = embed(values, embedding)
    f = svd(H)
    policy = RankPolicy.parse(r)
    if policy.kind == "manual" and int(policy.value) < 2:
        raise ParameterError(f"r must be >= 2 for a forced model, got {policy.value}")
    rank = truncation_rank(f.S, policy, H.data.shape)
    V = f.V[:, :rank]
    dV = differentiate(V[:, : rank - 1], dt)
    fit = sequential_threshold_ridge(V[2:-2], dV, lam, eps)
    coef = fit.coef.T
    return HavokModel(
        r=rank, A=coef[:, : rank - 1].copy(), B=coef[:, rank - 1].copy(),
        U_r=f.U[:, :rank].copy(), S_r=f.S[:rank].copy(), V_r=V.copy(),
        singular_values=f.S.copy(), dt=float(dt), embedding=embedding,
        ridge_lambda=float(lam), threshold=float(eps), active=fit.active.T.copy(),
    )


def model_to_dict(model: HavokModel) -> dict:
    """Plain-data form of a model. Of the training coordinates only the forcing
    column and the last row are kept."""
    return {
        "r": model.r,
        "dt": model.dt,
        "tau": model.embedding.tau,
        "dim": model.embedding.dim,
        "lambda": model.ridge_lambda,
        "eps": model.threshold,
        "A": model.A,
        "B": model.B,
        "singular_values": model.singular_values,
        "S_r": model.S_r,
        "U_r": model.U_r,
        "v_last": model.V_r[-1],
        "forcing": model.forcing,
        "active": model.active.astype(int) if model.active is not None else None,
    }


def model_from_dict(d: dict) -> HavokModel:
    try:
        r = int(d["r"])
        A = np.asarray(d["A"], dtype=np.float64).reshape(r - 1, r - 1)
        B = np.asarray(d["B"], dtype=np.float64).reshape(r - 1)
        U_r = np.asarray(d["U_r"], dtype=np.float64)
        S_r = np.asarray(d["S_r"], dtype=np.float64).reshape(r)
        v_last = np.asarray(d["v_last"], dtype=np.float64).reshape(r)
        u = np.asarray(d["forcing"], dtype=np.float64).ravel()
        # the linear coordinates are not stored; only their last row is known
        V_r = np.full((u.size, r), np.nan)
        V_r[:, -1] = u
        V_r[-1] = v_last
        active = d.get("active")
        return HavokModel(
            r=r, A=A, B=B, U_r=U_r.reshape(-1, r), S_r=S_r, V_r=V_r,
            singular_values=np.asarray(d["singular_values"], dtype=np.float64),
            dt=float(d["dt"]), embedding=EmbeddingConfig(int(d["tau"]), int(d["dim"])),
            ridge_lambda=float(d["lambda"]), threshold=float(d["eps"]),
            active=None if active is None else np.asarray(active, dtype=bool).reshape(r - 1, r),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed model description: {exc}") from None
