"""Delay-embedding parameters (AMI delay, FNN dimension) and Hankel matrices."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from havokts._backend import kernels
from havokts.errors import BoundsError, InsufficientDataError, ParameterError
from havokts.signal import Sequence

DEFAULT_BINS = 16
DEFAULT_R_TOL = 10.0
DEFAULT_A_TOL = 2.0


def _values(x) -> np.ndarray:
    if isinstance(x, Sequence):
        return x.values
    return np.asarray(x, dtype=np.float64)


@dataclass(frozen=True)
class EmbeddingConfig:
    tau: int
    dim: int

    def __post_init__(self):
        if int(self.tau) != self.tau or self.tau < 1:
            raise ParameterError(f"tau must be an integer >= 1, got {self.tau}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ParameterError(f"dim must be an integer >= 1, got {self.dim}")

    @property
    def span(self) -> int:
        """Samples covered by one delay vector minus one, (dim - 1) * tau."""
        return (self.dim - 1) * self.tau

    def n_columns(self, length: int) -> int:
        return length - self.span


@dataclass(frozen=True, eq=False)
class HankelMatrix:
    """``data[i, t] == x[t + i * tau]``; shape (dim, n_t)."""

    data: np.ndarray
    config: EmbeddingConfig

    @property
    def n_t(self) -> int:
        return self.data.shape[1]


def embed(x, config: EmbeddingConfig) -> HankelMatrix:
    v = _values(x)
    n_t = config.n_columns(v.size)
    if n_t < 1:
        raise BoundsError(
            f"embedding with tau={config.tau}, dim={config.dim} needs more than "
            f"{config.span} samples, got {v.size}"
        )
    windows = np.lib.stride_tricks.sliding_window_view(v, config.span + 1)
    data = np.ascontiguousarray(windows[:n_t, :: config.tau].T)
    return HankelMatrix(data, config)


def _bin_index(v: np.ndarray, bins: int) -> np.ndarray:
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.zeros(v.size, dtype=np.int64)
    idx = np.floor((v - lo) / (hi - lo) * bins).astype(np.int64)
    return np.minimum(idx, bins - 1)


def mutual_information(a, b, bins: int = DEFAULT_BINS) -> float:
    """Plug-in mutual information (nats) from an equal-width ``bins x bins`` histogram.

    Each variable is binned over its own [min, max].
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size != b.size:
        raise ParameterError("mutual_information needs equal-length inputs")
    if bins < 1:
        raise ParameterError("bins must be >= 1")
    return float(kernels.binned_mutual_information(_bin_index(a, bins), _bin_index(b, bins), bins))


def ami(x, tau: int, bins: int = DEFAULT_BINS) -> float:
    """Average mutual information between ``x_t`` and ``x_{t+tau}``."""
    v = _values(x)
    if tau < 0:
        raise ParameterError(f"tau must be >= 0, got {tau}")
    n_pairs = v.size - tau
    if n_pairs < 2 * bins:
        raise InsufficientDataError(f"{n_pairs} pairs is too few for {bins} bins (need {2 * bins})")
    return mutual_information(v[: v.size - tau], v[tau:], bins)


@dataclass(frozen=True, eq=False)
class DelaySelection:
    tau: int
    taus: np.ndarray
    curve: np.ndarray
    local_minimum: bool


def first_local_minimum(curve, flat_tol: float = 1e-3) -> int | None:
    """0-based index of the first interior local minimum, or None.

    Consecutive values closer than ``flat_tol`` times the curve's range are
    treated as one flat stretch; a flat minimum is reported at its midpoint.
    """
    c = np.asarray(curve, dtype=np.float64)
    n = c.size
    if n < 3:
        return None
    tol = flat_tol * (c.max() - c.min())
    i = 0
    while i < n:
        j = i
        while j + 1 < n and abs(c[j + 1] - c[j]) <= tol:
            j += 1
        if i > 0 and j < n - 1 and c[i - 1] > c[i] and c[j + 1] > c[j]:
            return (i + j) // 2
        i = j + 1
    return None


def select_delay(x, tau_max: int = 20, bins: int = DEFAULT_BINS) -> DelaySelection:
    """First local minimum of the AMI curve over tau = 1..tau_max.

    See :func:`first_local_minimum` for how flat stretches are handled. Falls back to the global minimum (``local_minimum=False``) when the curve
    has no interior minimum.
    """
    if tau_max < 2:
        raise ParameterError("tau_max must be >= 2")
    taus = np.arange(1, tau_max + 1)
    curve = np.array([ami(x, int(t), bins) for t in taus])
    i = first_local_minimum(curve)
    if i is None:
        return DelaySelection(int(taus[int(np.argmin(curve))]), taus, curve, False)
    return DelaySelection(int(taus[i]), taus, curve, True)


def fnn_percentage(x, tau: int, d: int, r_tol: float = DEFAULT_R_TOL,
                   a_tol: float = DEFAULT_A_TOL) -> float:
    """Percentage of false nearest neighbors when going from dimension d to d + 1.

    A neighbor is false if the added coordinate separates the pair by more than
    ``r_tol`` times their d-dimensional distance, or if the (d+1)-dimensional
    distance exceeds ``a_tol`` times the standard deviation of the series.
    """
    v = _values(x)
    if d < 1 or tau < 1:
        raise ParameterError("d and tau must be >= 1")
    n = v.size - d * tau
    if n < 2:
        raise InsufficientDataError(f"{v.size} samples cannot be embedded at dimension {d + 1} with tau={tau}")
    pts = np.ascontiguousarray(embed(v, EmbeddingConfig(tau, d)).data[:, :n].T)
    nn, r2 = kernels.nearest_neighbors(pts)
    extra = np.abs(v[d * tau: d * tau + n] - v[nn + d * tau])
    rd = np.sqrt(r2)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rd > 0, extra / rd, np.where(extra > 0, np.inf, 0.0))
    r_next = np.sqrt(r2 + extra * extra)
    sigma = v.std()
    false = (ratio > r_tol) | (r_next > a_tol * sigma)
    return 100.0 * np.count_nonzero(false) / n


@dataclass(frozen=True, eq=False)
class DimensionSelection:
    dim: int
    dims: np.ndarray
    curve: np.ndarray
    dropped: bool
    rise_dim: int | None


def select_dimension(x, tau: int, d_max: int = 50, drop_threshold: float = 0.10,
                     r_tol: float = DEFAULT_R_TOL, a_tol: float = DEFAULT_A_TOL) -> DimensionSelection:
    """Smallest d >= 2 whose FNN percentage is at most ``drop_threshold`` of the d = 1 value.

    When no such d exists up to ``d_max`` the result is ``d_max`` with
    ``dropped=False``. ``rise_dim`` is the first dimension after the selected
    one at which the curve goes back up (noise overtaking the statistic).
    """
    if d_max < 2:
        raise ParameterError("d_max must be >= 2")
    dims = np.arange(1, d_max + 1)
    curve = np.array([fnn_percentage(x, tau, int(d), r_tol, a_tol) for d in dims])
    limit = drop_threshold * curve[0]
    hit = [int(d) for d, p in zip(dims[1:], curve[1:]) if p <= limit]
    if hit:
        dim, dropped = hit[0], True
    else:
        dim, dropped = int(d_max), False
    rise = None
    for k in range(dim, d_max):
        if curve[k] > curve[k - 1]:
            rise = int(dims[k])
            break
    return DimensionSelection(dim, dims, curve, dropped, rise)
