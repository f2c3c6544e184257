"""Per-sequence statistical features and their POD compression."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from havokts.errors import DegenerateSignalError, InsufficientDataError, ParameterError
from havokts.signal import Sequence

FEATURE_NAMES = (
    "mean",
    "std",
    "skewness",
    "excess_kurtosis",
    "lag1_autocorrelation",
    "dominant_frequency",
    "spectral_entropy",
    "zero_crossing_rate",
    "peak_to_peak",
    "rms",
)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    f: np.ndarray
    id: str

    def as_dict(self) -> dict[str, float]:
        return dict(zip(FEATURE_NAMES, map(float, self.f)))


def extract_features(s: Sequence) -> FeatureVector:
    """Compute the ten features, in ``FEATURE_NAMES`` order, on the raw series.

    Frequencies are in Hz (cycles per unit of ``s.dt``); the zero-crossing rate
    counts sign changes of the raw values per unit time, with ``x >= 0``
    treated as positive.
    """
    x = s.values
    n = x.size
    if n < 2 or np.ptp(x) == 0.0:
        raise DegenerateSignalError(f"sequence {s.id!r} is constant")
    mu = x.mean()
    c = x - mu
    m2 = np.mean(c * c)
    sd = np.sqrt(m2)
    skew = np.mean(c**3) / m2**1.5
    kurt = np.mean(c**4) / m2**2 - 3.0
    ac1 = np.dot(c[:-1], c[1:]) / np.dot(c, c)

    power = np.abs(np.fft.rfft(c)) ** 2
    freqs = np.fft.rfftfreq(n, d=s.dt)
    power, freqs = power[1:], freqs[1:]
    if power.size == 0 or power.sum() == 0.0:
        dom, ent = 0.0, 0.0
    else:
        dom = freqs[int(np.argmax(power))]
        p = power / power.sum()
        nz = p[p > 0]
        ent = float(-np.sum(nz * np.log(nz)) / np.log(p.size)) if p.size > 1 else 0.0

    pos = x >= 0
    zcr = np.count_nonzero(pos[1:] != pos[:-1]) / ((n - 1) * s.dt)
    f = np.array([mu, sd, skew, kurt, ac1, dom, ent, zcr, np.ptp(x), np.sqrt(np.mean(x * x))])
    return FeatureVector(f, s.id)


def feature_matrix(features) -> np.ndarray:
    return np.vstack([fv.f for fv in features])


def standardize_columns(F: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Column z-scores (population std); constant columns map to zero."""
    mean = F.mean(axis=0)
    scale = F.std(axis=0)
    safe = np.where(scale > 0, scale, 1.0)
    Z = (F - mean) / safe
    Z[:, scale == 0] = 0.0
    return Z, mean, safe


def select_rank(eigenvalues, energy_target: float) -> int:
    """Smallest count of leading eigenvalues whose cumulative share reaches the target."""
    if not 0.0 < energy_target <= 1.0:
        raise ParameterError(f"energy_target must lie in (0, 1], got {energy_target}")
    lam = np.clip(np.asarray(eigenvalues, dtype=np.float64), 0.0, None)
    total = lam.sum()
    if total == 0.0:
        return 1
    if energy_target >= 1.0:
        # numerical rank, same cutoff as numpy.linalg.matrix_rank
        cutoff = lam.size * np.finfo(np.float64).eps * lam.max()
        return max(1, int(np.count_nonzero(lam > cutoff)))
    ratio = np.cumsum(lam) / total
    return int(min(np.searchsorted(ratio, energy_target - 1e-12) + 1, lam.size))


@dataclass(frozen=True, eq=False)
class CompressedFeatures:
    """POD coordinates of a feature matrix.

    ``z`` holds one row of ``r_f`` coordinates per sequence (row order = ``ids``),
    ``basis`` the 10 x r_f orthonormal modes, ``energy`` the variance share kept.
    """

    z: np.ndarray
    basis: np.ndarray
    energy: float
    eigenvalues: np.ndarray
    mean: np.ndarray
    scale: np.ndarray
    ids: tuple[str, ...]

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @property
    def cumulative_energy(self) -> np.ndarray:
        lam = np.clip(self.eigenvalues, 0.0, None)
        return np.cumsum(lam) / lam.sum()

    def __getitem__(self, seq_id: str) -> np.ndarray:
        return self.z[self.ids.index(seq_id)]


def compress(features, energy_target: float = 0.90) -> CompressedFeatures:
    """Standardize feature columns, eigendecompose their covariance, keep the leading modes."""
    if not 0.0 < energy_target <= 1.0:
        raise ParameterError(f"energy_target must lie in (0, 1], got {energy_target}")
    features = list(features)
    if len(features) < 2:
        raise InsufficientDataError("compression needs at least two feature vectors")
    F = feature_matrix(features)
    Z, mean, scale = standardize_columns(F)
    cov = Z.T @ Z / Z.shape[0]
    lam, vecs = np.linalg.eigh(cov)
    order = np.argsort(lam)[::-1]
    lam, vecs = lam[order], vecs[:, order]
    # deterministic sign: largest-magnitude loading positive
    flip = np.sign(vecs[np.argmax(np.abs(vecs), axis=0), np.arange(vecs.shape[1])])
    vecs = vecs * np.where(flip == 0, 1.0, flip)
    r = select_rank(lam, energy_target)
    basis = vecs[:, :r]
    lam_pos = np.clip(lam, 0.0, None)
    energy = float(lam_pos[:r].sum() / lam_pos.sum()) if lam_pos.sum() > 0 else 1.0
    return CompressedFeatures(
        z=Z @ basis, basis=basis, energy=energy, eigenvalues=lam,
        mean=mean, scale=scale, ids=tuple(fv.id for fv in features),
    )
