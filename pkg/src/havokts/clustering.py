"""k-means++ clustering, normalized silhouette and compressed-feature clustering (CFC)."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from havokts.errors import ParameterError
from havokts.features import CompressedFeatures, FeatureVector, compress, extract_features
from havokts.signal import Dataset


@dataclass(frozen=True, eq=False)
class ClusterResult:
    """Outcome of one k-means run.

    ``labels`` are 0-based; ``assignment`` exposes the 1-based ``C_1..C_K``
    numbering keyed by sequence id.
    """

    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    iterations: int
    inertia_history: tuple[float, ...] = ()
    ids: tuple[str, ...] = ()
    empty_clusters: tuple[int, ...] = ()
    converged: bool = True

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def assignment(self) -> dict[str, int]:
        ids = self.ids or tuple(str(i) for i in range(self.labels.size))
        return {i: int(l) + 1 for i, l in zip(ids, self.labels)}

    def members(self) -> list[list[str]]:
        ids = self.ids or tuple(str(i) for i in range(self.labels.size))
        out: list[list[str]] = [[] for _ in range(self.k)]
        for i, l in zip(ids, self.labels):
            out[int(l)].append(i)
        return out

    def canonical(self) -> "ClusterResult":
        """Relabel so centroids are in lexicographic order."""
        order = np.lexsort(self.centroids.T[::-1])
        remap = np.empty_like(order)
        remap[order] = np.arange(order.size)
        return ClusterResult(
            labels=remap[self.labels], centroids=self.centroids[order], inertia=self.inertia,
            iterations=self.iterations, inertia_history=self.inertia_history, ids=self.ids,
            empty_clusters=tuple(sorted(int(remap[e]) for e in self.empty_clusters)),
            converged=self.converged,
        )


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d = points[:, None, :] - centers[None, :, :]
    return np.einsum("ijk,ijk->ij", d, d)


def _seed_centers(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = [points[rng.integers(n)]]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            idx = rng.integers(n)
        centers.append(points[idx])
        d2 = np.minimum(d2, np.sum((points - points[idx]) ** 2, axis=1))
    return np.array(centers, dtype=np.float64)


def kmeans_pp(points, k: int, max_iter: int = 1000, seed: int = 0) -> ClusterResult:
    """k-means with D^2 seeding followed by Lloyd iterations.

    Stops when no assignment changes or after ``max_iter`` iterations. A
    cluster that loses all its points is re-seeded at the point farthest from
    its current centroid.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if k < 1 or k > n:
        raise ParameterError(f"k must lie in [1, {n}], got {k}")
    if max_iter < 1:
        raise ParameterError("max_iter must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    centers = _seed_centers(X, k, rng)
    labels = np.full(n, -1)
    history: list[float] = []
    reseeded: set[int] = set()
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        d2 = _sq_dists(X, centers)
        new = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(n), new].sum()))
        if np.array_equal(new, labels):
            converged = True
            break
        labels = new
        for j in range(k):
            mask = labels == j
            if mask.any():
                centers[j] = X[mask].mean(axis=0)
        counts = np.bincount(labels, minlength=k)
        for j in np.flatnonzero(counts == 0):
            own = np.sum((X - centers[labels]) ** 2, axis=1)
            far = int(np.argmax(own))
            centers[j] = X[far]
            labels[far] = j
            reseeded.add(int(j))
    d2 = _sq_dists(X, centers)
    final = d2[np.arange(n), labels]
    counts = np.bincount(labels, minlength=k)
    return ClusterResult(
        labels=labels.copy(), centroids=centers, inertia=float(final.sum()), iterations=it,
        inertia_history=tuple(history), empty_clusters=tuple(int(j) for j in np.flatnonzero(counts == 0)),
        converged=converged,
    )


def silhouette_samples(points, labels) -> np.ndarray:
    """Raw per-point silhouette in [-1, 1].

    A point alone in its cluster scores 0 (Rousseeuw's convention), as does a
    point with ``a = b = 0``.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    labels = np.asarray(labels)
    uniq = np.unique(labels)
    D = np.sqrt(np.maximum(_sq_dists(X, X), 0.0))
    n = X.shape[0]
    s = np.zeros(n)
    for i in range(n):
        own = labels == labels[i]
        n_own = own.sum() - 1
        if n_own == 0:
            continue
        a = D[i, own].sum() / n_own
        b = min(D[i, labels == c].mean() for c in uniq if c != labels[i])
        denom = max(a, b)
        s[i] = (b - a) / denom if denom > 0 else 0.0
    return s


def silhouette(points, result: ClusterResult | np.ndarray) -> float:
    """Mean silhouette mapped affinely from [-1, 1] to [0, 1]."""
    labels = result.labels if isinstance(result, ClusterResult) else np.asarray(result)
    k = result.k if isinstance(result, ClusterResult) else int(labels.max()) + 1
    if k < 2:
        raise ParameterError("silhouette needs at least two clusters")
    counts = np.bincount(labels, minlength=k)
    if np.any(counts == 0):
        raise ParameterError(f"empty clusters: {np.flatnonzero(counts == 0).tolist()}")
    return float((silhouette_samples(points, labels).mean() + 1.0) / 2.0)


@dataclass(frozen=True)
class ClusterCountSelection:
    k: int
    scores: dict[int, float] = field(default_factory=dict)


def select_cluster_count(points, k_range: tuple[int, int], seed: int = 0, max_iter: int = 1000,
                         threads: int = 1) -> ClusterCountSelection:
    """Argmax of normalized silhouette over ``k_range`` (inclusive); ties go to smaller K.

    Each K is clustered with seed ``seed + K``.
    """
    X = np.asarray(points, dtype=np.float64)
    n = X.shape[0]
    k_lo, k_hi = int(k_range[0]), int(k_range[1])
    if k_lo < 2 or k_hi > n - 1 or k_lo > k_hi:
        raise ParameterError(f"k_range must lie within [2, {n - 1}], got {k_range}")
    ks = list(range(k_lo, k_hi + 1))

    def score(k):
        res = kmeans_pp(X, k, max_iter=max_iter, seed=seed + k)
        if res.empty_clusters:
            return 0.0
        return silhouette(X, res)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            values = list(pool.map(score, ks))
    else:
        values = [score(k) for k in ks]
    scores = dict(zip(ks, values))
    best = max(ks, key=lambda k: (scores[k], -k))
    return ClusterCountSelection(best, scores)


@dataclass(frozen=True, eq=False)
class CfcResult:
    clusters: ClusterResult
    features: tuple[FeatureVector, ...]
    compressed: CompressedFeatures | None
    selection: ClusterCountSelection | None
    silhouette: float | None

    @property
    def assignment(self) -> dict[str, int]:
        return self.clusters.assignment

    def members(self) -> list[list[str]]:
        return self.clusters.members()


def cfc(dataset: Dataset, k: int | str = "auto", energy_target: float = 0.90, seed: int = 0,
        k_range: tuple[int, int] | None = None, max_iter: int = 1000, threads: int = 1) -> CfcResult:
    """Compressed-features clustering: features -> POD -> (silhouette K) -> k-means++."""
    seqs = list(dataset)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            feats = tuple(pool.map(extract_features, seqs))
    else:
        feats = tuple(extract_features(s) for s in seqs)
    ids = tuple(s.id for s in seqs)
    n = len(seqs)
    if n == 1:
        if k not in ("auto", 1):
            raise ParameterError(f"a single sequence supports only K=1, got {k}")
        res = ClusterResult(labels=np.zeros(1, dtype=int), centroids=np.zeros((1, 1)),
                            inertia=0.0, iterations=0, ids=ids)
        return CfcResult(res, feats, None, None, None)
    comp = compress(feats, energy_target)
    selection = None
    if k == "auto":
        if n < 3:
            raise ParameterError("automatic K needs at least three sequences")
        k_range = k_range or (2, min(30, n - 1))
        selection = select_cluster_count(comp.z, k_range, seed=seed, max_iter=max_iter, threads=threads)
        k_final = selection.k
        run_seed = seed + k_final
    else:
        k_final = int(k)
        run_seed = seed
    res = kmeans_pp(comp.z, k_final, max_iter=max_iter, seed=run_seed)
    res = ClusterResult(
        labels=res.labels, centroids=res.centroids, inertia=res.inertia, iterations=res.iterations,
        inertia_history=res.inertia_history, ids=ids, empty_clusters=res.empty_clusters,
        converged=res.converged,
    )
    sil = silhouette(comp.z, res) if k_final >= 2 and not res.empty_clusters else None
    return CfcResult(res, feats, comp, selection, sil)
