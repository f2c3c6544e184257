"""End-to-end run: cluster, choose embeddings per cluster, fit, forecast, fit forcing statistics.

Every file written goes through :class:`Artifacts`, which records the stage
that produced it. ``manifest.json`` lists them all together with the resolved
configuration. A run that fails leaves its files in place plus a
``.partial`` marker naming the stage and sequence.
"""
from __future__ import annotations

import hashlib
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from havokts import __version__
from havokts.clustering import cfc
from havokts.config import PipelineConfig
from havokts.distributions import best_fit, shift_positive
from havokts.embedding import EmbeddingConfig, select_delay, select_dimension
from havokts.errors import ConfigError, HavokError, InsufficientDataError
from havokts.features import FEATURE_NAMES
from havokts.forecast import error_evolution, forcing_active, simulate
from havokts.havok import HavokModel, fit_havok, model_to_dict
from havokts.serialize import dumps, write_csv, write_json
from havokts.signal import CsvSchema, Dataset, Sequence, load_dataset, split
from havokts.synthetic import demo_corpus
from havokts.wavelet import cwt_scalogram

MANIFEST = "manifest.json"
PARTIAL = ".partial"


class StageFailure(Exception):
    def __init__(self, stage: str, seq_id: str | None, cause: HavokError):
        where = f"stage {stage}" + (f", sequence {seq_id}" if seq_id else "")
        super().__init__(f"{where}: {cause}")
        self.stage, self.seq_id, self.cause = stage, seq_id, cause
        self.exit_code = cause.exit_code


class Artifacts:
    """Single writer for an output directory; remembers each file's stage."""

    def __init__(self, root):
        self.root = Path(root)
        self.files: dict[str, str] = {}

    def _claim(self, rel: str, stage: str) -> Path:
        if rel in self.files:
            raise RuntimeError(f"artifact {rel} written twice")
        self.files[rel] = stage
        return self.root / rel

    def csv(self, rel, stage, header, rows):
        write_csv(self._claim(rel, stage), header, rows)

    def json(self, rel, stage, obj):
        write_json(self._claim(rel, stage), obj)

    def manifest(self, config: dict, status: str, extra: dict | None = None):
        entries = []
        for rel in sorted(self.files):
            digest = hashlib.sha256((self.root / rel).read_bytes()).hexdigest()
            entries.append({"path": rel, "stage": self.files[rel], "sha256": digest})
        entries.append({"path": MANIFEST, "stage": "manifest", "sha256": None})
        entries.sort(key=lambda e: e["path"])
        body = {"version": __version__, "status": status, "config": config, "artifacts": entries}
        if extra:
            body.update(extra)
        (self.root / MANIFEST).write_text(dumps(body))


def split_index(n: int, split_value) -> int:
    if isinstance(split_value, float) and split_value < 1:
        idx = int(np.floor(split_value * n + 0.5))
    else:
        idx = int(split_value)
    if not 1 <= idx < n:
        raise InsufficientDataError(f"split {split_value!r} leaves no training or test samples (n = {n})")
    return idx


def median_half_up(values) -> int:
    return int(np.floor(np.median(np.asarray(values, dtype=np.float64)) + 0.5))


def default_frequencies(dt: float, duration: float, n: int) -> np.ndarray:
    """Log-spaced from two cycles per record up to 80% of the Nyquist frequency."""
    lo = 2.0 / duration
    hi = 0.4 / dt
    return np.geomspace(lo, hi, n) if hi > lo else np.array([hi])


def load_input(cfg: PipelineConfig) -> Dataset:
    i = cfg.input
    if i.source == "demo":
        return demo_corpus(i.n_per_family, seed=cfg.seed, dt=i.demo_dt, n_samples=i.n_samples)
    if not i.path:
        raise ConfigError("input.path is required when input.source = \"csv\"")
    schema = CsvSchema(layout=i.layout, dt=i.dt, time_column=i.time_column,
                       id_column=i.id_column, value_column=i.value_column)
    return load_dataset(i.path, schema)


@dataclass
class PipelineResult:
    out: Path
    n_clusters: int
    models: dict
    exit_code: int = 0


def _map(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _per_sequence(stage, fn, seqs, threads):
    def wrapped(s):
        try:
            return fn(s)
        except HavokError as exc:
            raise StageFailure(stage, s.id, exc) from exc
    return _map(wrapped, seqs, threads)


def run_pipeline(cfg: PipelineConfig, out=None) -> PipelineResult:
    """Run every stage; raises :class:`StageFailure` after marking the directory partial."""
    root = Path(out or cfg.out)
    if root.exists():
        # only replace a previous run's output, never an unrelated directory
        if not root.is_dir() or (any(root.iterdir()) and not (root / MANIFEST).is_file()):
            raise ConfigError(f"output directory {root} exists and is not a previous havokts run")
        shutil.rmtree(root)
    root.mkdir(parents=True)
    art = Artifacts(root)
    stage = "load"
    try:
        try:
            data = load_input(cfg)
        except HavokError as exc:
            raise StageFailure(stage, None, exc) from exc
        res = _run(cfg, data, art)
        art.manifest(cfg.to_dict(), "complete", {"sequences": len(data), "clusters": res.n_clusters})
        return res
    except StageFailure as exc:
        (root / PARTIAL).write_text(f"{exc}\n")
        art.files[PARTIAL] = exc.stage
        art.manifest(cfg.to_dict(), "partial", {"error": str(exc)})
        raise


def _run(cfg: PipelineConfig, data: Dataset, art: Artifacts) -> PipelineResult:
    seqs = list(data)
    threads = cfg.threads

    # cluster
    stage = "cluster"
    try:
        k = cfg.clustering.k
        k_range = None
        if k == "auto" and len(seqs) >= 3:
            k_hi = cfg.clustering.k_max or min(30, len(seqs) - 1)
            k_range = (cfg.clustering.k_min, min(k_hi, len(seqs) - 1))
        cres = cfc(data, k=k, energy_target=cfg.clustering.energy_target, seed=cfg.seed,
                   k_range=k_range, max_iter=cfg.clustering.max_iter, threads=threads)
    except HavokError as exc:
        raise StageFailure(stage, None, exc) from exc
    assign = cres.assignment
    art.csv("cluster/clusters.csv", stage, ["id", "cluster"], [(i, assign[i]) for i in data.ids])
    art.csv("cluster/features.csv", stage, ["id", *FEATURE_NAMES], [(fv.id, *fv.f) for fv in cres.features])
    if cres.compressed is not None:
        comp = cres.compressed
        art.csv("cluster/compressed.csv", stage, ["id", *[f"z{j + 1}" for j in range(comp.rank)]],
                [(i, *comp.z[n]) for n, i in enumerate(comp.ids)])
        art.csv("cluster/pod_energy.csv", stage, ["mode", "eigenvalue", "cumulative_energy"],
                [(j + 1, lam, e) for j, (lam, e) in enumerate(zip(comp.eigenvalues, comp.cumulative_energy))])
    summary = {"k": cres.clusters.k, "silhouette": cres.silhouette, "inertia": cres.clusters.inertia,
               "iterations": cres.clusters.iterations, "converged": cres.clusters.converged,
               "pod_rank": cres.compressed.rank if cres.compressed is not None else None,
               "pod_energy": cres.compressed.energy if cres.compressed is not None else None}
    if cres.selection is not None:
        summary["silhouette_by_k"] = {str(kk): v for kk, v in cres.selection.scores.items()}
    art.json("cluster/summary.json", stage, summary)

    # split, then choose embedding parameters on the training parts
    stage = "embed"
    parts = {}
    for s in seqs:
        try:
            parts[s.id] = split(s, split_index(len(s), cfg.forecast.split))
        except HavokError as exc:
            raise StageFailure(stage, s.id, exc) from exc
    e = cfg.embedding

    def choose(s: Sequence):
        train = parts[s.id][0]
        dsel = select_delay(train, e.tau_max, e.bins) if e.tau == "auto" else None
        tau = dsel.tau if dsel is not None else int(e.tau)
        msel = (select_dimension(train, tau, e.d_max, e.drop_threshold, e.r_tol, e.a_tol)
                if e.dim == "auto" else None)
        dim = msel.dim if msel is not None else int(e.dim)
        return tau, dim, dsel, msel

    choices = dict(zip(data.ids, _per_sequence(stage, choose, seqs, threads)))
    rows, ami_rows, fnn_rows = [], [], []
    for sid, (tau, dim, dsel, msel) in choices.items():
        rows.append((sid, assign[sid], tau, dim,
                     dsel.local_minimum if dsel else None, msel.dropped if msel else None))
        if dsel is not None:
            ami_rows += [(sid, int(t), v) for t, v in zip(dsel.taus, dsel.curve)]
        if msel is not None:
            fnn_rows += [(sid, int(d), v) for d, v in zip(msel.dims, msel.curve)]
    art.csv("embed/sequences.csv", stage, ["id", "cluster", "tau", "dim", "ami_local_minimum", "fnn_dropped"], rows)
    if ami_rows:
        art.csv("embed/ami.csv", stage, ["id", "tau", "ami"], ami_rows)
    if fnn_rows:
        art.csv("embed/fnn.csv", stage, ["id", "dim", "fnn_percent"], fnn_rows)
    cluster_cfg = {}
    for c in sorted(set(assign.values())):
        members = [sid for sid in data.ids if assign[sid] == c]
        cluster_cfg[c] = EmbeddingConfig(median_half_up([choices[m][0] for m in members]),
                                         median_half_up([choices[m][1] for m in members]))
    art.csv("embed/clusters.csv", stage, ["cluster", "tau", "dim", "members"],
            [(c, ec.tau, ec.dim, sum(1 for v in assign.values() if v == c)) for c, ec in cluster_cfg.items()])

    # fit
    stage = "fit"

    def fit_one(s: Sequence) -> HavokModel:
        return fit_havok(parts[s.id][0], cluster_cfg[assign[s.id]], cfg.model.r, cfg.model.lam, cfg.model.eps)

    models = dict(zip(data.ids, _per_sequence(stage, fit_one, seqs, threads)))
    for sid, m in models.items():
        art.json(f"fit/{sid}.json", stage, model_to_dict(m))

    # forecast
    stage = "forecast"
    fc = cfg.forecast

    def forecast_one(s: Sequence):
        m = models[s.id]
        train, test = parts[s.id]
        n_cols = test.values.size - m.embedding.span
        if n_cols < 2:
            raise InsufficientDataError(
                f"test part has {test.values.size} samples; the embedding spans {m.embedding.span + 1}")
        horizon = min(fc.horizon or n_cols, n_cols)
        vt = m.project(test.values)
        res = simulate(m, vt[0, : m.r - 1], vt[:, m.r - 1], horizon, mode=fc.forcing)
        return res, test.values[:horizon]

    outcomes = dict(zip(data.ids, _per_sequence(stage, forecast_one, seqs, threads)))
    dt = data.dt
    for sid, (res, truth) in outcomes.items():
        start = len(parts[sid][0])
        art.csv(f"forecast/{sid}.csv", stage, ["step", "t", "truth", "x_hat", "forcing"],
                [(j, (start + j) * dt, truth[j], res.x_hat[j], res.forcing[j]) for j in range(res.horizon)])
        iv = forcing_active(models[sid].forcing, fc.threshold, fc.merge_gap)
        art.json(f"forecast/{sid}_forcing_intervals.json", stage,
                 {"threshold": fc.threshold, "merge_gap": fc.merge_gap, "intervals": [list(p) for p in iv]})
    common = min(r.horizon for r, _ in outcomes.values())
    ev = error_evolution(np.vstack([r.x_hat[:common] for r, _ in outcomes.values()]),
                         np.vstack([t[:common] for _, t in outcomes.values()]),
                         [t for t in fc.histogram_instants if t < common], fc.histogram_bins)
    art.csv("forecast/errors.csv", stage, ["step", "t", "rmse", "mae", "vae"],
            [(int(j), j * dt, a, b, c) for j, a, b, c in zip(ev.time, ev.rmse, ev.mae, ev.vae)])
    if ev.histograms:
        hrows = []
        for t, (counts, edges) in ev.histograms.items():
            hrows += [(t, edges[b], edges[b + 1], int(counts[b])) for b in range(counts.size)]
        art.csv("forecast/error_histograms.csv", stage, ["step", "left", "right", "count"], hrows)
    if fc.scalogram:
        for s in seqs:
            train = parts[s.id][0]
            freqs = (np.asarray(fc.frequencies, dtype=np.float64) if fc.frequencies
                     else default_frequencies(dt, len(train) * dt, fc.n_frequencies))
            try:
                W = cwt_scalogram(train, freqs)
            except HavokError as exc:
                raise StageFailure(stage, s.id, exc) from exc
            art.csv(f"forecast/{s.id}_scalogram.csv", stage, ["frequency", *[f"t{j}" for j in range(W.shape[1])]],
                    [(f, *row) for f, row in zip(freqs, W)])

    # forcing statistics
    stage = "stats"
    st = cfg.stats

    def stats_one(s: Sequence):
        u = models[s.id].forcing
        samples = shift_positive(u) if st.shift else u
        return samples, best_fit(samples, st.families, st.significance)

    tables = dict(zip(data.ids, _per_sequence(stage, stats_one, seqs, threads)))
    for sid, (samples, table) in tables.items():
        write_stats(art, f"stats/{sid}", stage, samples, table, st.bins)

    return PipelineResult(art.root, cres.clusters.k, models)


def ks_rows(table):
    rows = []
    for rank, (fd, rep) in enumerate(table, start=1):
        rows.append((rank, fd.family, fd.describe(), rep.decision, rep.p_value, rep.statistic,
                     fd.loglik, rep.n, ""))
    for fam, why in table.skipped.items():
        rows.append(("", fam, "", "Skipped", None, None, None, None, why))
    return rows


KS_HEADER = ["rank", "family", "parameters", "result", "p_value", "ks_statistic", "loglik", "n", "note"]


def histogram_rows(samples, fd, bins):
    counts, edges = np.histogram(samples, bins=bins, density=True)
    mids = 0.5 * (edges[:-1] + edges[1:])
    pdf = np.exp(fd.logpdf(mids))
    return [(edges[b], edges[b + 1], counts[b], pdf[b]) for b in range(counts.size)]


def write_stats(art: Artifacts, stem: str, stage: str, samples, table, bins: int):
    prefix = f"{stem}_" if stem else ""
    art.csv(f"{prefix}ks_table.csv", stage, KS_HEADER, ks_rows(table))
    fd = table.best[0]
    art.csv(f"{prefix}histogram.csv", stage, ["left", "right", "density", f"{fd.family}_pdf"],
            histogram_rows(samples, fd, bins))
