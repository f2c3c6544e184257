"""Command-line entry point: ``havokts <subcommand>``.

Exit codes: 0 success, 2 configuration or parameter error, 3 data error,
4 numeric or convergence error.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from havokts import __version__
from havokts.clustering import cfc
from havokts.config import PipelineConfig, load_config, validate
from havokts.distributions import best_fit, shift_positive
from havokts.embedding import EmbeddingConfig, select_delay, select_dimension
from havokts.errors import ConfigError, DataError, HavokError
from havokts.features import FEATURE_NAMES
from havokts.forecast import error_evolution, forcing_active, simulate
from havokts.havok import fit_havok, model_from_dict, model_to_dict
from havokts.pipeline import (
    Artifacts, StageFailure, default_frequencies, load_input, run_pipeline, split_index, write_stats,
)
from havokts.serialize import write_csv, write_json
from havokts.signal import Dataset, export_dataset, split
from havokts.synthetic import KINDS, GeneratorSpec, demo_corpus, generate
from havokts.wavelet import cwt_scalogram


def _kv(text: str):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{key}: {value!r} is not a number") from None


def _floats(text: str):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _auto_int(text: str):
    if text == "auto":
        return text
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'auto', got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML configuration; flags override its values")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int)

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--input", type=Path, help="CSV dataset (wide or long layout)")
    data.add_argument("--layout", choices=("auto", "wide", "long"))
    data.add_argument("--dt", type=float, help="sampling step when the file has no time column")

    one = argparse.ArgumentParser(add_help=False)
    one.add_argument("--id", dest="seq_id", help="sequence id (default: the first sequence)")
    one.add_argument("--split", type=float, help="training fraction in (0, 1) or sample index")

    p = argparse.ArgumentParser(prog="havokts", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"havokts {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="write synthetic sequences as CSV")
    g.add_argument("--kind", choices=KINDS, default="lorenz")
    g.add_argument("--n", type=int, default=20000, help="samples per sequence")
    g.add_argument("--sample-dt", type=float, default=0.01)
    g.add_argument("--param", type=_kv, action="append", default=[], metavar="KEY=VALUE")
    g.add_argument("--demo", action="store_true", help="three-family demo corpus instead of one sequence")
    g.add_argument("--per-family", type=int, default=10)
    g.add_argument("--layout", choices=("wide", "long"), default="wide")

    c = sub.add_parser("cluster", parents=[common, data], help="compressed-feature clustering")
    c.add_argument("--k", type=_auto_int)
    c.add_argument("--energy", type=float, help="POD energy target")

    e = sub.add_parser("embed", parents=[common, data], help="AMI delay and FNN dimension per sequence")
    e.add_argument("--tau-max", type=int)
    e.add_argument("--d-max", type=int)

    f = sub.add_parser("fit", parents=[common, data, one], help="fit a HAVOK model to one sequence")
    f.add_argument("--tau", type=_auto_int)
    f.add_argument("--dim", type=_auto_int)
    f.add_argument("--r", help="rank: integer, energy:<share> or hard-threshold")
    f.add_argument("--lambda", dest="lam", type=float)
    f.add_argument("--eps", type=float)

    fc = sub.add_parser("forecast", parents=[common, data, one], help="forecast with a fitted model")
    fc.add_argument("--model", type=Path, required=True, help="model.json from `fit`")
    fc.add_argument("--horizon", type=int)
    fc.add_argument("--forcing", choices=("measured", "zero", "held"))
    fc.add_argument("--forcing-threshold", type=float)
    fc.add_argument("--merge-gap", type=int)
    fc.add_argument("--hist-instants", type=_ints)
    fc.add_argument("--frequencies", type=_floats, help="scalogram frequencies in Hz")

    s = sub.add_parser("stats", parents=[common], help="fit distributions to a forcing series")
    s.add_argument("--model", type=Path, help="model.json whose training forcing is tested")
    s.add_argument("--samples", type=Path, help="one-column file of samples instead of a model")
    s.add_argument("--families", type=lambda t: [x.strip() for x in t.split(",") if x.strip()])
    s.add_argument("--significance", type=float)
    s.add_argument("--no-shift", action="store_true", help="skip the shift to a zero minimum")

    sub.add_parser("pipeline", parents=[common], help="run every stage from a config file")
    return p


def _config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    top = {}
    if args.seed is not None:
        top["seed"] = args.seed
    if args.threads is not None:
        top["threads"] = args.threads
    if args.out is not None:
        top["out"] = str(args.out)
    inp = {}
    if getattr(args, "input", None) is not None:
        inp.update(source="csv", path=str(args.input))
    if getattr(args, "layout", None) is not None and args.command != "generate":
        inp["layout"] = args.layout
    if getattr(args, "dt", None) is not None:
        inp["dt"] = args.dt
    cfg = replace(cfg, input=replace(cfg.input, **inp), **top)
    over = {
        "clustering": {"k": getattr(args, "k", None), "energy_target": getattr(args, "energy", None)},
        "embedding": {"tau_max": getattr(args, "tau_max", None), "d_max": getattr(args, "d_max", None),
                      "tau": getattr(args, "tau", None), "dim": getattr(args, "dim", None)},
        "model": {"r": getattr(args, "r", None), "lam": getattr(args, "lam", None), "eps": getattr(args, "eps", None)},
        "forecast": {"horizon": getattr(args, "horizon", None), "forcing": getattr(args, "forcing", None),
                     "threshold": getattr(args, "forcing_threshold", None),
                     "merge_gap": getattr(args, "merge_gap", None),
                     "histogram_instants": tuple(args.hist_instants) if getattr(args, "hist_instants", None) else None,
                     "frequencies": tuple(args.frequencies) if getattr(args, "frequencies", None) else None,
                     "split": (int(args.split) if getattr(args, "split", None) is not None and args.split >= 1
                               else getattr(args, "split", None))},
        "stats": {"families": tuple(args.families) if getattr(args, "families", None) else None,
                  "significance": getattr(args, "significance", None)},
    }
    for block, vals in over.items():
        vals = {k: v for k, v in vals.items() if v is not None}
        if vals:
            cfg = replace(cfg, **{block: replace(getattr(cfg, block), **vals)})
    if args.command == "stats" and getattr(args, "no_shift", False):
        cfg = replace(cfg, stats=replace(cfg.stats, shift=False))
    return validate(cfg)


def _dataset(cfg: PipelineConfig) -> Dataset:
    i = cfg.input
    if i.source == "csv" and not i.path:
        raise ConfigError("no input: pass --input or set input.path in the config")
    return load_input(cfg)


def _pick(data: Dataset, seq_id):
    return data[seq_id] if seq_id is not None else data[0]


def _out(cfg) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_generate(args, cfg):
    out = _out(cfg)
    if args.demo:
        data = demo_corpus(args.per_family, seed=cfg.seed, dt=args.sample_dt, n_samples=args.n)
    else:
        params = dict(args.param)
        if args.kind != "lorenz":
            params.setdefault("seed", cfg.seed)
        data = Dataset((generate(GeneratorSpec(args.kind, args.sample_dt, args.n, params, id=args.kind)),))
    export_dataset(data, out / "data.csv", layout=args.layout)
    print(out / "data.csv")


def cmd_cluster(args, cfg):
    data = _dataset(cfg)
    out = _out(cfg)
    c = cfg.clustering
    k_range = None
    if c.k == "auto" and len(data) >= 3:
        k_range = (c.k_min, min(c.k_max or 30, len(data) - 1))
    res = cfc(data, k=c.k, energy_target=c.energy_target, seed=cfg.seed, k_range=k_range,
              max_iter=c.max_iter, threads=cfg.threads)
    write_csv(out / "clusters.csv", ["id", "cluster"], sorted(res.assignment.items(), key=lambda kv: data.ids.index(kv[0])))
    write_csv(out / "features.csv", ["id", *FEATURE_NAMES], [(fv.id, *fv.f) for fv in res.features])
    if res.selection is not None:
        write_csv(out / "silhouette.csv", ["k", "silhouette"], sorted(res.selection.scores.items()))
    print(f"K = {res.clusters.k}" + (f", silhouette = {res.silhouette:.4f}" if res.silhouette is not None else ""))


def cmd_embed(args, cfg):
    data = _dataset(cfg)
    out = _out(cfg)
    e = cfg.embedding
    rows, ami_rows, fnn_rows = [], [], []
    for s in data:
        ds = select_delay(s, e.tau_max, e.bins)
        ms = select_dimension(s, ds.tau, e.d_max, e.drop_threshold, e.r_tol, e.a_tol)
        rows.append((s.id, ds.tau, ms.dim, ds.local_minimum, ms.dropped))
        ami_rows += [(s.id, int(t), v) for t, v in zip(ds.taus, ds.curve)]
        fnn_rows += [(s.id, int(d), v) for d, v in zip(ms.dims, ms.curve)]
        print(f"{s.id}: tau = {ds.tau}, dim = {ms.dim}")
    write_csv(out / "embedding.csv", ["id", "tau", "dim", "ami_local_minimum", "fnn_dropped"], rows)
    write_csv(out / "ami.csv", ["id", "tau", "ami"], ami_rows)
    write_csv(out / "fnn.csv", ["id", "dim", "fnn_percent"], fnn_rows)


def _train_test(cfg, s):
    return split(s, split_index(len(s), cfg.forecast.split))


def cmd_fit(args, cfg):
    data = _dataset(cfg)
    s = _pick(data, args.seq_id)
    train, _ = _train_test(cfg, s)
    e = cfg.embedding
    tau = select_delay(train, e.tau_max, e.bins).tau if e.tau == "auto" else int(e.tau)
    dim = (select_dimension(train, tau, e.d_max, e.drop_threshold, e.r_tol, e.a_tol).dim
           if e.dim == "auto" else int(e.dim))
    m = fit_havok(train, EmbeddingConfig(tau, dim), cfg.model.r, cfg.model.lam, cfg.model.eps)
    d = model_to_dict(m)
    d["id"] = s.id
    d["rank_policy"] = str(cfg.model.r)
    d["train_samples"] = len(train)
    write_json(_out(cfg) / "model.json", d)
    print(f"{s.id}: tau = {tau}, dim = {dim}, r = {m.r}, nonzero = {int(m.active.sum())}")


def _read_model(path: Path):
    import json
    try:
        d = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"model file {path} not found") from None
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    return d, model_from_dict(d)


def cmd_forecast(args, cfg):
    d, m = _read_model(args.model)
    data = _dataset(cfg)
    s = _pick(data, args.seq_id if args.seq_id is not None else d.get("id"))
    if abs(s.dt - m.dt) > 1e-9 * m.dt:
        raise DataError(f"sequence dt {s.dt:g} does not match the model's dt {m.dt:g}")
    fcfg = cfg.forecast
    start = int(d["train_samples"]) if args.split is None and "train_samples" in d else split_index(len(s), fcfg.split)
    train, test = split(s, start)
    n_cols = len(test) - m.embedding.span
    if n_cols < 2:
        raise DataError(f"test part has {len(test)} samples; the embedding spans {m.embedding.span + 1}")
    horizon = min(fcfg.horizon or n_cols, n_cols)
    vt = m.project(test.values)
    res = simulate(m, vt[0, : m.r - 1], vt[:, m.r - 1], horizon, mode=fcfg.forcing)
    truth = test.values[:horizon]
    out = _out(cfg)
    write_csv(out / "forecast.csv", ["step", "t", "truth", "x_hat", "forcing"],
              [(j, (start + j) * s.dt, truth[j], res.x_hat[j], res.forcing[j]) for j in range(horizon)])
    # forcing intervals of the test window (the model file keeps no training coordinates)
    iv = forcing_active(vt[:, m.r - 1], fcfg.threshold, fcfg.merge_gap)
    write_json(out / "forcing_intervals.json", {"threshold": fcfg.threshold, "merge_gap": fcfg.merge_gap,
                                                "offset": start, "intervals": [list(p) for p in iv]})
    ev = error_evolution(res.x_hat[None, :], truth[None, :],
                         [t for t in fcfg.histogram_instants if t < horizon], fcfg.histogram_bins)
    write_csv(out / "errors.csv", ["step", "t", "rmse", "mae", "vae"],
              [(int(j), j * s.dt, a, b, c) for j, a, b, c in zip(ev.time, ev.rmse, ev.mae, ev.vae)])
    if ev.histograms:
        hrows = []
        for t, (counts, edges) in ev.histograms.items():
            hrows += [(t, edges[b], edges[b + 1], int(counts[b])) for b in range(counts.size)]
        write_csv(out / "error_histograms.csv", ["step", "left", "right", "count"], hrows)
    freqs = (np.asarray(fcfg.frequencies, dtype=np.float64) if fcfg.frequencies
             else default_frequencies(s.dt, len(s) * s.dt, fcfg.n_frequencies))
    W = cwt_scalogram(s, freqs)
    write_csv(out / "scalogram.csv", ["frequency", *[f"t{j}" for j in range(W.shape[1])]],
              [(fq, *row) for fq, row in zip(freqs, W)])
    sd = train.values.std()
    rmse = float(np.sqrt(np.mean((res.x_hat - truth) ** 2)))
    print(f"{s.id}: horizon = {horizon}, forcing = {fcfg.forcing}, RMSE = {rmse:.6g} ({rmse / sd:.4f} std)")


def cmd_stats(args, cfg):
    if (args.model is None) == (args.samples is None):
        raise ConfigError("pass exactly one of --model or --samples")
    if args.model is not None:
        _, m = _read_model(args.model)
        u = m.forcing
    else:
        try:
            u = np.loadtxt(args.samples, delimiter=",", ndmin=1)
        except (OSError, ValueError) as exc:
            raise DataError(f"{args.samples}: {exc}") from None
    st = cfg.stats
    samples = shift_positive(u) if st.shift else np.asarray(u, dtype=np.float64)
    table = best_fit(samples, st.families, st.significance)
    art = Artifacts(_out(cfg))
    write_stats(art, "", "stats", samples, table, st.bins)
    for fd, rep in table:
        print(f"{fd.family:12s} {rep.decision:9s} p = {rep.p_value:.4g}  {fd.describe()}")
    for fam, why in table.skipped.items():
        print(f"{fam:12s} skipped: {why}")


def cmd_pipeline(args, cfg):
    if not args.config:
        raise ConfigError("pipeline needs --config")
    res = run_pipeline(cfg)
    print(f"{res.out}: {len(res.models)} models, {res.n_clusters} clusters")


COMMANDS = {
    "generate": cmd_generate, "cluster": cmd_cluster, "embed": cmd_embed, "fit": cmd_fit,
    "forecast": cmd_forecast, "stats": cmd_stats, "pipeline": cmd_pipeline,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        COMMANDS[args.command](args, cfg)
    except StageFailure as exc:
        print(f"havokts: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except HavokError as exc:
        print(f"havokts: error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
