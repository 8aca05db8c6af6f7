"""Command-line front end: ``qagnn <command> -c run.ini [--set section.key=value ...]``.

Every command reads the same config file and writes machine-readable outputs
(CSV/JSON) into ``[output] dir``.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .config import RunConfig, load_config
from .data import FlowTable, PipelineError, preprocess, read_csv
from .feature_map import (
    UnsupportedBackend,
    fidelity_gram,
    fourier_spectrum_probe,
    pauli_gram,
)
from .graph import build_graph, graph_stats, hop_operators, read_node_table, save_graph, write_node_table
from .metrics import evaluate, format_table
from .model import VARIANTS, encode, forward, init_params, predict
from .synthetic import write_flow_csv
from .training import TrainingError, train

log = logging.getLogger("qagnn")
SPLITS = ("train", "val", "test")


class CliError(Exception):
    pass


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _load_splits(cfg: RunConfig) -> dict:
    out = {}
    for name in SPLITS:
        path = cfg.out_dir / f"{name}.csv"
        if not path.exists():
            raise CliError(f"{path} not found; run 'qagnn preprocess' first")
        ids, X, y = read_node_table(path)
        out[name] = FlowTable(ids, X, y)
    return out


def _graphs(cfg: RunConfig, splits: dict, threshold=None):
    t = cfg.graph.threshold if threshold is None else threshold
    graphs, hops = {}, {}
    for name, tab in splits.items():
        g = build_graph(tab.features, tab.labels, tab.node_ids, t, self_loops=cfg.graph.self_loops)
        graphs[name] = g
        hops[name] = hop_operators(g, cfg.graph.mask_two_hop_diagonal)
    return graphs, hops


def _init(cfg: RunConfig, variant: str, n_features: int):
    return init_params(cfg.encoder, variant, hidden=cfg.model.hidden, seed=cfg.train.seed,
                       n_features=n_features, activation=cfg.model.activation)


def _fit(cfg: RunConfig, graphs, hops, variant: str):
    n_features = graphs["train"].features.shape[1]
    return train(graphs["train"], graphs["val"], _init(cfg, variant, n_features), cfg.train,
                 cfg.encoder, hops["train"], hops["val"])


def _score(cfg: RunConfig, graph, hops, params):
    return evaluate(graph.labels, predict(forward(graph, hops, params, cfg.encoder)))


def _model_params(cfg: RunConfig, args, n_features: int):
    if getattr(args, "model", None):
        path = Path(args.model)
        if not path.exists():
            raise CliError(f"model file {path} not found")
        return io.load_model(path)[0]
    return _init(cfg, cfg.model.variant, n_features)


# ---------------------------------------------------------------------------
# commands

def cmd_synth(cfg: RunConfig, args) -> dict:
    path = Path(args.output)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_flow_csv(path, n_nodes=args.nodes, n_features=args.features,
                   flows_per_pair=args.flows_per_pair, seed=args.seed, label_noise=args.label_noise)
    return {"written": str(path)}


def cmd_preprocess(cfg: RunConfig, args) -> dict:
    if cfg.data_path is None:
        raise CliError("no dataset path: set [data] path")
    if not cfg.data_path.exists():
        raise CliError(f"dataset {cfg.data_path} not found")
    try:
        result = preprocess(read_csv(cfg.data_path, cfg.data.src_column, cfg.data.dst_column,
                                     cfg.data.label_column), cfg.data)
    except (PipelineError, ValueError) as exc:
        raise CliError(str(exc)) from exc
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    for name, tab in result.splits.items():
        write_node_table(cfg.out_dir / f"{name}.csv", tab.node_ids, tab.features, tab.labels)
    _write_json(cfg.out_dir / "manifest.json", result.manifest)
    return result.manifest


def cmd_train(cfg: RunConfig, args) -> dict:
    splits = _load_splits(cfg)
    graphs, hops = _graphs(cfg, splits)
    _write_json(cfg.out_dir / "graph_stats.json", graph_stats(graphs))
    for name, g in graphs.items():
        save_graph(g, cfg.out_dir / f"edges_{name}.csv", cfg.out_dir / f"nodes_{name}.csv")
    report = _fit(cfg, graphs, hops, cfg.model.variant)
    n_features = graphs["train"].features.shape[1]
    io.save_model(cfg.out_dir / "model.json", report.params, cfg.encoder, n_features)
    report.write_loss_csv(cfg.out_dir / "loss.csv")
    doc = report.to_json()
    doc["test_metrics"] = _score(cfg, graphs["test"], hops["test"], report.params).to_json()
    _write_json(cfg.out_dir / "train_report.json", doc)
    return {k: doc[k] for k in ("epochs_run", "best_epoch", "stop_reason", "variant")}


def cmd_evaluate(cfg: RunConfig, args) -> dict:
    path = Path(args.model)
    if not path.exists():
        raise CliError(f"model file {path} not found")
    params, _ = io.load_model(path)
    splits = _load_splits(cfg)
    graphs, hops = _graphs(cfg, splits)
    rep = _score(cfg, graphs[args.split], hops[args.split], params)
    _write_json(cfg.out_dir / f"metrics_{args.split}.json", rep.to_json())
    table = format_table({f"{params.variant} ({args.split})": rep})
    (cfg.out_dir / f"metrics_{args.split}.txt").write_text(table + "\n")
    print(table)
    return rep.to_json()


def cmd_threshold_sweep(cfg: RunConfig, args) -> dict:
    thresholds = [float(t) for t in args.thresholds.split(",") if t.strip()] if args.thresholds else []
    if not thresholds:
        raise CliError("empty threshold list")
    splits = _load_splits(cfg)
    rows = []
    for t in thresholds:
        graphs, hops = _graphs(cfg, splits, t)
        rep = _fit(cfg, graphs, hops, cfg.model.variant)
        m = _score(cfg, graphs["test"], hops["test"], rep.params)
        rows.append({"threshold": t, "f1": m.f1, "fpr": m.fpr,
                     "train_edges": graphs["train"].n_edges, "best_epoch": rep.best_epoch})
    with open(cfg.out_dir / "threshold_sweep.csv", "w") as fh:
        fh.write("threshold,f1,fpr\n")
        for r in rows:
            fh.write(f"{r['threshold']:.2f},{r['f1']:.3f},{r['fpr']:.3f}\n")
    _write_json(cfg.out_dir / "threshold_sweep.json", rows)
    return {"rows": rows}


def cmd_embed(cfg: RunConfig, args) -> dict:
    tab = _load_splits(cfg)[args.split]
    params = _model_params(cfg, args, tab.features.shape[1])
    Z = encode(tab.features, params, cfg.encoder)
    path = cfg.out_dir / f"embeddings_{args.split}.csv"
    io.write_embeddings(path, tab.node_ids, Z, tab.labels)
    return {"written": str(path), "nodes": len(tab)}


def cmd_kernel(cfg: RunConfig, args) -> dict:
    tab = _load_splits(cfg)[args.split]
    params = _model_params(cfg, args, tab.features.shape[1])
    if params.theta is None:
        raise CliError("kernels need a quantum model variant")
    out = {}
    if args.kind in ("pauli", "both"):
        path = cfg.out_dir / f"kernel_pauli_{args.split}.csv"
        io.write_matrix(path, tab.node_ids, pauli_gram(tab.features, params.theta, cfg.encoder))
        out["pauli"] = str(path)
    if args.kind in ("fidelity", "both"):
        enc = replace(cfg.encoder, backend="statevector", noise_p=0.0)
        path = cfg.out_dir / f"kernel_fidelity_{args.split}.csv"
        io.write_matrix(path, tab.node_ids, fidelity_gram(tab.features, params.theta, enc))
        out["fidelity"] = str(path)
    return out


def cmd_spectrum(cfg: RunConfig, args) -> dict:
    n = cfg.encoder.n_qubits
    params = _model_params(cfg, args, n)
    if params.theta is None:
        raise CliError("spectrum probing needs a quantum model variant")
    base = np.full(n, 0.5) if args.base is None else np.array([float(v) for v in args.base.split(",")])
    spectra = {k: fourier_spectrum_probe(params.theta, cfg.encoder, k, base, args.samples, args.qubit)
               for k in range(n)}
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.out_dir / "spectrum.csv"
    io.write_spectra(path, spectra)
    return {"written": str(path),
            "max_relative_out_of_set": max(s.relative_out_of_set for s in spectra.values())}


def cmd_ablate(cfg: RunConfig, args) -> dict:
    splits = _load_splits(cfg)
    graphs, hops = _graphs(cfg, splits)
    variants = args.variants.split(",") if args.variants else list(VARIANTS)
    reports, rows = {}, []
    for v in variants:
        if v not in VARIANTS:
            raise CliError(f"unknown variant {v!r}")
        rep = _fit(cfg, graphs, hops, v)
        m = _score(cfg, graphs["test"], hops["test"], rep.params)
        reports[v] = m
        rows.append({"variant": v, "best_epoch": rep.best_epoch, **m.to_json()})
    table = format_table(reports)
    (cfg.out_dir / "ablation.txt").write_text(table + "\n")
    _write_json(cfg.out_dir / "ablation.json", rows)
    print(table)
    return {"variants": variants}


COMMANDS = {
    "synth": cmd_synth,
    "preprocess": cmd_preprocess,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "threshold-sweep": cmd_threshold_sweep,
    "embed": cmd_embed,
    "kernel": cmd_kernel,
    "spectrum": cmd_spectrum,
    "ablate": cmd_ablate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="INI run configuration")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override a config value (repeatable)")
    common.add_argument("--out", help="output directory (overrides [output] dir)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="qagnn", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="write a synthetic two-cluster flow CSV")
    s.add_argument("output")
    s.add_argument("--nodes", type=int, default=150)
    s.add_argument("--features", type=int, default=4)
    s.add_argument("--flows-per-pair", type=int, default=1)
    s.add_argument("--label-noise", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)

    sub.add_parser("preprocess", parents=[common], help="clean, aggregate, scale, reduce and split")
    sub.add_parser("train", parents=[common], help="train on the preprocessed splits")

    s = sub.add_parser("evaluate", parents=[common], help="score a saved model")
    s.add_argument("--model", required=True)
    s.add_argument("--split", choices=SPLITS, default="test")

    s = sub.add_parser("threshold-sweep", parents=[common], help="retrain per graph threshold")
    s.add_argument("--thresholds", default="0.6,0.7,0.8,0.9,0.95")

    for name, extra in (("embed", None), ("kernel", "kind"), ("spectrum", "spectrum")):
        s = sub.add_parser(name, parents=[common])
        s.add_argument("--model", help="trained model file (default: seeded initial parameters)")
        if name != "spectrum":
            s.add_argument("--split", choices=SPLITS, default="test")
        if extra == "kind":
            s.add_argument("--kind", choices=("pauli", "fidelity", "both"), default="both")
        if extra == "spectrum":
            s.add_argument("--samples", type=int, default=256)
            s.add_argument("--qubit", type=int, default=0)
            s.add_argument("--base", help="comma-separated base point (default 0.5 everywhere)")

    s = sub.add_parser("ablate", parents=[common], help="train and score every model variant")
    s.add_argument("--variants", help="comma-separated subset (default: all seven)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.set)
        if args.out:
            cfg.out_dir = Path(args.out)
        if args.command != "synth":
            cfg.out_dir.mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            result = COMMANDS[args.command](cfg, args)
    except (CliError, KeyError, ValueError, FileNotFoundError, UnsupportedBackend) as exc:
        print(f"qagnn {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except TrainingError as exc:
        print(f"qagnn {args.command}: training aborted: {exc}", file=sys.stderr)
        return 1
    if args.verbose:
        print(json.dumps(result, indent=2, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
