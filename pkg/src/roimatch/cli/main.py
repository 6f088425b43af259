"""``roimatch`` command line: build-graphs, synth, train, eval, explain, sweep.

Exit codes: 0 success, 1 partial data failure, 2 usage or config error,
3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from ..features import read_precomputed, read_subject_table
from ..graphio import (
    DEFAULT_VOCABULARY,
    SplitError,
    load_manifest,
    make_split,
    save_graph,
    split_from_manifest,
    write_manifest,
)
from ..net import NetConfig
from ..numcore import CheckpointError, NumericError
from ..pipeline import (
    Model,
    SweepGrid,
    TrainConfig,
    TrainingError,
    build_subject_graph,
    compare_edge_builders,
    derive_seed,
    evaluate,
    feature_importance,
    run_protocol,
    sweep,
    topk_eval,
    train,
    write_edge_csv,
    write_importance_csv,
    write_sweep_csv,
    write_topk_csv,
)
from ..synthgen import SpecError, generate, write_cohort
from .config import ConfigError, load_file, parse_set, resolve, synth_spec, write_snapshot

log = logging.getLogger("roimatch")

EXIT_OK, EXIT_PARTIAL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _atomic_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)


def train_config(cfg: dict) -> TrainConfig:
    t = cfg["train"]
    return TrainConfig(steps=t["steps"], batch_size=t["batch_size"], theta_test=cfg["eval"]["theta"],
                       theta_explain=cfg["explain"]["theta"], seed=cfg["run"]["seed"],
                       repeat_count=cfg["run"]["repeat"], learning_rate=t["learning_rate"],
                       beta1=t["beta1"], beta2=t["beta2"], epsilon=t["epsilon"],
                       net=NetConfig(**cfg["net"]))


def _require(cfg: dict, key: str) -> Path:
    value = cfg["paths"][key]
    if not value:
        raise UsageError(f"paths.{key} is required (flag --{key.replace('_', '-')} or config file)")
    path = Path(value)
    if not path.exists():
        raise UsageError(f"{key} not found: {path}")
    return path


def _graphs_and_split(cfg: dict):
    graphs, doc = load_manifest(_require(cfg, "manifest"))
    if doc.get("split"):
        split = split_from_manifest(graphs, doc)
    else:
        split = make_split(sorted(graphs.values(), key=lambda g: g.graph_id), cfg["split"]["template_frac"],
                           cfg["split"]["train_frac"], derive_seed(cfg["run"]["seed"], 0, 0))
    return graphs, split


def _load_model(cfg: dict) -> Model:
    path = _require(cfg, "checkpoint")
    try:
        return Model.load(path)
    except CheckpointError as exc:
        raise UsageError(str(exc)) from exc


# -- commands ----------------------------------------------------------------
def cmd_build_graphs(cfg: dict, out: Path) -> int:
    ann_dir = _require(cfg, "annotation_dir")
    subjects = read_subject_table(_require(cfg, "subject_csv")) if cfg["paths"]["subject_csv"] else {}
    pre = read_precomputed(_require(cfg, "precomputed_csv")) if cfg["paths"]["precomputed_csv"] else None
    g = cfg["graph"]
    params = {"k": g["k"]} if g["method"] == "knn" else {"threshold": g["threshold"]} if g["method"] == "distance" else {}
    files, graphs, errors = {}, [], []
    for path in sorted(ann_dir.glob("*.json")):
        try:
            graph = build_subject_graph(path, subjects.get(path.stem), pre, g["method"], params,
                                        g["levels"], DEFAULT_VOCABULARY, g["unknown_labels"])
        except (ValueError, OSError) as exc:
            errors.append(f"{path.name}: {exc}")
            log.error("%s: %s", path.name, exc)
            continue
        rel = f"graphs/{graph.graph_id}.json"
        save_graph(graph, out / rel)
        files[graph.graph_id] = rel
        graphs.append(graph)
    split = None
    try:
        if graphs:
            split = make_split(graphs, cfg["split"]["template_frac"], cfg["split"]["train_frac"],
                               derive_seed(cfg["run"]["seed"], 0, 0))
    except SplitError as exc:
        log.warning("manifest written without a split: %s", exc)
    write_manifest(out / "manifest.json", files, split)
    _atomic_text(out / "errors.log", "".join(e + "\n" for e in errors))
    log.info("built %d graph(s), %d failure(s)", len(graphs), len(errors))
    return EXIT_PARTIAL if errors else EXIT_OK


def cmd_synth(cfg: dict, out: Path) -> int:
    spec = synth_spec(cfg)
    graphs, meta = generate(spec)
    split = make_split(graphs, cfg["split"]["template_frac"], cfg["split"]["train_frac"],
                       derive_seed(cfg["run"]["seed"], 0, 0)) if _has_both_classes(graphs) else None
    write_cohort(graphs, meta, out, split)
    log.info("wrote %d synthetic graph(s) to %s", len(graphs), out)
    return EXIT_OK


def _has_both_classes(graphs) -> bool:
    return len({g.subject_label for g in graphs}) == 2


def cmd_train(cfg: dict, out: Path) -> int:
    _, split = _graphs_and_split(cfg)
    tc = train_config(cfg)
    seed = cfg["run"]["seed"]
    model, losses = train(split.train, tc, derive_seed(seed, 0, 1), derive_seed(seed, 0, 2),
                          progress=_progress(tc.steps))
    model.metadata["split_seed"] = split.seed
    model.save(out / "model.ckpt")
    lines = ["step,loss\n"] + [f"{i},{v!r}\n" for i, v in enumerate(losses)]
    _atomic_text(out / "loss.csv", "".join(lines))
    return EXIT_OK


def _progress(total: int):
    every = max(1, total // 20)

    def report(step, loss):
        if step % every == 0 or step == total - 1:
            log.info("step %d/%d loss %.6f", step + 1, total, loss)
    return report


def cmd_eval(cfg: dict, out: Path) -> int:
    tc = train_config(cfg)
    if cfg["eval"]["protocol"]:
        graphs, _ = load_manifest(_require(cfg, "manifest"))
        pool = sorted(graphs.values(), key=lambda g: g.graph_id)
        rep = run_protocol(pool, tc, cfg["run"]["seed"], cfg["run"]["repeat"], cfg["split"]["template_frac"],
                           cfg["split"]["train_frac"],
                           on_run=lambda r, e, m, l: log.info("repeat %d: %s", r, e.csv_row().splitlines()[1]))
        _atomic_text(out / "protocol_report.json", rep.to_json())
        _atomic_text(out / "protocol_summary.csv", rep.summary_csv())
        return EXIT_OK
    _, split = _graphs_and_split(cfg)
    model = _load_model(cfg)
    rep = evaluate(split.test, split.template, model, tc.theta_test, seed=cfg["run"]["seed"],
                   config={"checkpoint": cfg["paths"]["checkpoint"], "theta": tc.theta_test})
    _atomic_text(out / "eval_report.json", rep.to_json())
    _atomic_text(out / "eval_metrics.csv", rep.csv_row())
    sys.stdout.write(rep.csv_row())
    return EXIT_OK


def cmd_explain(cfg: dict, out: Path) -> int:
    _, split = _graphs_and_split(cfg)
    model = _load_model(cfg)
    theta = cfg["explain"]["theta"]
    rows = feature_importance(split.test, split.template, model, theta)
    write_importance_csv(out / "importance.csv", rows)
    results = topk_eval(cfg["explain"]["k_list"], rows, split.test, split.template, model, theta)
    write_topk_csv(out / "topk.csv", results)
    return EXIT_OK


def cmd_sweep(cfg: dict, out: Path) -> int:
    tc = train_config(cfg)
    if cfg["paths"]["manifest"]:
        graphs, _ = load_manifest(_require(cfg, "manifest"))
        pool = sorted(graphs.values(), key=lambda g: g.graph_id)
    else:
        pool, _ = generate(synth_spec(cfg))
    s = cfg["sweep"]
    grid = SweepGrid(M=s["M"], L=s["L"], d=s["d"])
    rows = sweep(pool, grid, tc, cfg["run"]["seed"], cfg["run"]["repeat"],
                 progress=lambda a, b: log.info("M=%d L=%d d=%d: SN %.4f (cross) / %.4f (no cross)",
                                                a.M, a.L, a.d, a.mean_sn, b.mean_sn))
    write_sweep_csv(out / "sweep.csv", rows)
    failed = [r for r in rows if r.error]
    if failed:
        _atomic_text(out / "sweep_errors.log",
                     "".join(f"M={r.M} L={r.L} d={r.d} cross={r.cross_enabled}: {r.error}\n" for r in failed))
    if s["edge_compare"]:
        edge_rows = compare_edge_builders(synth_spec(cfg), tc, cfg["run"]["seed"], cfg["run"]["repeat"],
                                          edge_params={"knn": {"k": cfg["graph"]["k"]},
                                                       "distance": {"threshold": cfg["graph"]["threshold"]}})
        write_edge_csv(out / "edge_comparison.csv", edge_rows)
        failed += [r for r in edge_rows if r.error]
    return EXIT_PARTIAL if failed else EXIT_OK


COMMANDS = {
    "build-graphs": cmd_build_graphs,
    "synth": cmd_synth,
    "train": cmd_train,
    "eval": cmd_eval,
    "explain": cmd_explain,
    "sweep": cmd_sweep,
}


# -- argument parsing --------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    def shared(suppress: bool) -> argparse.ArgumentParser:
        # subcommand copies suppress their defaults so flags given before the
        # subcommand are not reset by it
        keep = {"default": argparse.SUPPRESS} if suppress else {}
        p = argparse.ArgumentParser(add_help=False)
        p.add_argument("--config", help="TOML config file; flags override its values", **keep)
        p.add_argument("--seed", type=int, help="top-level seed (run.seed)", **keep)
        p.add_argument("--out", help="output directory (run.out)", **keep)
        p.add_argument("--repeat", type=int, help="number of derived-seed repeats (run.repeat)", **keep)
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                       help="override any config value; may be repeated",
                       **(keep or {"default": []}))
        p.add_argument("-v", "--verbose", action="store_true", **keep)
        return p

    top, common = shared(False), shared(True)

    parser = argparse.ArgumentParser(prog="roimatch", description=__doc__.splitlines()[0],
                                     parents=[top])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-graphs", parents=[common], help="annotations + subject table -> graphs")
    p.add_argument("--annotation-dir")
    p.add_argument("--subject-csv")
    p.add_argument("--precomputed-csv")
    p.add_argument("--method", choices=["knn", "delaunay", "distance"])
    p.add_argument("--k", type=int)
    p.add_argument("--threshold", type=float)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic cohort")
    p.add_argument("--spec", help="TOML or JSON file with synthetic-cohort fields")

    for name, text in (("train", "train a model"), ("eval", "evaluate a checkpoint"),
                       ("explain", "feature importance and top-K evaluation"),
                       ("sweep", "hyper-parameter sweep with cross-embedding ablation")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--manifest")
        if name in ("eval", "explain"):
            p.add_argument("--checkpoint")
            p.add_argument("--theta", type=float)
        if name in ("train", "eval", "sweep"):
            p.add_argument("--steps", type=int)
            p.add_argument("--batch-size", type=int)
        if name == "eval":
            p.add_argument("--protocol", action="store_true", default=None,
                           help="train and evaluate run.repeat times on derived splits")
        if name == "sweep":
            p.add_argument("--spec", help="synthetic-cohort file used when no manifest is given")
            p.add_argument("--edge-compare", action="store_true", default=None,
                           help="also compare the three edge builders on the synthetic cohort")
    return parser


def _spec_overrides(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"spec file not found: {path}")
    if path.suffix == ".json":
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    else:
        doc = load_file(path)
    return doc.get("synth", doc) if isinstance(doc, dict) else {}


def flag_overrides(args) -> dict:
    o: dict = {}

    def put(section, key, value):
        if value is not None:
            o.setdefault(section, {})[key] = value

    put("run", "seed", args.seed)
    put("run", "out", args.out)
    put("run", "repeat", args.repeat)
    for key in ("annotation_dir", "subject_csv", "precomputed_csv", "manifest", "checkpoint"):
        put("paths", key, getattr(args, key, None))
    put("graph", "method", getattr(args, "method", None))
    put("graph", "k", getattr(args, "k", None))
    put("graph", "threshold", getattr(args, "threshold", None))
    put("train", "steps", getattr(args, "steps", None))
    put("train", "batch_size", getattr(args, "batch_size", None))
    put("eval", "protocol", getattr(args, "protocol", None))
    put("sweep", "edge_compare", getattr(args, "edge_compare", None))
    theta = getattr(args, "theta", None)
    if theta is not None:
        put("explain" if args.command == "explain" else "eval", "theta", theta)
    spec = getattr(args, "spec", None)
    if spec:
        put("paths", "spec", spec)
        for k, v in _spec_overrides(spec).items():
            if k == "seed":
                # a seed in the cohort file acts as run.seed unless --seed was given
                if args.seed is None:
                    put("run", "seed", v)
            else:
                put("synth", k, v)
    for section, values in parse_set(args.set).items():
        for k, v in values.items():
            put(section, k, v)
    return o


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = resolve(args.config, flag_overrides(args))
        if args.command == "synth" or (args.command == "sweep" and not cfg["paths"]["manifest"]):
            synth_spec(cfg).validate()
        train_config(cfg)
        out = Path(cfg["run"]["out"])
        write_snapshot(cfg, out / f"{args.command}.config.toml")
        return COMMANDS[args.command](cfg, out)
    except (ConfigError, UsageError, SpecError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except TrainingError as exc:
        log.error("%s", exc)
        log.error("diagnostics: step=%d last_finite_loss=%r", exc.step, exc.last_finite_loss)
        return EXIT_NUMERIC
    except NumericError as exc:
        log.error("numeric failure: %s", exc)
        return EXIT_NUMERIC
    except ValueError as exc:
        # invalid values reaching the dataclass validators are configuration problems
        log.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
