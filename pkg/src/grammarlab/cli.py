"""Command-line interface.

Subcommands: gen-data, train, eval, sweep, report, ted, grammar-dump.
Every flag mirrors a config-file key; ``sweep --config file.cfg`` reads
the same keys from a plain-text key/value file with include support.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import configfile, presets
from .dataset import DatasetConfig, build, write_bundle
from .grammar import TaskKind, default_grammar, parse_shape_sexpr, shape_of
from .harness import (
    ExperimentConfig,
    load_bundle,
    read_results_csv,
    run_one,
    run_sweep,
)
from .metrics import ted
from .reports import KINDS, emit_report
from .tokenizer import Tokenizer
from .training import TrainConfig, train


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="grammarlab",
                                     description="Grammar-learning laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="build and write a dataset")
    p.add_argument("--preset", help="dataset preset name (see --list)")
    p.add_argument("--list", action="store_true", help="list dataset presets")
    p.add_argument("--scale", default="desk", choices=sorted(presets.SCALES))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path)
    p.add_argument("--task", choices=["quest", "PRESENT"])
    p.add_argument("--n-primary", type=int)
    p.add_argument("--n-secondary", type=int)
    p.add_argument("--n-id-val", type=int)
    p.add_argument("--n-ood", type=int)
    p.add_argument("--center-embed-ratio", type=float)
    p.add_argument("--subject-subtype-ratio", type=float)
    p.add_argument("--diversity-cap", type=int)
    p.add_argument("--ood-degree", type=int)
    p.add_argument("--decl-degree", type=int)

    p = sub.add_parser("train", help="train one model on a dataset directory")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--model", default="desk", choices=sorted(presets.MODEL_PRESETS))
    p.add_argument("--train", default="desk", choices=sorted(presets.TRAIN_PRESETS))
    p.add_argument("--steps", type=int)
    p.add_argument("--checkpoint-interval", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--precision", choices=["float32", "float64"])
    p.add_argument("--resume", type=Path)

    p = sub.add_parser("eval", help="evaluate a run's checkpoints, or full run+eval")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--run", type=Path, required=True)
    p.add_argument("--model", default="desk", choices=sorted(presets.MODEL_PRESETS))
    p.add_argument("--precision", default="float32", choices=["float32", "float64"])
    p.add_argument("--per-shape", action="store_true")

    p = sub.add_parser("sweep", help="multi-seed experiment sweep")
    p.add_argument("--config", type=Path, help="key=value config file")
    p.add_argument("--name")
    p.add_argument("--datasets", help="comma-separated dataset preset names")
    p.add_argument("--scale", default="desk", choices=sorted(presets.SCALES))
    p.add_argument("--seeds", default="0,1,2")
    p.add_argument("--data-seed", type=int, default=0)
    p.add_argument("--model", default="desk")
    p.add_argument("--train", default="desk")
    p.add_argument("--steps", type=int)
    p.add_argument("--checkpoint-interval", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--out", type=Path)
    p.add_argument("--keep-checkpoints", default="all", choices=["all", "final"])
    p.add_argument("--per-shape", action="store_true")

    p = sub.add_parser("report", help="render CSV+SVG reports from sweep results")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--results", type=Path, help="results.csv from a sweep")
    p.add_argument("--per-shape-files", help="comma-separated per_shape.csv paths")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--name")

    p = sub.add_parser("ted", help="tree edit distance between two shapes")
    p.add_argument("shape_a", help="s-expression, or a sentence with --sentences")
    p.add_argument("shape_b")
    p.add_argument("--sentences", action="store_true",
                   help="treat arguments as sentences of the grammar")
    p.add_argument("--task", default="quest", choices=["quest", "PRESENT"])

    sub.add_parser("grammar-dump", help="print productions, lexicon, and inventory")

    args = parser.parse_args(argv)
    return {
        "gen-data": _cmd_gen_data,
        "train": _cmd_train,
        "eval": _cmd_eval,
        "sweep": _cmd_sweep,
        "report": _cmd_report,
        "ted": _cmd_ted,
        "grammar-dump": _cmd_grammar_dump,
    }[args.command](args)


def _cmd_gen_data(args) -> int:
    if args.list:
        print("\n".join(presets.dataset_preset_names()))
        return 0
    if args.preset:
        cfg = presets.dataset_preset(args.preset, scale=args.scale, seed=args.seed)
        overrides = {}
        for key in ("n_primary", "n_secondary", "n_id_val", "n_ood", "center_embed_ratio",
                    "subject_subtype_ratio", "diversity_cap", "ood_degree", "decl_degree"):
            value = getattr(args, key)
            if value is not None:
                overrides[key] = value
        if overrides:
            cfg = replace(cfg, **overrides)
    else:
        if not args.task:
            print("gen-data needs --preset or --task", file=sys.stderr)
            return 2
        task = TaskKind(args.task)
        sizes = dict(presets.SCALES[args.scale][task.family])
        cfg = DatasetConfig(
            task=task, seed=args.seed,
            n_primary=args.n_primary or sizes["n_primary"],
            n_secondary=args.n_secondary if args.n_secondary is not None else sizes["n_secondary"],
            n_id_val=args.n_id_val or sizes["n_id_val"],
            n_ood=args.n_ood or sizes["n_ood"],
            center_embed_ratio=args.center_embed_ratio or 0.0,
            subject_subtype_ratio=args.subject_subtype_ratio
            if args.subject_subtype_ratio is not None else 0.5,
            diversity_cap=args.diversity_cap,
            ood_degree=args.ood_degree or 1,
            decl_degree=args.decl_degree or 2,
            include_secondary_task=task is TaskKind.QUESTION_FORMATION
            or (args.n_secondary or 0) > 0,
        )
    out = args.out or Path(f"data/{args.preset or cfg.task.marker}")
    bundle = build(cfg)
    write_bundle(bundle, out)
    counts = bundle.manifest["counts"]
    print(f"wrote {out}: train={counts['train_primary']}+{counts['train_secondary']} "
          f"id_val={counts['id_val']} ood={counts['ood']}")
    return 0


def _train_cfg_from_args(args) -> TrainConfig:
    cfg = presets.train_preset(args.train, seed=args.seed)
    overrides = {}
    if args.steps:
        overrides["total_steps"] = args.steps
        interval = args.checkpoint_interval or cfg.checkpoint_interval
        if args.steps % interval:
            interval = max(1, args.steps // 20)
        overrides["checkpoint_interval"] = interval
    if args.checkpoint_interval:
        overrides["checkpoint_interval"] = args.checkpoint_interval
    if args.batch_size:
        overrides["batch_size"] = args.batch_size
    if getattr(args, "learning_rate", None):
        overrides["learning_rate"] = args.learning_rate
    if getattr(args, "precision", None):
        overrides["precision"] = args.precision
    return replace(cfg, **overrides)


def _cmd_train(args) -> int:
    bundle = load_bundle(args.data)
    train_cfg = _train_cfg_from_args(args)
    model_cfg = presets.model_preset(args.model)
    tokenizer = Tokenizer.from_grammar()
    lines = [s.line() for s in bundle.train]
    result = train(lines, model_cfg, train_cfg, args.out, tokenizer,
                   resume_from=args.resume)
    print(f"trained {train_cfg.total_steps} steps; "
          f"{len(result.checkpoint_steps)} checkpoints in {result.ckpt_dir}")
    return 0


def _cmd_eval(args) -> int:
    from .evaluate import evaluate_checkpoints
    from .metrics import total_variation

    bundle = load_bundle(args.data)
    model_cfg = presets.model_preset(args.model)
    trace = evaluate_checkpoints(Path(args.run) / "checkpoints", bundle, model_cfg,
                                 precision=args.precision)
    (Path(args.run) / "trace.csv").write_text(trace.to_csv(), encoding="utf-8")
    print(f"checkpoints={len(trace.checkpoint_steps)} "
          f"final_id={trace.id_acc[-1]:.3f} final_ood={trace.ood_acc[-1]:.3f} "
          f"tv={total_variation(trace):.4f}")
    if args.per_shape:
        from .harness import _write_per_shape
        from .training import build_model, list_checkpoints, load_checkpoint

        model = build_model(model_cfg, args.precision)
        ckpts = list_checkpoints(Path(args.run) / "checkpoints")
        load_checkpoint(ckpts[-1][1], model, None, restore_rng=False)
        _write_per_shape(Path(args.run), model, bundle, Tokenizer.from_grammar(),
                         default_grammar())
        print(f"wrote {Path(args.run) / 'per_shape.csv'}")
    return 0


def _cmd_sweep(args) -> int:
    if args.config:
        cfg = configfile.load_config(args.config)
        name = cfg.get("name", args.config.stem)
        dataset_names = configfile.as_list(cfg["datasets"])
        scale = cfg.get("scale", "desk")
        seeds = configfile.as_int_list(cfg.get("seeds", "0,1,2"))
        data_seed = int(cfg.get("data_seed", "0"))
        model_cfg = presets.model_preset(cfg.get("model", "desk"))
        train_cfg = presets.train_preset(cfg.get("train", "desk"))
        for key in ("total_steps", "checkpoint_interval", "batch_size"):
            if key in cfg:
                train_cfg = replace(train_cfg, **{key: int(cfg[key])})
        if "learning_rate" in cfg:
            train_cfg = replace(train_cfg, learning_rate=float(cfg["learning_rate"]))
        out = Path(cfg.get("out", f"sweeps/{name}"))
        keep = cfg.get("keep_checkpoints", "all")
        per_shape = configfile.as_bool(cfg.get("per_shape", "false"))
        tv_threshold = float(cfg.get("tv_threshold", "0.01"))
    else:
        if not (args.name and args.datasets and args.out):
            print("sweep needs --config or (--name, --datasets, --out)", file=sys.stderr)
            return 2
        name = args.name
        dataset_names = configfile.as_list(args.datasets)
        scale, data_seed = args.scale, args.data_seed
        seeds = configfile.as_int_list(args.seeds)
        model_cfg = presets.model_preset(args.model)
        train_cfg = presets.train_preset(args.train)
        if args.steps:
            train_cfg = replace(train_cfg, total_steps=args.steps)
        if args.checkpoint_interval:
            train_cfg = replace(train_cfg, checkpoint_interval=args.checkpoint_interval)
        if args.batch_size:
            train_cfg = replace(train_cfg, batch_size=args.batch_size)
        out, keep, per_shape, tv_threshold = args.out, args.keep_checkpoints, args.per_shape, 0.01
    datasets = [(n, presets.dataset_preset(n, scale=scale, seed=data_seed))
                for n in dataset_names]
    sweep_cfg = ExperimentConfig(
        name=name, datasets=datasets, model=model_cfg, train=train_cfg,
        seeds=seeds, out_dir=out, keep_checkpoints=keep, per_shape=per_shape,
        tv_threshold=tv_threshold)
    records = run_sweep(sweep_cfg)
    failed = sum(1 for r in records if r.error)
    print(f"sweep {name}: {len(records)} runs, {failed} failed; results in {out}/results.csv")
    return 1 if failed else 0


def _cmd_report(args) -> int:
    if args.kind == "ted-scatter":
        if not args.per_shape_files:
            print("ted-scatter needs --per-shape-files", file=sys.stderr)
            return 2
        rows = []
        import csv as _csv
        for path in configfile.as_list(args.per_shape_files):
            with open(path, encoding="utf-8") as fh:
                rows.extend(_csv.DictReader(fh))
    else:
        if not args.results:
            print("this report kind needs --results", file=sys.stderr)
            return 2
        rows = read_results_csv(args.results)
    paths = emit_report(rows, args.kind, args.out, name=args.name)
    print(f"wrote {paths['csv']} and {paths['svg']}")
    return 0


def _cmd_ted(args) -> int:
    grammar = default_grammar()
    if args.sentences:
        task = TaskKind(args.task)
        a = shape_of(grammar.parse_sentence(args.shape_a.split(), task))
        b = shape_of(grammar.parse_sentence(args.shape_b.split(), task))
    else:
        a = parse_shape_sexpr(args.shape_a)
        b = parse_shape_sexpr(args.shape_b)
    print(ted(a, b))
    return 0


def _cmd_grammar_dump(args) -> int:
    print(default_grammar().dump(), end="")
    return 0


if __name__ == "__main__":
    sys.exit(main())
