"""Experiment harness: multi-seed sweeps, persistence, resume.

Layout under ``out_dir``::

    datasets/<label>/          train.txt, id_val.txt, ood_*.txt, manifest.json,
                               meta/*.csv, shapes.txt
    runs/<label>-s<seed>/      train_log.csv, checkpoints/, trace.csv,
                               result.json, per_shape.csv (optional)
    results.csv                one row per (grid point, seed)

Runs are independent; ``GRAMMARLAB_WORKERS`` parallelizes them. Each
run's results are written atomically (temp file + rename) and finished
runs are skipped on resume, so interrupted sweeps pick up where they
stopped and the output is independent of scheduling order.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .dataset import DatasetBundle, DatasetConfig, Sample, build, load_split, write_bundle
from .errors import GrammarLabError
from .evaluate import (
    evaluate_checkpoints,
    evaluate_predictions,
    greedy_decode,
    per_shape_accuracy,
)
from .grammar import Branching, TaskKind, default_grammar, parse_shape_sexpr
from .metrics import RunTrace, classify_regime, min_ted_to_train, total_variation
from .model import ModelConfig
from .tokenizer import Tokenizer
from .training import TrainConfig, build_model, list_checkpoints, load_checkpoint, train

RESULTS_SCHEMA_VERSION = 1

_BASE_COLUMNS = [
    "run_id", "dataset", "seed", "config_hash", "n_checkpoints", "tv",
    "final_id", "final_ood", "exact_id", "exact_ood", "regime",
    "diversity_constrained", "diversity_total", "wall_clock_s", "error",
]


@dataclass
class ExperimentConfig:
    name: str
    datasets: list  # (label, DatasetConfig) pairs
    model: ModelConfig
    train: TrainConfig
    seeds: list
    out_dir: Path
    keep_checkpoints: str = "all"  # "final" prunes intermediates after evaluation
    per_shape: bool = False
    tv_threshold: float = 0.01
    commit_hi: float = 0.95
    commit_lo: float = 0.05

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("seed list must be nonempty")
        labels = [label for label, _ in self.datasets]
        if len(set(labels)) != len(labels):
            raise ValueError("dataset grid labels must be unique")
        self.out_dir = Path(self.out_dir)


@dataclass
class ResultRecord:
    run_id: str
    dataset: str
    seed: int
    config_hash: str
    n_checkpoints: int = 0
    tv: float | None = None
    final_id: float | None = None
    final_ood: float | None = None
    exact_id: float | None = None
    exact_ood: float | None = None
    regime: str | None = None
    diversity_constrained: int | None = None
    diversity_total: int | None = None
    wall_clock_s: float | None = None
    error: str | None = None
    ood_parts: dict = field(default_factory=dict)

    def row(self, part_names):
        base = {k: getattr(self, k) for k in _BASE_COLUMNS}
        for p in part_names:
            base[f"final_ood_{p}"] = self.ood_parts.get(p)
        return base


def config_hash(*objs) -> str:
    blob = json.dumps([_jsonable(o) for o in objs], sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _jsonable(obj):
    if hasattr(obj, "__dataclass_fields__"):
        d = asdict(obj)
        for k, v in d.items():
            if isinstance(v, TaskKind):
                d[k] = v.marker
        return d
    return obj


# --------------------------------------------------------------------- bundles on disk

def ensure_dataset(label: str, cfg: DatasetConfig, out_dir: Path) -> Path:
    """Build and persist a dataset once; reuse if already on disk."""
    dataset_dir = out_dir / "datasets" / label
    manifest = dataset_dir / "manifest.json"
    if not manifest.exists():
        bundle = build(cfg)
        write_bundle(bundle, dataset_dir)
    return dataset_dir


def load_bundle(dataset_dir) -> DatasetBundle:
    dataset_dir = Path(dataset_dir)
    manifest = json.loads((dataset_dir / "manifest.json").read_text())
    cfg_dict = dict(manifest["config"])
    cfg = DatasetConfig(task=TaskKind(cfg_dict.pop("task")), **cfg_dict)

    def read(name):
        samples = load_split(dataset_dir / f"{name}.txt")
        meta_path = dataset_dir / "meta" / f"{name}.csv"
        if meta_path.exists():
            with open(meta_path, encoding="utf-8") as fh:
                rows = list(csv.DictReader(fh))
            merged = []
            for s, m in zip(samples, rows):
                merged.append(replace(
                    s,
                    branching=Branching(m["branching"]) if m["branching"] else None,
                    ambiguous=bool(int(m["ambiguous"])) if m["ambiguous"] != "" else None,
                    shape_id=m["shape_id"] or None))
            samples = merged
        return samples

    ood = {}
    for path in sorted(dataset_dir.glob("ood_*.txt")):
        ood[path.stem[len("ood_"):]] = read(path.stem)
    shape_table = {}
    shapes_path = dataset_dir / "shapes.txt"
    if shapes_path.exists():
        for line in shapes_path.read_text(encoding="utf-8").splitlines():
            sid, _, sexpr = line.partition("\t")
            shape_table[sid] = sexpr
    return DatasetBundle(cfg, read("train"), read("id_val"), ood, manifest, shape_table)


# --------------------------------------------------------------------- single run

def run_one(label: str, dataset_dir: Path, model_cfg: ModelConfig,
            train_cfg: TrainConfig, run_dir: Path, keep_checkpoints: str = "all",
            per_shape: bool = False, tv_threshold: float = 0.01,
            commit_hi: float = 0.95, commit_lo: float = 0.05) -> ResultRecord:
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    record = ResultRecord(
        run_id=run_dir.name, dataset=label, seed=train_cfg.seed,
        config_hash=config_hash(label, model_cfg, train_cfg))
    started = time.perf_counter()
    grammar = default_grammar()
    tokenizer = Tokenizer.from_grammar(grammar)
    bundle = load_bundle(dataset_dir)

    lines = [s.line() for s in bundle.train]
    result = train(lines, model_cfg, train_cfg, run_dir, tokenizer)
    trace = evaluate_checkpoints(result.ckpt_dir, bundle, model_cfg, tokenizer,
                                 grammar, precision=train_cfg.precision,
                                 expected_steps=result.checkpoint_steps)
    (run_dir / "trace.csv").write_text(trace.to_csv(), encoding="utf-8")

    record.n_checkpoints = len(trace.checkpoint_steps)
    record.tv = total_variation(trace)
    record.final_id = trace.id_acc[-1]
    record.final_ood = trace.ood_acc[-1]
    record.ood_parts = {p: series[-1] for p, series in trace.ood_partitions.items()}
    record.regime = classify_regime(trace, commit_hi, commit_lo, tv_threshold).value
    record.diversity_constrained = bundle.manifest["realized"]["diversity_constrained_portion"]
    record.diversity_total = bundle.manifest["realized"]["diversity_train_total"]

    # exact-sequence accuracies at the final checkpoint
    model = build_model(model_cfg, train_cfg.precision)
    steps = list_checkpoints(result.ckpt_dir)
    load_checkpoint(steps[-1][1], model, None, restore_rng=False)
    task = bundle.config.task
    id_preds = greedy_decode(model, bundle.id_val, tokenizer)
    record.exact_id = evaluate_predictions(id_preds, bundle.id_val, task, grammar)["exact"]
    pooled = [s for samples in bundle.ood.values() for s in samples]
    ood_preds = greedy_decode(model, pooled, tokenizer)
    record.exact_ood = evaluate_predictions(ood_preds, pooled, task, grammar)["exact"]

    if per_shape:
        _write_per_shape(run_dir, model, bundle, tokenizer, grammar)
    if keep_checkpoints == "final":
        for step, path in steps[:-1]:
            path.unlink()

    record.wall_clock_s = time.perf_counter() - started
    _write_result(run_dir, record)
    return record


def _write_per_shape(run_dir, model, bundle, tokenizer, grammar):
    """Per-OOD-shape accuracy and min TED to the constrained train shapes."""
    task = bundle.config.task
    constrained_marker = (TaskKind.DECLARATION_COPY.marker
                          if task is TaskKind.QUESTION_FORMATION else task.marker)
    train_ids = {s.shape_id for s in bundle.train if s.task_marker == constrained_marker}
    train_shapes = [parse_shape_sexpr(bundle.shape_table[sid])
                    for sid in sorted(train_ids) if sid in bundle.shape_table]
    pooled = [s for samples in bundle.ood.values() for s in samples]
    acc = per_shape_accuracy(model, pooled, tokenizer, task, grammar)
    counts: dict[str, int] = {}
    for s in pooled:
        counts[s.shape_id] = counts.get(s.shape_id, 0) + 1
    with open(run_dir / "per_shape.csv", "w", encoding="utf-8") as fh:
        fh.write("shape_id,min_ted_to_train,accuracy,n\n")
        for sid in sorted(acc):
            shape = parse_shape_sexpr(bundle.shape_table[sid])
            fh.write("%s,%d,%r,%d\n" % (
                sid, min_ted_to_train(shape, train_shapes), acc[sid], counts[sid]))


def _write_result(run_dir, record: ResultRecord):
    payload = asdict(record)
    tmp = run_dir / "result.json.tmp"
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, run_dir / "result.json")


def _load_result(run_dir) -> ResultRecord | None:
    path = Path(run_dir) / "result.json"
    if not path.exists():
        return None
    data = json.loads(path.read_text())
    return ResultRecord(**data)


# --------------------------------------------------------------------- sweep

def _worker(args):
    label, dataset_dir, model_cfg, train_cfg, run_dir, keep, per_shape, tvt, hi, lo = args
    try:
        return run_one(label, dataset_dir, model_cfg, train_cfg, run_dir,
                       keep, per_shape, tvt, hi, lo)
    except (GrammarLabError, RuntimeError, ValueError) as exc:
        record = ResultRecord(
            run_id=Path(run_dir).name, dataset=label, seed=train_cfg.seed,
            config_hash=config_hash(label, model_cfg, train_cfg), error=str(exc))
        _write_result(Path(run_dir), record)
        return record


def run_sweep(config: ExperimentConfig) -> list[ResultRecord]:
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = []
    records: list[ResultRecord] = []
    for label, dataset_cfg in config.datasets:
        dataset_dir = ensure_dataset(label, dataset_cfg, out_dir)
        for seed in config.seeds:
            run_dir = out_dir / "runs" / f"{label}-s{seed}"
            done = _load_result(run_dir)
            if done is not None and done.error is None:
                records.append(done)
                continue
            train_cfg = replace(config.train, seed=seed)
            jobs.append((label, dataset_dir, config.model, train_cfg, run_dir,
                         config.keep_checkpoints, config.per_shape,
                         config.tv_threshold, config.commit_hi, config.commit_lo))
    workers = int(os.environ.get("GRAMMARLAB_WORKERS", "1"))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records.extend(pool.map(_worker, jobs))
    else:
        records.extend(_worker(job) for job in jobs)
    records.sort(key=lambda r: r.run_id)
    write_results_csv(records, out_dir / "results.csv")
    return records


# --------------------------------------------------------------------- results csv

def write_results_csv(records, path) -> None:
    part_names = sorted({p for r in records for p in r.ood_parts})
    columns = _BASE_COLUMNS + [f"final_ood_{p}" for p in part_names]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"#schema={RESULTS_SCHEMA_VERSION}\n")
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for r in records:
            row = {k: ("" if v is None else v) for k, v in r.row(part_names).items()}
            writer.writerow(row)


def read_results_csv(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("#schema="):
            raise ValueError(f"{path} missing schema header")
        rows = list(csv.DictReader(fh))
    for row in rows:
        for key, value in row.items():
            if key in ("seed", "n_checkpoints", "diversity_constrained", "diversity_total"):
                row[key] = int(value) if value else None
            elif key.startswith(("tv", "final", "exact", "wall")):
                row[key] = float(value) if value else None
    return rows
