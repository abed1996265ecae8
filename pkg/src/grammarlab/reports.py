"""Figure-style reports: every plot is an SVG next to a CSV of the
plotted values, so the figure is re-derivable from the CSV alone."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .metrics import commitment_ratio  # noqa: E402

KINDS = ("violin", "horseshoe", "u-curve", "ted-scatter", "table")


def emit_report(records, kind: str, out_dir, name: str | None = None,
                commit_hi: float = 0.95, commit_lo: float = 0.05) -> dict:
    """Render one report kind from result/per-shape rows.

    Returns {"csv": path, "svg": path}. ``records`` are dict rows: sweep
    results for violin/horseshoe/u-curve/table, per-shape rows
    (shape_id, min_ted_to_train, accuracy, n) for ted-scatter.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown report kind {kind!r}; choose from {KINDS}")
    if not records:
        raise ValueError("no records to report")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = name or kind.replace("-", "_")
    fn = {
        "violin": _violin,
        "horseshoe": _horseshoe,
        "u-curve": _u_curve,
        "ted-scatter": _ted_scatter,
        "table": _table,
    }[kind]
    return fn(list(records), out_dir, stem, commit_hi, commit_lo)


def _write_csv(path, columns, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in columns})


def _groups(records):
    order = []
    for r in records:
        if r["dataset"] not in order:
            order.append(r["dataset"])
    return order


def _clean(records, keys):
    kept, dropped = [], 0
    for r in records:
        if any(r.get(k) in (None, "") for k in keys):
            dropped += 1
        else:
            kept.append(r)
    return kept, dropped


def _violin(records, out_dir, stem, hi, lo):
    records, dropped = _clean(records, ("final_ood",))
    rows = [{"dataset": r["dataset"], "seed": r["seed"], "final_ood": r["final_ood"]}
            for r in records]
    csv_path = out_dir / f"{stem}.csv"
    _write_csv(csv_path, ["dataset", "seed", "final_ood"], rows)
    order = _groups(records)
    data, labels, notes = [], [], []
    for label in order:
        vals = [r["final_ood"] for r in records if r["dataset"] == label]
        if vals:
            data.append(vals)
            labels.append(label)
        else:
            notes.append(f"{label}: empty, omitted")
    fig, ax = plt.subplots(figsize=(1.6 + 1.3 * len(data), 4))
    parts = ax.violinplot(data, showmedians=True, widths=0.8)
    for i, vals in enumerate(data, start=1):
        ax.scatter([i] * len(vals), vals, s=12, color="k", alpha=0.5, zorder=3)
    ax.set_xticks(range(1, len(labels) + 1), labels, rotation=20, ha="right")
    ax.set_ylabel("final OOD accuracy")
    ax.set_ylim(-0.05, 1.05)
    title = stem
    if dropped or notes:
        title += f" ({dropped} failed runs dropped)" if dropped else ""
    ax.set_title(title)
    svg_path = out_dir / f"{stem}.svg"
    fig.tight_layout()
    fig.savefig(svg_path)
    plt.close(fig)
    return {"csv": csv_path, "svg": svg_path}


def _horseshoe(records, out_dir, stem, hi, lo):
    records, dropped = _clean(records, ("tv", "final_ood"))
    rows = [{"dataset": r["dataset"], "seed": r["seed"], "tv": r["tv"],
             "final_ood": r["final_ood"]} for r in records]
    csv_path = out_dir / f"{stem}.csv"
    _write_csv(csv_path, ["dataset", "seed", "tv", "final_ood"], rows)
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    for label in _groups(records):
        xs = [r["tv"] for r in records if r["dataset"] == label]
        ys = [r["final_ood"] for r in records if r["dataset"] == label]
        ax.scatter(xs, ys, s=18, alpha=0.75, label=label)
    ax.set_xlabel("training instability (total variation)")
    ax.set_ylabel("final OOD accuracy")
    ax.set_ylim(-0.05, 1.05)
    ax.legend(fontsize=7)
    ax.set_title(stem)
    svg_path = out_dir / f"{stem}.svg"
    fig.tight_layout()
    fig.savefig(svg_path)
    plt.close(fig)
    return {"csv": csv_path, "svg": svg_path}


def _u_curve(records, out_dir, stem, hi, lo):
    records, dropped = _clean(records, ("tv", "final_ood", "diversity_constrained"))
    rows = []
    for r in records:
        committed = int(r["final_ood"] > hi or r["final_ood"] < lo)
        rows.append({"dataset": r["dataset"], "diversity": r["diversity_constrained"],
                     "seed": r["seed"], "tv": r["tv"], "final_ood": r["final_ood"],
                     "committed": committed})
    csv_path = out_dir / f"{stem}.csv"
    _write_csv(csv_path, ["dataset", "diversity", "seed", "tv", "final_ood", "committed"], rows)
    by_div: dict[int, list[dict]] = {}
    for row in rows:
        by_div.setdefault(int(row["diversity"]), []).append(row)
    xs = sorted(by_div)
    med_tv = [sorted(r["tv"] for r in by_div[x])[len(by_div[x]) // 2] for x in xs]
    commit = [commitment_ratio([r["final_ood"] for r in by_div[x]], hi, lo) for x in xs]
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    for x in xs:
        ax.scatter([x] * len(by_div[x]), [r["tv"] for r in by_div[x]],
                   s=14, color="tab:blue", alpha=0.45)
    ax.plot(xs, med_tv, color="tab:blue", marker="o", label="median TV")
    ax.set_xscale("log")
    ax.set_xlabel("data diversity (unique syntax trees)")
    ax.set_ylabel("total variation", color="tab:blue")
    ax2 = ax.twinx()
    ax2.plot(xs, commit, color="tab:red", marker="s", label="commitment ratio")
    ax2.set_ylabel("rule commitment ratio", color="tab:red")
    ax2.set_ylim(-0.05, 1.05)
    ax.set_title(stem)
    svg_path = out_dir / f"{stem}.svg"
    fig.tight_layout()
    fig.savefig(svg_path)
    plt.close(fig)
    return {"csv": csv_path, "svg": svg_path}


def _ted_scatter(records, out_dir, stem, hi, lo):
    rows = [{"shape_id": r["shape_id"], "min_ted_to_train": int(r["min_ted_to_train"]),
             "accuracy": float(r["accuracy"]), "n": int(r["n"])} for r in records]
    csv_path = out_dir / f"{stem}.csv"
    _write_csv(csv_path, ["shape_id", "min_ted_to_train", "accuracy", "n"], rows)
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    xs = [r["min_ted_to_train"] for r in rows]
    ys = [r["accuracy"] for r in rows]
    sizes = [8 + 2 * r["n"] ** 0.5 for r in rows]
    ax.scatter(xs, ys, s=sizes, alpha=0.6)
    ax.set_xlabel("min tree-edit distance to training shapes")
    ax.set_ylabel("OOD accuracy per shape")
    ax.set_ylim(-0.05, 1.05)
    ax.set_title(stem)
    svg_path = out_dir / f"{stem}.svg"
    fig.tight_layout()
    fig.savefig(svg_path)
    plt.close(fig)
    return {"csv": csv_path, "svg": svg_path}


def _table(records, out_dir, stem, hi, lo):
    columns = ["dataset", "runs", "failed", "median_final_ood", "median_tv",
               "commitment_ratio", "regimes"]
    rows = []
    for label in _groups(records):
        group = [r for r in records if r["dataset"] == label]
        ok = [r for r in group if r.get("final_ood") not in (None, "")]
        finals = sorted(r["final_ood"] for r in ok)
        tvs = sorted(r["tv"] for r in ok)
        regimes = {}
        for r in ok:
            regimes[r["regime"]] = regimes.get(r["regime"], 0) + 1
        rows.append({
            "dataset": label,
            "runs": len(group),
            "failed": len(group) - len(ok),
            "median_final_ood": finals[len(finals) // 2] if finals else "",
            "median_tv": tvs[len(tvs) // 2] if tvs else "",
            "commitment_ratio": commitment_ratio(finals, hi, lo) if finals else "",
            "regimes": ";".join(f"{k}={v}" for k, v in sorted(regimes.items())),
        })
    csv_path = out_dir / f"{stem}.csv"
    _write_csv(csv_path, columns, rows)
    fig, ax = plt.subplots(figsize=(10, 0.6 + 0.4 * len(rows)))
    ax.axis("off")
    cells = [[str(row[c]) for c in columns] for row in rows]
    table = ax.table(cellText=cells, colLabels=columns, loc="center")
    table.auto_set_font_size(False)
    table.set_fontsize(8)
    svg_path = out_dir / f"{stem}.svg"
    fig.tight_layout()
    fig.savefig(svg_path)
    plt.close(fig)
    return {"csv": csv_path, "svg": svg_path}
