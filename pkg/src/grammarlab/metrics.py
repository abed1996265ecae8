"""Quantitative measures: tree-edit distance, diversity, stability.

``ted`` implements the Zhang-Shasha ordered-tree edit distance with
unit-cost insert/delete/relabel over TreeShape nodes. Shapes carry no
leaf words, so two sentences that differ only in vocabulary are at
distance zero by construction.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum

from .errors import EmptyReference, LengthMismatch, TooFewCheckpoints
from .grammar import Grammar, TreeShape, default_grammar
from .rules import main_verb_index

TRACE_SCHEMA_VERSION = 1


# --------------------------------------------------------------------- tree edit distance

class _Annotated:
    """Postorder arrays for Zhang-Shasha: labels, leftmost-leaf, keyroots."""

    def __init__(self, root: TreeShape):
        self.labels: list[str] = []
        self.lmd: list[int] = []

        def walk(node) -> int:
            first = None
            for child in node.children:
                leaf = walk(child)
                if first is None:
                    first = leaf
            idx = len(self.labels)
            self.labels.append(node.label)
            self.lmd.append(first if first is not None else idx)
            return self.lmd[idx]

        walk(root)
        seen: dict[int, int] = {}
        for i in range(len(self.labels)):
            seen[self.lmd[i]] = i  # later (higher) postorder index wins
        self.keyroots = sorted(seen.values())


def ted(a: TreeShape, b: TreeShape) -> int:
    """Minimum unit-cost insert/delete/relabel edits between ordered trees."""
    ta, tb = _Annotated(a), _Annotated(b)
    m, n = len(ta.labels), len(tb.labels)
    dist = [[0] * n for _ in range(m)]
    for i in ta.keyroots:
        for j in tb.keyroots:
            _treedist(i, j, ta, tb, dist)
    return dist[m - 1][n - 1]


def _treedist(i, j, ta, tb, dist):
    li, lj = ta.lmd[i], tb.lmd[j]
    rows, cols = i - li + 2, j - lj + 2
    fd = [[0] * cols for _ in range(rows)]
    for di in range(1, rows):
        fd[di][0] = fd[di - 1][0] + 1
    for dj in range(1, cols):
        fd[0][dj] = fd[0][dj - 1] + 1
    for di in range(li, i + 1):
        for dj in range(lj, j + 1):
            r, c = di - li + 1, dj - lj + 1
            if ta.lmd[di] == li and tb.lmd[dj] == lj:
                cost = 0 if ta.labels[di] == tb.labels[dj] else 1
                fd[r][c] = min(fd[r - 1][c] + 1, fd[r][c - 1] + 1, fd[r - 1][c - 1] + cost)
                dist[di][dj] = fd[r][c]
            else:
                pr, pc = ta.lmd[di] - li, tb.lmd[dj] - lj
                fd[r][c] = min(fd[r - 1][c] + 1, fd[r][c - 1] + 1,
                               fd[pr][pc] + dist[di][dj])


def min_ted_to_train(ood_shape: TreeShape, train_shapes) -> int:
    train_shapes = list(train_shapes)
    if not train_shapes:
        raise EmptyReference("no training shapes to compare against")
    return min(ted(ood_shape, t) for t in train_shapes)


def diversity(samples_or_ids) -> int:
    """Number of distinct syntax-tree shapes in a sample collection."""
    ids = set()
    for item in samples_or_ids:
        ids.add(item.shape_id if hasattr(item, "shape_id") else item)
    return len(ids)


# --------------------------------------------------------------------- run traces

@dataclass
class RunTrace:
    """Per-checkpoint accuracy series for one training run."""

    checkpoint_steps: list[int]
    id_acc: list[float]
    ood_acc: list[float]
    ood_partitions: dict[str, list[float]] = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.checkpoint_steps)
        series = [self.id_acc, self.ood_acc, *self.ood_partitions.values()]
        if any(len(s) != n for s in series):
            raise LengthMismatch("trace series lengths differ from checkpoint count")
        if any(b <= a for a, b in zip(self.checkpoint_steps, self.checkpoint_steps[1:])):
            raise ValueError("checkpoint steps must be strictly increasing")

    def to_csv(self) -> str:
        out = io.StringIO()
        parts = sorted(self.ood_partitions)
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow([f"#schema={TRACE_SCHEMA_VERSION}"])
        writer.writerow(["step", "id_acc", "ood_acc"] + [f"ood_{p}" for p in parts])
        for k, step in enumerate(self.checkpoint_steps):
            row = [step, repr(self.id_acc[k]), repr(self.ood_acc[k])]
            row += [repr(self.ood_partitions[p][k]) for p in parts]
            writer.writerow(row)
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "RunTrace":
        rows = list(csv.reader(io.StringIO(text)))
        header = rows[1]
        parts = [h[len("ood_"):] for h in header[3:]]
        steps, id_acc, ood_acc = [], [], []
        partitions = {p: [] for p in parts}
        for row in rows[2:]:
            steps.append(int(row[0]))
            id_acc.append(float(row[1]))
            ood_acc.append(float(row[2]))
            for p, val in zip(parts, row[3:]):
                partitions[p].append(float(val))
        return cls(steps, id_acc, ood_acc, partitions)


def total_variation(series) -> float:
    """Mean absolute successive difference: sum |a_t - a_{t-1}| / |T|."""
    values = list(series.ood_acc) if isinstance(series, RunTrace) else list(series)
    if len(values) < 2:
        raise TooFewCheckpoints("total variation needs at least two checkpoints")
    return sum(abs(b - a) for a, b in zip(values, values[1:])) / len(values)


def commitment_ratio(final_ood_accs, hi: float = 0.95, lo: float = 0.05) -> float:
    values = list(final_ood_accs)
    if not values:
        raise EmptyReference("commitment_ratio needs at least one run")
    committed = sum(1 for v in values if v > hi or v < lo)
    return committed / len(values)


class RegimeLabel(Enum):
    MEMORIZATION = "memorization"
    UNSTABLE = "unstable"
    LINEAR_GENERALIZATION = "linear_generalization"
    HIERARCHICAL_GENERALIZATION = "hierarchical_generalization"


def classify_regime(trace: RunTrace, hi: float = 0.95, lo: float = 0.05,
                    tv_threshold: float = 0.01) -> RegimeLabel:
    """Label a run from (TV, final OOD accuracy) thresholds only."""
    if total_variation(trace) >= tv_threshold:
        return RegimeLabel.UNSTABLE
    final = trace.ood_acc[-1]
    if final > hi:
        return RegimeLabel.HIERARCHICAL_GENERALIZATION
    if final < lo:
        return RegimeLabel.LINEAR_GENERALIZATION
    return RegimeLabel.MEMORIZATION


# --------------------------------------------------------------------- task accuracies

def qf_accuracy(predictions, gold, mode: str = "first_aux") -> float:
    """Question-formation accuracy over aligned token sequences.

    ``first_aux`` scores the first output token (the fronted
    auxiliary); ``exact`` requires the full sequence to match.
    """
    predictions, gold = list(predictions), list(gold)
    if len(predictions) != len(gold):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(gold)} gold")
    if mode not in ("first_aux", "exact"):
        raise ValueError(f"unknown mode {mode!r}")
    hits = 0
    for pred, ref in zip(predictions, gold):
        pred, ref = tuple(pred), tuple(ref)
        if mode == "exact":
            hits += pred == ref
        else:
            hits += bool(pred) and bool(ref) and pred[0] == ref[0]
    return hits / len(gold) if gold else 0.0


def ti_main_verb_accuracy(predictions, gold, grammar: Grammar | None = None) -> float:
    """Main-verb token correctness, scored at the gold main-verb index."""
    grammar = grammar or default_grammar()
    predictions, gold = list(predictions), list(gold)
    if len(predictions) != len(gold):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(gold)} gold")
    hits = 0
    for pred, ref in zip(predictions, gold):
        pred, ref = tuple(pred), tuple(ref)
        idx = main_verb_index(ref, grammar)
        hits += len(pred) > idx and pred[idx] == ref[idx]
    return hits / len(gold) if gold else 0.0
