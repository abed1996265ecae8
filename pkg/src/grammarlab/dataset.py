"""Dataset assembly: splits, composition knobs, and serialization.

A dataset is built deterministically from (DatasetConfig, Grammar).
Primary-task training and ID-validation samples are always ambiguous
(linear and hierarchical rules agree); OOD samples are always
unambiguous, and additionally *strictly scorable*: for question
formation the leftmost auxiliary token differs from the main auxiliary
token, for tense inflection the main verb's nearest-left noun
mismatches the subject's number. Without this strictness a committed
linear-rule model would be scored correct on a large fraction of OOD
samples by the first-auxiliary / main-verb metrics.

The serialized line format is::

    <input tokens> <marker>\t<target tokens>

one sample per line, UTF-8, LF endings, tokens separated by single
spaces. ``parse`` then ``serialize`` round-trips byte-identically.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from . import rules
from .errors import FormatError, InfeasibleComposition
from .grammar import (
    Branching,
    Grammar,
    SyntaxTree,
    TaskKind,
    TreeShape,
    default_grammar,
    sentence,
    shape_id,
    shape_of,
    shape_sexpr,
    subject_has_distractor,
)
from .rng import stream

FORMAT_VERSION = 1

#: stratum priority: cap apportioning and ratio tie-breaks prefer earlier entries
_STRATA = (Branching.CE_SUBJECT, Branching.CE_OBJECT, Branching.RIGHT_BRANCHING)


@dataclass(frozen=True)
class Sample:
    input_tokens: tuple[str, ...]
    task_marker: str
    target_tokens: tuple[str, ...]
    branching: Branching | None = None
    ambiguous: bool | None = None
    shape_id: str | None = None

    def line(self) -> str:
        return "%s %s\t%s" % (" ".join(self.input_tokens), self.task_marker,
                              " ".join(self.target_tokens))

    @property
    def task(self) -> TaskKind:
        return TaskKind(self.task_marker)


@dataclass(frozen=True)
class DatasetConfig:
    """Composition knobs for one dataset.

    ``center_embed_ratio`` is the center-embedded fraction of the
    *constrained portion*: the declaration-copy samples for question
    formation (unambiguity forbids center embeddings in QF primary
    data), the primary samples for tense inflection. ``diversity_cap``
    bounds the number of distinct leaf-stripped shapes in the same
    portion. Declarations default to degree 2 (one extra level of
    relative-clause nesting); everything else is degree 1.
    """

    task: TaskKind
    n_primary: int
    n_secondary: int = 0
    n_id_val: int = 10000
    n_ood: int = 10000
    center_embed_ratio: float = 0.0
    subject_subtype_ratio: float = 0.5
    diversity_cap: int | None = None
    include_secondary_task: bool = True
    seed: int = 0
    decl_degree: int = 2
    ood_degree: int = 1

    def __post_init__(self):
        if self.task not in (TaskKind.QUESTION_FORMATION, TaskKind.TENSE_INFLECTION):
            raise InfeasibleComposition("primary task must be question formation or tense inflection")
        if min(self.n_primary, self.n_secondary, self.n_id_val, self.n_ood) < 0:
            raise InfeasibleComposition("counts must be non-negative")
        for ratio in (self.center_embed_ratio, self.subject_subtype_ratio):
            if not 0.0 <= ratio <= 1.0:
                raise InfeasibleComposition(f"ratio {ratio} outside [0, 1]")
        if self.diversity_cap is not None and self.diversity_cap < 1:
            raise InfeasibleComposition("diversity_cap must be >= 1 when finite")
        if self.task is TaskKind.QUESTION_FORMATION and self.effective_secondary == 0:
            if self.center_embed_ratio > 0.0 or self.diversity_cap is not None:
                raise InfeasibleComposition(
                    "QF composition knobs act on the declaration portion, "
                    "which this config leaves empty")

    @property
    def effective_secondary(self) -> int:
        return self.n_secondary if self.include_secondary_task else 0

    @property
    def secondary_task(self) -> TaskKind:
        return (TaskKind.DECLARATION_COPY
                if self.task is TaskKind.QUESTION_FORMATION else TaskKind.PAST_COPY)

    def ood_partitions(self) -> tuple[Branching, ...]:
        if self.task is TaskKind.QUESTION_FORMATION:
            return (Branching.CE_SUBJECT, Branching.CE_OBJECT)
        return (Branching.RIGHT_BRANCHING, Branching.CE_SUBJECT, Branching.CE_OBJECT)


@dataclass
class DatasetBundle:
    config: DatasetConfig
    train: list[Sample]
    id_val: list[Sample]
    ood: dict[str, list[Sample]]
    manifest: dict
    shape_table: dict[str, str]  # shape_id -> s-expression

    def splits(self):
        yield "train", self.train
        yield "id_val", self.id_val
        for part, samples in self.ood.items():
            yield f"ood_{part}", samples


# --------------------------------------------------------------------- counts

def largest_remainder(total: int, weights: dict, priority) -> dict:
    """Integer apportionment; ties broken by the given priority order."""
    wsum = sum(weights.values())
    if wsum <= 0:
        return {k: 0 for k in weights}
    quotas = {k: total * w / wsum for k, w in weights.items()}
    out = {k: int(q) for k, q in quotas.items()}
    order = sorted(weights, key=lambda k: (-(quotas[k] - out[k]), list(priority).index(k)))
    for k in order[: total - sum(out.values())]:
        out[k] += 1
    return out


def _stratum_counts(n: int, ce_ratio: float, subtype_ratio: float) -> dict[Branching, int]:
    ce_rb = largest_remainder(n, {"ce": ce_ratio, "rb": 1.0 - ce_ratio}, ("ce", "rb"))
    subtypes = largest_remainder(
        ce_rb["ce"],
        {Branching.CE_SUBJECT: subtype_ratio, Branching.CE_OBJECT: 1.0 - subtype_ratio},
        (Branching.CE_SUBJECT, Branching.CE_OBJECT))
    return {Branching.CE_SUBJECT: subtypes[Branching.CE_SUBJECT],
            Branching.CE_OBJECT: subtypes[Branching.CE_OBJECT],
            Branching.RIGHT_BRANCHING: ce_rb["rb"]}


def _apportion_cap(cap: int, counts: dict[Branching, int],
                   attainable: dict[Branching, int], warnings: list):
    """Split a diversity cap over strata; may rebalance sample counts.

    Returns (per-stratum shape quota, possibly rebalanced counts). The
    realized total is min(cap, attainable), so the constrained portion
    carries exactly that many distinct shapes.
    """
    active = [b for b in _STRATA if counts[b] > 0]
    ceiling = {b: min(attainable[b], counts[b]) for b in active}
    if cap > sum(ceiling.values()):
        warnings.append(
            f"diversity_cap {cap} exceeds attainable {sum(ceiling.values())}; clipped")
        cap = sum(ceiling.values())
    counts = dict(counts)
    if cap < len(active):
        dropped = active[cap:]
        active = active[:cap]
        moved = sum(counts[b] for b in dropped)
        for b in dropped:
            counts[b] = 0
        extra = largest_remainder(moved, {b: counts[b] or 1 for b in active}, active)
        for b in active:
            counts[b] += extra[b]
        ceiling = {b: min(attainable[b], counts[b]) for b in active}
        warnings.append("diversity_cap below stratum count; stratum ratios rebalanced")
    alloc = {b: 1 for b in active}
    remaining = cap - len(active)
    while remaining > 0:
        room = {b: ceiling[b] - alloc[b] for b in active if ceiling[b] > alloc[b]}
        if not room:
            break
        share = largest_remainder(remaining, {b: counts[b] for b in room}, _STRATA)
        stepped = 0
        for b, extra in share.items():
            add = min(extra, room[b])
            alloc[b] += add
            stepped += add
        if stepped == 0:
            alloc[next(iter(room))] += 1
            stepped = 1
        remaining -= stepped
    for b in _STRATA:
        alloc.setdefault(b, 0)
    return alloc, counts


# --------------------------------------------------------------------- build

class _Builder:
    def __init__(self, config: DatasetConfig, grammar: Grammar):
        self.config = config
        self.grammar = grammar
        self.warnings: list[str] = []
        self.shape_table: dict[str, str] = {}

    def make_sample(self, tree: SyntaxTree, task: TaskKind) -> Sample:
        grammar = self.grammar
        shape = shape_of(tree)
        sid = shape_id(shape)
        if sid not in self.shape_table:
            self.shape_table[sid] = shape_sexpr(shape)
        primary = TaskKind.QUESTION_FORMATION if task.family == "qf" else TaskKind.TENSE_INFLECTION
        return Sample(
            input_tokens=sentence(tree),
            task_marker=task.marker,
            target_tokens=rules.transform(tree, task, grammar),
            branching=grammar.classify(tree),
            ambiguous=rules.is_ambiguous(tree, primary, grammar),
            shape_id=sid,
        )

    # ---- portions ----------------------------------------------------

    def portion(self, task, rng, strata_counts, degree, cap, ti_match=False):
        """Samples for one composition portion, honoring strata and cap."""
        grammar = self.grammar
        pools: dict[Branching, tuple[TreeShape, ...]] = {}
        for b in _STRATA:
            if strata_counts[b] > 0:
                pools[b] = grammar.structures(task, b, degree)
        if cap is not None:
            attainable = {b: len(pools.get(b, ())) for b in _STRATA}
            alloc, strata_counts = _apportion_cap(cap, strata_counts, attainable, self.warnings)
            for b in list(pools):
                if strata_counts[b] == 0:
                    del pools[b]
                    continue
                chosen = rng.choice(len(pools[b]), size=alloc[b], replace=False)
                pools[b] = tuple(pools[b][i] for i in sorted(chosen.tolist()))
        samples = []
        for b in _STRATA:
            count = strata_counts[b]
            if count == 0:
                continue
            pool = pools[b]
            for i in range(count):
                skeleton = pool[i] if (cap is not None and i < len(pool)) \
                    else pool[int(rng.integers(len(pool)))]
                tree = grammar.lexicalize(skeleton, rng)
                if ti_match:
                    tree = _force_ti_distractor(tree, grammar, rng, match=True)
                samples.append(self.make_sample(tree, task))
        order = rng.permutation(len(samples))
        return [samples[i] for i in order], strata_counts

    def qf_train(self):
        config = self.config
        primary, _ = self.portion(
            TaskKind.QUESTION_FORMATION, stream(config.seed, "train", "primary"),
            {Branching.CE_SUBJECT: 0, Branching.CE_OBJECT: 0,
             Branching.RIGHT_BRANCHING: config.n_primary},
            degree=1, cap=None)
        info = {"constrained_portion": "secondary"}
        secondary: list[Sample] = []
        if config.effective_secondary:
            counts = _stratum_counts(config.effective_secondary, config.center_embed_ratio,
                                     config.subject_subtype_ratio)
            secondary, realized = self.portion(
                TaskKind.DECLARATION_COPY, stream(config.seed, "train", "secondary"),
                counts, degree=config.decl_degree, cap=config.diversity_cap)
            info["strata"] = {b.value: realized[b] for b in _STRATA}
        return primary + secondary, info

    def ti_train(self):
        config = self.config
        counts = _stratum_counts(config.n_primary, config.center_embed_ratio,
                                 config.subject_subtype_ratio)
        primary, realized = self.portion(
            TaskKind.TENSE_INFLECTION, stream(config.seed, "train", "primary"),
            counts, degree=1, cap=config.diversity_cap, ti_match=True)
        info = {"constrained_portion": "primary",
                "strata": {b.value: realized[b] for b in _STRATA}}
        secondary: list[Sample] = []
        if config.effective_secondary:
            sec_counts = _stratum_counts(config.effective_secondary, config.center_embed_ratio,
                                         config.subject_subtype_ratio)
            secondary, _ = self.portion(
                TaskKind.PAST_COPY, stream(config.seed, "train", "secondary"),
                sec_counts, degree=1, cap=None)
        return primary + secondary, info

    # ---- evaluation splits --------------------------------------------

    def id_val(self, taken):
        config, grammar = self.config, self.grammar
        rng = stream(config.seed, "id_val")
        qf = config.task is TaskKind.QUESTION_FORMATION
        if qf:
            pools = {Branching.RIGHT_BRANCHING:
                     grammar.structures(config.task, Branching.RIGHT_BRANCHING, 1)}
        else:
            pools = {b: grammar.structures(config.task, b, 1) for b in _STRATA}
        out = []
        for _ in range(config.n_id_val):
            stratum = Branching.RIGHT_BRANCHING
            if not qf:
                stratum = self._draw_stratum(rng)
            out.append(self._fresh(pools[stratum], rng, taken,
                                   lambda t: t if qf else _force_ti_distractor(
                                       t, grammar, rng, match=True)))
        return out

    def ood_split(self, part: Branching, taken):
        config, grammar = self.config, self.grammar
        rng = stream(config.seed, "ood", part.value)
        qf = config.task is TaskKind.QUESTION_FORMATION
        pool = grammar.structures(config.task, part, config.ood_degree)
        if qf:
            fix = lambda t: _force_first_aux_distinct(t, grammar)
        else:
            pool = tuple(s for s in pool if subject_has_distractor(s))
            fix = lambda t: _force_ti_distractor(t, grammar, rng, match=False)
        return [self._fresh(pool, rng, taken, fix) for _ in range(config.n_ood)]

    def _draw_stratum(self, rng) -> Branching:
        config = self.config
        if rng.random() >= config.center_embed_ratio:
            return Branching.RIGHT_BRANCHING
        if rng.random() < config.subject_subtype_ratio:
            return Branching.CE_SUBJECT
        return Branching.CE_OBJECT

    def _fresh(self, pool, rng, taken, fix, max_tries=200):
        grammar = self.grammar
        for _ in range(max_tries):
            skeleton = pool[int(rng.integers(len(pool)))]
            tree = fix(grammar.lexicalize(skeleton, rng))
            if " ".join(sentence(tree)) not in taken:
                return self.make_sample(tree, self.config.task)
        raise RuntimeError("could not draw an evaluation sample disjoint from train")


def build(config: DatasetConfig, grammar: Grammar | None = None) -> DatasetBundle:
    grammar = grammar or default_grammar()
    builder = _Builder(config, grammar)

    if config.task is TaskKind.QUESTION_FORMATION:
        train, portion_info = builder.qf_train()
    else:
        train, portion_info = builder.ti_train()

    taken = {" ".join(s.input_tokens) for s in train}
    id_val = builder.id_val(taken)
    ood = {part.value: builder.ood_split(part, taken)
           for part in config.ood_partitions()}

    _check_partition(config, train, id_val, ood, grammar)
    manifest = _manifest(config, grammar, train, id_val, ood, portion_info, builder.warnings)
    return DatasetBundle(config, train, id_val, ood, manifest, builder.shape_table)


# ------------------------------------------------------------- forced lexical modes

def _leaf_paths(tree, path=()):
    if tree.is_leaf:
        yield path, tree
    for i, child in enumerate(tree.children):
        yield from _leaf_paths(child, path + (i,))


def _replace_leaf(tree, path, word):
    if not path:
        return SyntaxTree(tree.label, tree.children, word)
    i = path[0]
    kids = list(tree.children)
    kids[i] = _replace_leaf(kids[i], path[1:], word)
    return SyntaxTree(tree.label, tuple(kids), tree.word)


def _force_first_aux_distinct(tree, grammar):
    """Make the leftmost auxiliary token differ from the main auxiliary."""
    main_aux = tree.children[1].children[0]
    for path, leaf in _leaf_paths(tree):
        if leaf.label == "AUX":
            if leaf is main_aux:
                return tree
            if leaf.word == main_aux.word:
                return _replace_leaf(tree, path, grammar.other_aux(leaf.word))
            return tree
    return tree


def _force_ti_distractor(tree, grammar, rng, match: bool):
    """Pin the main verb's nearest-left noun to (mis)match the subject."""
    subject = tree.children[0]
    head_number = grammar.noun_number(subject.children[1].word)
    noun_leaves = [(path, leaf) for path, leaf in _leaf_paths(subject)
                   if leaf.label == "NOUN"]
    if len(noun_leaves) < 2:
        if match:
            return tree
        raise InfeasibleComposition("no distractor noun available for an OOD sample")
    path, leaf = noun_leaves[-1]
    wanted = head_number if match else ("pl" if head_number == "sg" else "sg")
    if grammar.noun_number(leaf.word) == wanted:
        return tree
    candidates = grammar.nouns_by_number[wanted]
    word = candidates[int(rng.integers(len(candidates)))]
    return _replace_leaf(tree, (0,) + path, word)


# --------------------------------------------------------------------- checks

def _check_partition(config, train, id_val, ood, grammar):
    primary_marker = config.task.marker
    for name, samples in (("train", train), ("id_val", id_val)):
        for s in samples:
            if s.task_marker == primary_marker and s.ambiguous is not True:
                raise RuntimeError(f"{name} primary sample is not ambiguous: {s.line()!r}")
    for part, samples in ood.items():
        for s in samples:
            if s.ambiguous:
                raise RuntimeError(f"ood[{part}] sample is ambiguous: {s.line()!r}")
            if config.task is TaskKind.QUESTION_FORMATION:
                lin = rules.qf_linear(s.input_tokens, grammar)
                if lin[0] == s.target_tokens[0]:
                    raise RuntimeError("ood first-auxiliary collision survived")


# --------------------------------------------------------------------- manifest

def _manifest(config, grammar, train, id_val, ood, portion_info, warnings):
    cfg = asdict(config)
    cfg["task"] = config.task.marker
    primary = [s for s in train if s.task_marker == config.task.marker]
    secondary = [s for s in train if s.task_marker != config.task.marker]
    constrained = secondary if portion_info.get("constrained_portion") == "secondary" else primary
    ce = [s for s in constrained if s.branching is not None and s.branching.center_embedded]
    subj = [s for s in ce if s.branching is Branching.CE_SUBJECT]
    return {
        "format_version": FORMAT_VERSION,
        "grammar_version": grammar.version,
        "vocab_size": len(grammar.vocab()),
        "config": cfg,
        "counts": {
            "train_primary": len(primary),
            "train_secondary": len(secondary),
            "id_val": len(id_val),
            "ood": {part: len(samples) for part, samples in ood.items()},
        },
        "realized": {
            "center_embed_ratio": len(ce) / len(constrained) if constrained else None,
            "subject_subtype_ratio": len(subj) / len(ce) if ce else None,
            "diversity_constrained_portion":
                len({s.shape_id for s in constrained}) if constrained else 0,
            "diversity_train_total": len({s.shape_id for s in train}),
            "strata": portion_info.get("strata"),
        },
        "structure_sampling": "uniform over enumerated skeletons",
        "warnings": warnings,
    }


# --------------------------------------------------------------------- serialization

def serialize(samples) -> str:
    return "".join(s.line() + "\n" for s in samples)


def parse(text: str, grammar: Grammar | None = None) -> list[Sample]:
    grammar = grammar or default_grammar()
    markers = set(grammar.markers)
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.count("\t") != 1:
            raise FormatError(f"line {lineno}: expected exactly one tab", lineno)
        left, right = line.split("\t")
        left_tokens = left.split(" ")
        if len(left_tokens) < 2 or left_tokens[-1] not in markers:
            raise FormatError(f"line {lineno}: missing task marker", lineno)
        if not right or "" in left_tokens or "" in right.split(" "):
            raise FormatError(f"line {lineno}: empty token or target", lineno)
        out.append(Sample(
            input_tokens=tuple(left_tokens[:-1]),
            task_marker=left_tokens[-1],
            target_tokens=tuple(right.split(" ")),
        ))
    return out


# --------------------------------------------------------------------- files

def write_bundle(bundle: DatasetBundle, outdir) -> None:
    outdir = Path(outdir)
    (outdir / "meta").mkdir(parents=True, exist_ok=True)
    for name, samples in bundle.splits():
        (outdir / f"{name}.txt").write_text(serialize(samples), encoding="utf-8")
        with open(outdir / "meta" / f"{name}.csv", "w", encoding="utf-8") as fh:
            fh.write("index,marker,branching,ambiguous,shape_id\n")
            for i, s in enumerate(samples):
                fh.write("%d,%s,%s,%s,%s\n" % (
                    i, s.task_marker,
                    s.branching.value if s.branching else "",
                    "" if s.ambiguous is None else int(s.ambiguous),
                    s.shape_id or ""))
    with open(outdir / "shapes.txt", "w", encoding="utf-8") as fh:
        for sid in sorted(bundle.shape_table):
            fh.write(f"{sid}\t{bundle.shape_table[sid]}\n")
    (outdir / "manifest.json").write_text(
        json.dumps(bundle.manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_split(path, grammar: Grammar | None = None) -> list[Sample]:
    return parse(Path(path).read_text(encoding="utf-8"), grammar)


def load_shape_table(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        sid, _, sexpr = line.partition("\t")
        out[sid] = sexpr
    return out
