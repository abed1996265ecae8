"""Checkpoint evaluation: greedy decoding and task accuracies.

The question-formation trace metric is the 4-way fronted-auxiliary
choice: at the first output position the model's logits are restricted
to the four auxiliary tokens and the argmax is compared to the gold
auxiliary. A random untrained model therefore sits at ~25%, matching
the task's chance level; a committed linear-rule model scores 0 on the
OOD sets because their leftmost auxiliary never equals the main one.
Exact-sequence accuracy is computed alongside at the final checkpoint.

Tense inflection decodes greedily and scores the main-verb token at
the gold main-verb position.
"""

from __future__ import annotations

import torch

from .dataset import Sample
from .errors import MissingCheckpoint
from .grammar import Grammar, TaskKind, default_grammar
from .metrics import RunTrace, qf_accuracy, ti_main_verb_accuracy
from .model import ModelConfig
from .tokenizer import Tokenizer
from .training import build_model, list_checkpoints, load_checkpoint, pad_stack


def _prompt_ids(samples, tokenizer):
    return [tokenizer.encode(list(s.input_tokens) + [s.task_marker]) for s in samples]


@torch.no_grad()
def first_aux_probe(model, samples, tokenizer, grammar=None, batch_size=1024):
    """Predicted fronted auxiliary per sample (restricted 4-way argmax)."""
    grammar = grammar or default_grammar()
    aux_tokens = [w for n in ("sg", "pl") for w in grammar.aux_by_number[n]]
    aux_ids = torch.tensor([tokenizer.index[w] for w in aux_tokens])
    prompts = _prompt_ids(samples, tokenizer)
    out = []
    model.eval()
    for lo in range(0, len(prompts), batch_size):
        chunk = prompts[lo: lo + batch_size]
        x = pad_stack(chunk, tokenizer.pad_id)
        logits = model(x)
        last = torch.tensor([len(p) - 1 for p in chunk])
        rows = logits[torch.arange(len(chunk)), last]         # (B, V)
        restricted = rows[:, aux_ids]
        picks = restricted.argmax(dim=1)
        out.extend(aux_tokens[int(i)] for i in picks)
    return out


def first_aux_accuracy(model, samples, tokenizer, grammar=None, batch_size=1024) -> float:
    preds = first_aux_probe(model, samples, tokenizer, grammar, batch_size)
    hits = sum(1 for p, s in zip(preds, samples) if p == s.target_tokens[0])
    return hits / len(samples) if samples else 0.0


@torch.no_grad()
def greedy_decode(model, samples, tokenizer, batch_size=512):
    """Greedy continuation until '.' / '?' or the length limit.

    Returns decoded output-token tuples (terminator included). Ties at
    the argmax resolve to the lowest token id. Rows that hit the length
    limit come back unterminated and score as incorrect downstream.
    """
    stop_ids = {tokenizer.index["."], tokenizer.index["?"]}
    max_len = model.cfg.max_seq_len
    prompts = _prompt_ids(samples, tokenizer)
    results = []
    model.eval()
    for lo in range(0, len(prompts), batch_size):
        chunk = prompts[lo: lo + batch_size]
        buf = pad_stack(chunk, tokenizer.pad_id, length=max_len)
        lens = [len(p) for p in chunk]
        starts = list(lens)
        active = set(range(len(chunk)))
        while active and max(lens[i] for i in active) < max_len:
            width = max(lens[i] for i in active)
            logits = model(buf[:, :width])
            for i in list(active):
                pos = lens[i] - 1
                nxt = int(logits[i, pos].argmax())
                buf[i, lens[i]] = nxt
                lens[i] += 1
                if nxt in stop_ids or lens[i] >= max_len:
                    active.discard(i)
        for i, p in enumerate(chunk):
            ids = buf[i, starts[i]: lens[i]].tolist()
            results.append(tokenizer.decode_tokens(ids))
    return results


def exact_accuracy(predictions, samples) -> float:
    gold = [s.target_tokens for s in samples]
    return qf_accuracy(predictions, gold, mode="exact")


def evaluate_predictions(predictions, samples, task: TaskKind,
                         grammar: Grammar | None = None) -> dict:
    """Score externally produced output sequences (e.g. rule oracles)."""
    grammar = grammar or default_grammar()
    gold = [s.target_tokens for s in samples]
    out = {"exact": qf_accuracy(predictions, gold, mode="exact")}
    if task is TaskKind.QUESTION_FORMATION:
        out["first_aux"] = qf_accuracy(predictions, gold, mode="first_aux")
        out["primary"] = out["first_aux"]
    else:
        out["main_verb"] = ti_main_verb_accuracy(predictions, gold, grammar)
        out["primary"] = out["main_verb"]
    return out


def split_accuracy(model, samples, tokenizer, task: TaskKind,
                   grammar: Grammar | None = None, mode: str = "trace") -> float:
    """Primary metric for one split: QF fronted-aux choice / TI main verb."""
    grammar = grammar or default_grammar()
    if task is TaskKind.QUESTION_FORMATION:
        return first_aux_accuracy(model, samples, tokenizer, grammar)
    preds = greedy_decode(model, samples, tokenizer)
    return ti_main_verb_accuracy(preds, [s.target_tokens for s in samples], grammar)


def per_shape_accuracy(model, samples, tokenizer, task: TaskKind,
                       grammar: Grammar | None = None) -> dict[str, float]:
    """Primary-metric accuracy per OOD TreeShape (for TED analyses)."""
    grammar = grammar or default_grammar()
    if task is TaskKind.QUESTION_FORMATION:
        preds = first_aux_probe(model, samples, tokenizer, grammar)
        correct = [p == s.target_tokens[0] for p, s in zip(preds, samples)]
    else:
        decoded = greedy_decode(model, samples, tokenizer)
        gold = [s.target_tokens for s in samples]
        correct = [ti_main_verb_accuracy([p], [g], grammar) == 1.0
                   for p, g in zip(decoded, gold)]
    hits: dict[str, list[bool]] = {}
    for s, ok in zip(samples, correct):
        hits.setdefault(s.shape_id, []).append(ok)
    return {sid: sum(v) / len(v) for sid, v in hits.items()}


def evaluate_checkpoints(ckpt_dir, bundle, model_cfg: ModelConfig,
                         tokenizer: Tokenizer | None = None,
                         grammar: Grammar | None = None,
                         precision: str = "float32",
                         expected_steps=None) -> RunTrace:
    """ID and per-partition OOD accuracy at every checkpoint step."""
    grammar = grammar or default_grammar()
    tokenizer = tokenizer or Tokenizer.from_grammar(grammar)
    found = list_checkpoints(ckpt_dir)
    if not found:
        raise MissingCheckpoint(f"no checkpoints under {ckpt_dir}")
    if expected_steps is not None:
        have = {s for s, _ in found}
        missing = [s for s in expected_steps if s not in have]
        if missing:
            raise MissingCheckpoint(f"missing checkpoint steps {missing}")
    task = bundle.config.task
    model = build_model(model_cfg, precision)
    steps, id_acc, ood_acc = [], [], []
    partitions: dict[str, list[float]] = {p: [] for p in bundle.ood}
    for step, path in found:
        load_checkpoint(path, model, None, restore_rng=False)
        model.eval()
        steps.append(step)
        id_acc.append(split_accuracy(model, bundle.id_val, tokenizer, task, grammar))
        pooled_hits = 0.0
        pooled_n = 0
        for part, samples in bundle.ood.items():
            acc = split_accuracy(model, samples, tokenizer, task, grammar)
            partitions[part].append(acc)
            pooled_hits += acc * len(samples)
            pooled_n += len(samples)
        ood_acc.append(pooled_hits / pooled_n if pooled_n else 0.0)
    return RunTrace(steps, id_acc, ood_acc, partitions)
