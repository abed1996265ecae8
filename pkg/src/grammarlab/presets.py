"""Shipped dataset / model / training presets.

Every figure-style experiment has a desk-scale preset (small model,
<=50K steps, few seeds) and the corresponding paper-scale data counts.
Scales set split sizes only; composition knobs are fixed per preset.
"""

from __future__ import annotations

from dataclasses import replace

from .dataset import DatasetConfig
from .grammar import TaskKind
from .model import MODEL_PRESETS, ModelConfig  # noqa: F401  (re-exported)
from .training import TrainConfig

#: split sizes per scale; "acceptance" keeps every split at >=10K samples
SCALES = {
    "desk": {
        "qf": dict(n_primary=5000, n_secondary=5000, n_id_val=1000, n_ood=1500),
        "ti": dict(n_primary=10000, n_secondary=10000, n_id_val=1000, n_ood=1000),
    },
    "acceptance": {
        "qf": dict(n_primary=10000, n_secondary=10000, n_id_val=10000, n_ood=10000),
        "ti": dict(n_primary=12000, n_secondary=12000, n_id_val=10000, n_ood=10000),
    },
    "paper": {
        "qf": dict(n_primary=50000, n_secondary=50000, n_id_val=10000, n_ood=10000),
        "ti": dict(n_primary=100000, n_secondary=100000, n_id_val=10000, n_ood=10000),
    },
}

_QF = TaskKind.QUESTION_FORMATION
_TI = TaskKind.TENSE_INFLECTION

#: name -> (task, fixed knobs); split sizes come from the scale
_DATASETS: dict[str, tuple[TaskKind, dict]] = {}


def _register(name, task, **knobs):
    _DATASETS[name] = (task, knobs)


_register("qf_quest_only", _QF, center_embed_ratio=0.0, _no_secondary=True)
_register("qf_right_branch", _QF, center_embed_ratio=0.0)
_register("qf_center_embed", _QF, center_embed_ratio=1.0)
for pct in (1, 10, 50, 90, 99):
    _register(f"qf_mix_{pct:02d}", _QF, center_embed_ratio=pct / 100)
for cap in (1, 2, 5, 10, 20, 50, 100):
    _register(f"qf_diversity_{cap}", _QF, center_embed_ratio=1.0, diversity_cap=cap)
for cap in (5, 10, 30, 60):
    _register(f"qf_lin_diversity_{cap}", _QF, center_embed_ratio=0.01, diversity_cap=cap)
for pct in (0, 25, 50, 75, 100):
    _register(f"qf_subtype_{pct:03d}", _QF, center_embed_ratio=1.0,
              subject_subtype_ratio=pct / 100)
_register("qf_ted_low", _QF, center_embed_ratio=1.0, diversity_cap=1, ood_degree=2)
_register("qf_ted_high", _QF, center_embed_ratio=1.0, ood_degree=2)
for pct in (5, 25, 50, 75, 95):
    _register(f"ti_ce_{pct:02d}", _TI, center_embed_ratio=pct / 100, _no_secondary=True)
_register("ti_with_copy", _TI, center_embed_ratio=0.5, include_secondary_task=True)


def dataset_preset_names() -> list[str]:
    return sorted(_DATASETS)


def dataset_preset(name: str, scale: str = "desk", seed: int = 0) -> DatasetConfig:
    if name not in _DATASETS:
        raise KeyError(f"unknown dataset preset {name!r}; see dataset_preset_names()")
    task, knobs = _DATASETS[name]
    knobs = dict(knobs)
    sizes = dict(SCALES[scale][task.family])
    if knobs.pop("_no_secondary", False):
        sizes["n_secondary"] = 0
    if task is _TI and not knobs.get("include_secondary_task", False):
        sizes["n_secondary"] = 0
        knobs.setdefault("include_secondary_task", False)
    return DatasetConfig(task=task, seed=seed, **sizes, **knobs)


TRAIN_PRESETS = {
    "smoke": TrainConfig(total_steps=200, checkpoint_interval=100, batch_size=32),
    "desk": TrainConfig(total_steps=20000, checkpoint_interval=1000, batch_size=64),
    "paper": TrainConfig(total_steps=300000, checkpoint_interval=2000, batch_size=128),
}


def train_preset(name: str, **overrides) -> TrainConfig:
    return replace(TRAIN_PRESETS[name], **overrides)


def model_preset(name: str, **overrides) -> ModelConfig:
    return replace(MODEL_PRESETS[name], **overrides)
