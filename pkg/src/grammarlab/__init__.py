"""grammarlab: synthetic grammar-learning laboratory.

Controllable CFG datasets for question formation and tense inflection,
small decoder-only language models trained from scratch, and metrics
for out-of-distribution rule learning and training stability.
"""

__version__ = "0.1.0"

from .dataset import DatasetConfig, DatasetBundle, Sample, build, parse, serialize
from .grammar import (
    Branching,
    Grammar,
    SyntaxTree,
    TaskKind,
    TreeShape,
    classify,
    default_grammar,
    load_grammar,
    resample_leaves,
    sample_tree,
    sentence,
    shape_of,
)
from .metrics import (
    RegimeLabel,
    RunTrace,
    classify_regime,
    commitment_ratio,
    diversity,
    min_ted_to_train,
    qf_accuracy,
    ted,
    ti_main_verb_accuracy,
    total_variation,
)
from .model import MODEL_PRESETS, DecoderLM, ModelConfig, lm_loss
from .rules import (
    copy_target,
    is_ambiguous,
    qf_hierarchical,
    qf_linear,
    ti_hierarchical,
    ti_linear,
)
from .tokenizer import Tokenizer
from .training import TrainConfig, adam_step, effective_lr, train
