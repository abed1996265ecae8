"""Training loop: Adam with linear decay, checkpointing, loss log.

Checkpoints are versioned binary files: a magic line, a JSON header
line, then raw little-endian tensor bytes for parameters, first and
second Adam moments (in ``named_parameters`` order), and finally the
torch RNG state. A plain-text layout manifest (``params.layout.txt``)
written next to the checkpoints gives name/dtype/shape/offset for every
tensor so the format can be reloaded from any language. Reloading a
checkpoint and taking one step is bit-identical to having never paused.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .errors import MissingCheckpoint, NonFiniteGradient, SequenceTooLong
from .model import DecoderLM, ModelConfig, lm_loss
from .rng import derived_seed, stream
from .tokenizer import Tokenizer

CHECKPOINT_MAGIC = b"GLABCKPT1\n"
CHECKPOINT_FORMAT_VERSION = 1

_DTYPES = {"float32": torch.float32, "float64": torch.float64}


@dataclass(frozen=True)
class TrainConfig:
    total_steps: int
    checkpoint_interval: int
    batch_size: int = 64
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    precision: str = "float32"

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.checkpoint_interval < 1 or self.total_steps % self.checkpoint_interval:
            raise ValueError("checkpoint_interval must divide total_steps")
        if self.precision not in _DTYPES:
            raise ValueError(f"unknown precision {self.precision!r}")


def effective_lr(step: int, cfg: TrainConfig) -> float:
    """Linear decay: lr * (1 - step/total); full rate at step 0, zero at the end."""
    return cfg.learning_rate * (1.0 - step / cfg.total_steps)


class AdamMoments:
    def __init__(self, params):
        self.m = [torch.zeros_like(p) for p in params]
        self.v = [torch.zeros_like(p) for p in params]


def adam_step(params, grads, moments: AdamMoments, step_index: int, cfg: TrainConfig):
    """One Adam update with bias correction at the decayed learning rate.

    ``step_index`` is 1-based: the first update uses the full learning
    rate and bias-correction exponent 1.
    """
    if step_index < 1:
        raise ValueError("step_index starts at 1")
    lr = effective_lr(step_index - 1, cfg)
    bc1 = 1.0 - cfg.beta1 ** step_index
    bc2 = 1.0 - cfg.beta2 ** step_index
    total = 0.0
    with torch.no_grad():
        for g in grads:
            total += float(g.sum())
        if not math.isfinite(total):
            raise NonFiniteGradient("gradient contains NaN/Inf")
        for p, g, m, v in zip(params, grads, moments.m, moments.v):
            m.mul_(cfg.beta1).add_(g, alpha=1.0 - cfg.beta1)
            v.mul_(cfg.beta2).addcmul_(g, g, value=1.0 - cfg.beta2)
            denom = (v / bc2).sqrt_().add_(cfg.eps)
            p.addcdiv_(m / bc1, denom, value=-lr)
    return params


# --------------------------------------------------------------------- checkpoints

def _param_tensors(model):
    return [p for _, p in model.named_parameters()]


def write_layout(path, model) -> None:
    lines = ["# name dtype shape offset_elements numel"]
    offset = 0
    for name, p in model.named_parameters():
        shape = "x".join(str(d) for d in p.shape) or "scalar"
        lines.append(f"{name} {str(p.dtype).replace('torch.', '')} {shape} {offset} {p.numel()}")
        offset += p.numel()
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def save_checkpoint(path, model, moments: AdamMoments, step: int) -> None:
    params = _param_tensors(model)
    blobs = []
    for group in (params, moments.m, moments.v):
        for t in group:
            blobs.append(t.detach().cpu().numpy().tobytes())
    rng_state = torch.get_rng_state().numpy().tobytes()
    header = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "step": step,
        "dtype": str(params[0].dtype).replace("torch.", ""),
        "n_tensors": len(params),
        "payload_bytes": sum(len(b) for b in blobs),
        "rng_bytes": len(rng_state),
    }
    tmp = str(path) + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        for blob in blobs:
            fh.write(blob)
        fh.write(rng_state)
    os.replace(tmp, path)


def load_checkpoint(path, model, moments: AdamMoments | None = None,
                    restore_rng: bool = True) -> int:
    path = Path(path)
    if not path.exists():
        raise MissingCheckpoint(str(path))
    with open(path, "rb") as fh:
        if fh.readline() != CHECKPOINT_MAGIC:
            raise MissingCheckpoint(f"{path} is not a checkpoint file")
        header = json.loads(fh.readline())
        payload = fh.read()
    params = _param_tensors(model)
    groups = [params]
    if moments is not None:
        groups += [moments.m, moments.v]
    dtype = np.dtype(header["dtype"])
    offset = 0
    with torch.no_grad():
        for group in groups:
            for t in group:
                arr = np.frombuffer(payload, dtype=dtype, count=t.numel(), offset=offset)
                t.copy_(torch.from_numpy(arr.copy()).view(t.shape))
                offset += t.numel() * dtype.itemsize
    if restore_rng:
        rng_state = payload[header["payload_bytes"]:]
        torch.set_rng_state(torch.frombuffer(bytearray(rng_state), dtype=torch.uint8).clone())
    return int(header["step"])


def checkpoint_path(ckpt_dir, step: int) -> Path:
    return Path(ckpt_dir) / f"step_{step:08d}.bin"


# --------------------------------------------------------------------- batching

def pad_stack(seqs, pad_id, length=None) -> torch.Tensor:
    length = length or max(len(s) for s in seqs)
    out = torch.full((len(seqs), length), pad_id, dtype=torch.long)
    for i, s in enumerate(seqs):
        out[i, : len(s)] = torch.as_tensor(s, dtype=torch.long)
    return out


# --------------------------------------------------------------------- training

@dataclass
class TrainResult:
    checkpoint_steps: list[int]
    ckpt_dir: Path
    log_path: Path
    final_step: int
    aborted: str | None = None


def train(lines, model_cfg: ModelConfig, train_cfg: TrainConfig, out_dir,
          tokenizer: Tokenizer | None = None, resume_from=None) -> TrainResult:
    """Train on dataset lines; checkpoint every interval; log step,loss,lr."""
    out_dir = Path(out_dir)
    ckpt_dir = out_dir / "checkpoints"
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / "train_log.csv"
    tokenizer = tokenizer or Tokenizer.from_grammar()
    dtype = _DTYPES[train_cfg.precision]

    encoded = [tokenizer.encode(line) for line in lines]
    longest = max(len(e) for e in encoded)
    if longest > model_cfg.max_seq_len:
        raise SequenceTooLong(f"dataset line of {longest} tokens > max_seq_len")

    torch.manual_seed(derived_seed(train_cfg.seed, "init"))
    model = DecoderLM(model_cfg).to(dtype)
    model.train()
    params = _param_tensors(model)
    moments = AdamMoments(params)

    start_step = 0
    if resume_from is not None:
        start_step = load_checkpoint(resume_from, model, moments)
        log_fh = open(log_path, "a", encoding="utf-8")
    else:
        log_fh = open(log_path, "w", encoding="utf-8")
        log_fh.write("step,loss,lr\n")

    checkpoint_steps = []
    aborted = None
    write_layout(ckpt_dir / "params.layout.txt", model)
    try:
        for step in range(start_step, train_cfg.total_steps):
            batch_rng = stream(train_cfg.seed, "batch", step)
            idx = batch_rng.integers(0, len(encoded), size=train_cfg.batch_size)
            batch = pad_stack([encoded[i] for i in idx], tokenizer.pad_id)
            x, y = batch[:, :-1], batch[:, 1:]
            logits = model(x)
            loss = lm_loss(logits, y, tokenizer.pad_id)
            model.zero_grad(set_to_none=False)
            loss.backward()
            lr_now = effective_lr(step, train_cfg)
            log_fh.write(f"{step},{loss.item():.6f},{lr_now:.3e}\n")
            try:
                adam_step(params, [p.grad for p in params], moments, step + 1, train_cfg)
            except NonFiniteGradient:
                aborted = f"non-finite gradient at step {step}"
                log_fh.write(f"{step},aborted,{lr_now:.3e}\n")
                raise
            if (step + 1) % train_cfg.checkpoint_interval == 0:
                save_checkpoint(checkpoint_path(ckpt_dir, step + 1), model, moments, step + 1)
                checkpoint_steps.append(step + 1)
                log_fh.flush()
    finally:
        log_fh.close()

    return TrainResult(checkpoint_steps, ckpt_dir, log_path,
                       final_step=train_cfg.total_steps, aborted=aborted)


def list_checkpoints(ckpt_dir) -> list[tuple[int, Path]]:
    out = []
    for p in sorted(Path(ckpt_dir).glob("step_*.bin")):
        out.append((int(p.stem.split("_")[1]), p))
    return out


def build_model(model_cfg: ModelConfig, precision: str = "float32") -> DecoderLM:
    model = DecoderLM(model_cfg).to(_DTYPES[precision])
    model.eval()
    return model
