"""Decoder-only transformer trained from scratch on dataset lines."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import torch
import torch.nn as nn
from torch.nn import functional as F

from .errors import SequenceTooLong, ShapeMismatch
from .grammar import VOCAB_SIZE

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelConfig:
    n_layers: int = 2
    n_heads: int = 4
    d_model: int = 128
    max_seq_len: int = 64
    dropout: float = 0.1
    vocab_size: int = VOCAB_SIZE
    positional: str = "learned"  # or "sinusoidal"

    def __post_init__(self):
        if self.d_model % self.n_heads != 0:
            raise ValueError("d_model must be divisible by n_heads")
        if self.positional not in ("learned", "sinusoidal"):
            raise ValueError(f"unknown positional encoding {self.positional!r}")


MODEL_PRESETS = {
    "desk": ModelConfig(n_layers=2, n_heads=4, d_model=128, max_seq_len=64),
    "qf_paper": ModelConfig(n_layers=6, n_heads=8, d_model=512, max_seq_len=64),
    "ti_paper": ModelConfig(n_layers=4, n_heads=8, d_model=512, max_seq_len=64),
}


class CausalSelfAttention(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.n_heads = cfg.n_heads
        self.d_head = cfg.d_model // cfg.n_heads
        self.qkv = nn.Linear(cfg.d_model, 3 * cfg.d_model)
        self.proj = nn.Linear(cfg.d_model, cfg.d_model)
        self.attn_dropout = nn.Dropout(cfg.dropout)
        self.resid_dropout = nn.Dropout(cfg.dropout)
        mask = torch.tril(torch.ones(cfg.max_seq_len, cfg.max_seq_len, dtype=torch.bool))
        self.register_buffer("mask", mask.view(1, 1, cfg.max_seq_len, cfg.max_seq_len))

    def forward(self, x, return_attention=False):
        b, t, d = x.shape
        q, k, v = self.qkv(x).split(d, dim=2)
        q = q.view(b, t, self.n_heads, self.d_head).transpose(1, 2)
        k = k.view(b, t, self.n_heads, self.d_head).transpose(1, 2)
        v = v.view(b, t, self.n_heads, self.d_head).transpose(1, 2)
        scores = (q @ k.transpose(-2, -1)) / math.sqrt(self.d_head)
        scores = scores.masked_fill(~self.mask[:, :, :t, :t], float("-inf"))
        attn = F.softmax(scores, dim=-1)
        y = self.attn_dropout(attn) @ v
        y = y.transpose(1, 2).contiguous().view(b, t, d)
        y = self.resid_dropout(self.proj(y))
        return (y, attn) if return_attention else (y, None)


class Block(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.ln1 = nn.LayerNorm(cfg.d_model)
        self.attn = CausalSelfAttention(cfg)
        self.ln2 = nn.LayerNorm(cfg.d_model)
        self.mlp = nn.Sequential(
            nn.Linear(cfg.d_model, 4 * cfg.d_model),
            nn.GELU(),
            nn.Linear(4 * cfg.d_model, cfg.d_model),
            nn.Dropout(cfg.dropout),
        )

    def forward(self, x, return_attention=False):
        y, attn = self.attn(self.ln1(x), return_attention)
        x = x + y
        x = x + self.mlp(self.ln2(x))
        return x, attn


class DecoderLM(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.tok_emb = nn.Embedding(cfg.vocab_size, cfg.d_model)
        if cfg.positional == "learned":
            self.pos_emb = nn.Embedding(cfg.max_seq_len, cfg.d_model)
        else:
            self.register_buffer("pos_enc", _sinusoidal(cfg.max_seq_len, cfg.d_model))
            self.pos_emb = None
        self.drop = nn.Dropout(cfg.dropout)
        self.blocks = nn.ModuleList(Block(cfg) for _ in range(cfg.n_layers))
        self.ln_f = nn.LayerNorm(cfg.d_model)
        self.head = nn.Linear(cfg.d_model, cfg.vocab_size)
        self.apply(self._init_weights)

    @staticmethod
    def _init_weights(module):
        if isinstance(module, nn.Linear):
            nn.init.normal_(module.weight, mean=0.0, std=0.02)
            if module.bias is not None:
                nn.init.zeros_(module.bias)
        elif isinstance(module, nn.Embedding):
            nn.init.normal_(module.weight, mean=0.0, std=0.02)

    def forward(self, idx, return_attention=False):
        b, t = idx.shape
        if t > self.cfg.max_seq_len:
            raise SequenceTooLong(f"sequence length {t} > max {self.cfg.max_seq_len}")
        x = self.tok_emb(idx)
        if self.pos_emb is not None:
            pos = torch.arange(t, device=idx.device)
            x = x + self.pos_emb(pos)[None, :, :]
        else:
            x = x + self.pos_enc[:t].to(x.dtype)[None, :, :]
        x = self.drop(x)
        attentions = []
        for block in self.blocks:
            x, attn = block(x, return_attention)
            if return_attention:
                attentions.append(attn)
        logits = self.head(self.ln_f(x))
        return (logits, attentions) if return_attention else logits

    def n_params(self) -> int:
        return sum(p.numel() for p in self.parameters())


def _sinusoidal(length, dim):
    pos = torch.arange(length, dtype=torch.float64)[:, None]
    i = torch.arange(0, dim, 2, dtype=torch.float64)[None, :]
    angle = pos / torch.pow(10000.0, i / dim)
    enc = torch.zeros(length, dim, dtype=torch.float64)
    enc[:, 0::2] = torch.sin(angle)
    enc[:, 1::2] = torch.cos(angle)
    return enc


def lm_loss(logits, targets, pad_id):
    """Mean next-token cross-entropy over non-pad target positions.

    Callers pass already-shifted (logits, targets); every position of
    the full line (input + marker + target) contributes.
    """
    if logits.ndim != 3 or targets.ndim != 2 or logits.shape[:2] != targets.shape:
        raise ShapeMismatch(f"logits {tuple(logits.shape)} vs targets {tuple(targets.shape)}")
    mask = targets != pad_id
    if not bool(mask.any()):
        log.warning("lm_loss: every target position is padding; defining loss = 0")
        return logits.sum() * 0.0
    flat_logits = logits.reshape(-1, logits.size(-1))
    flat_targets = targets.reshape(-1)
    losses = F.cross_entropy(flat_logits, flat_targets, reduction="none")
    return (losses * mask.reshape(-1)).sum() / mask.sum()
