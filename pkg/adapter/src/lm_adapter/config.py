"""Adapter configuration."""

from __future__ import annotations

from dataclasses import dataclass

TOTAL_TOKEN_BUDGET = 800


@dataclass
class AdapterConfig:
    model: str = "gpt2"          # HF model name or local checkpoint directory
    max_source_tokens: int = 600
    max_target_tokens: int = 200
    learning_rate: float = 2e-5
    batch_size: int = 2
    grad_clip_norm: float = 5.0  # L2 clipping threshold; <= 0 disables
    freeze_embeddings: bool = True
    device: str = "cpu"
    seed: int = 42

    def __post_init__(self):
        if self.max_source_tokens > TOTAL_TOKEN_BUDGET or self.max_target_tokens > TOTAL_TOKEN_BUDGET:
            raise ValueError(f"token lengths must be <= {TOTAL_TOKEN_BUDGET}")
        if self.max_source_tokens < 1 or self.max_target_tokens < 1:
            raise ValueError("token lengths must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning rate must be >= 0")
