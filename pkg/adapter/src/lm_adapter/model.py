"""Causal-LM wrapper: weighted negative log-likelihood training over the
target segment only, deterministic beam-search generation, checkpoint
save/load in the library's native format.

Sequences are laid out as [BOS] source [SEP] target [EOS]; source positions
are masked out of the loss, and each pair's summed target cross-entropy is
scaled by its weight, so a weight of 0 contributes exactly nothing.
"""

from __future__ import annotations

import logging
from pathlib import Path

import torch
from torch.nn import functional as F
from transformers import GPT2Config, GPT2LMHeadModel

from .bytes_tokenizer import ByteTokenizer
from .config import AdapterConfig

logger = logging.getLogger(__name__)


def _quiet_hf() -> None:
    # keep checkpoint-shard progress bars off stderr in serving processes
    try:
        from transformers.utils import logging as hf_logging

        hf_logging.disable_progress_bar()
    except Exception:
        pass


class WeightedLmModel:
    def __init__(self, config: AdapterConfig):
        _quiet_hf()
        self.config = config
        self.device = torch.device(config.device)
        self.tokenizer = ByteTokenizer()
        self.model = GPT2LMHeadModel.from_pretrained(config.model).to(self.device)
        if self.model.config.vocab_size < self.tokenizer.vocab_size:
            raise ValueError(
                f"checkpoint vocab size {self.model.config.vocab_size} is smaller than the "
                f"byte tokenizer's {self.tokenizer.vocab_size}")
        self._apply_freezing()
        self._reset_optimizer()

    def _apply_freezing(self) -> None:
        if self.config.freeze_embeddings:
            # wte is tied to the LM head in GPT-2; freezing it freezes both.
            self.model.transformer.wte.weight.requires_grad_(False)
            self.model.transformer.wpe.weight.requires_grad_(False)

    def _reset_optimizer(self) -> None:
        trainable = [p for p in self.model.parameters() if p.requires_grad]
        self.optimizer = torch.optim.Adam(trainable, lr=self.config.learning_rate)

    def _encode_pair(self, source: str, target: str) -> tuple[list[int], list[int]]:
        tok = self.tokenizer
        source_ids = tok.encode(source, self.config.max_source_tokens)
        target_ids = tok.encode(target, self.config.max_target_tokens)
        ids = [tok.bos_id] + source_ids + [tok.sep_id] + target_ids + [tok.eos_id]
        # next-token labels: prediction of position i+1 happens at position i,
        # so the target segment (and EOS) is supervised from the SEP onwards
        labels = [-100] * (1 + len(source_ids)) + target_ids + [tok.eos_id] + [-100]
        return ids, labels

    def train_pairs(self, pairs) -> float:
        """One optimizer step over the given (source, target, weight) pairs.

        Returns the scaled loss; all-zero weights yield a zero loss and leave
        the parameters untouched.
        """
        if not pairs:
            return 0.0
        self.model.train()
        tok = self.tokenizer
        encoded = [self._encode_pair(p["source"], p["target"]) for p in pairs]
        width = max(len(ids) for ids, _ in encoded)
        input_ids = torch.full((len(encoded), width), tok.pad_id, dtype=torch.long)
        attention = torch.zeros((len(encoded), width), dtype=torch.long)
        labels = torch.full((len(encoded), width), -100, dtype=torch.long)
        for row, (ids, labs) in enumerate(encoded):
            input_ids[row, :len(ids)] = torch.tensor(ids)
            attention[row, :len(ids)] = 1
            labels[row, :len(labs)] = torch.tensor(labs)
        weights = torch.tensor([float(p.get("weight", 1.0)) for p in pairs])

        input_ids = input_ids.to(self.device)
        attention = attention.to(self.device)
        labels = labels.to(self.device)
        weights = weights.to(self.device)

        logits = self.model(input_ids=input_ids, attention_mask=attention).logits
        shift_logits = logits[:, :-1, :]
        shift_labels = labels[:, 1:]
        per_token = F.cross_entropy(
            shift_logits.reshape(-1, shift_logits.size(-1)),
            shift_labels.reshape(-1),
            ignore_index=-100, reduction="none",
        ).view(shift_labels.shape)
        per_pair = per_token.sum(dim=1)  # source positions carry label -100
        loss = (weights * per_pair).sum() / len(pairs)

        self.optimizer.zero_grad(set_to_none=True)
        loss.backward()
        if self.config.grad_clip_norm > 0:
            torch.nn.utils.clip_grad_norm_(
                (p for p in self.model.parameters() if p.requires_grad),
                self.config.grad_clip_norm)
        self.optimizer.step()
        return float(loss.detach().cpu())

    @torch.no_grad()
    def generate(self, inputs, beam_size: int = 1) -> list[str]:
        """Beam-search decode one output per input; deterministic."""
        if beam_size < 1:
            raise ValueError("beam_size must be >= 1")
        self.model.eval()
        tok = self.tokenizer
        outputs = []
        for text in inputs:
            prompt = [tok.bos_id] + tok.encode(text, self.config.max_source_tokens) + [tok.sep_id]
            ids = torch.tensor([prompt], dtype=torch.long, device=self.device)
            generated = self.model.generate(
                ids,
                attention_mask=torch.ones_like(ids),
                num_beams=beam_size,
                do_sample=False,
                max_new_tokens=self.config.max_target_tokens,
                eos_token_id=tok.eos_id,
                pad_token_id=tok.pad_id,
                early_stopping=beam_size > 1,
            )
            continuation = generated[0, len(prompt):].tolist()
            if tok.eos_id in continuation:
                continuation = continuation[:continuation.index(tok.eos_id)]
            outputs.append(tok.decode(continuation))
        return outputs

    def save(self, path) -> None:
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        self.model.save_pretrained(path)

    def load(self, path) -> None:
        self.model = GPT2LMHeadModel.from_pretrained(Path(path)).to(self.device)
        self._apply_freezing()
        self._reset_optimizer()


def init_tiny_checkpoint(path, seed: int = 0, n_embd: int = 32, n_layer: int = 2,
                         n_head: int = 2, n_positions: int = 1024) -> None:
    """Write a small randomly initialized byte-vocabulary checkpoint.

    Lets the server and its tests run without downloading pretrained weights;
    deterministic for a fixed seed.
    """
    _quiet_hf()
    tok = ByteTokenizer()
    torch.manual_seed(seed)
    config = GPT2Config(
        vocab_size=tok.vocab_size, n_positions=n_positions, n_embd=n_embd,
        n_layer=n_layer, n_head=n_head,
        bos_token_id=tok.bos_id, eos_token_id=tok.eos_id, pad_token_id=tok.pad_id,
        # dropout off so training steps are reproducible in tests
        resid_pdrop=0.0, embd_pdrop=0.0, attn_pdrop=0.0,
    )
    GPT2LMHeadModel(config).save_pretrained(Path(path))
