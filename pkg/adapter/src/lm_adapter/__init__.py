"""Wire-protocol server wrapping a causal language model: weighted-loss
fine-tuning, beam-search generation, checkpoint save/load."""

from .config import AdapterConfig
from .model import WeightedLmModel, init_tiny_checkpoint

__version__ = "0.1.0"

__all__ = ["AdapterConfig", "WeightedLmModel", "init_tiny_checkpoint", "__version__"]
