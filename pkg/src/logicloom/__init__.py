"""logicloom: a logical-form DSL over tables with topic-conditioned data
augmentation, round-trip weighting, and teacher-student joint training for
table-aware text generation and logical form generation."""

from .tables import (
    LOGIC_TYPES,
    CellValue,
    Corpus,
    SupervisedInstance,
    Table,
    load_dataset,
    load_tables,
    parse_cell,
)

__version__ = "0.1.0"

__all__ = [
    "LOGIC_TYPES",
    "CellValue",
    "Corpus",
    "SupervisedInstance",
    "Table",
    "load_dataset",
    "load_tables",
    "parse_cell",
    "__version__",
]
