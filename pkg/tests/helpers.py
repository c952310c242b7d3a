"""Shared test helpers: reference tables, random-table generation, spy models."""

from __future__ import annotations

import random
import zlib

from logicloom.models import GenerativeModel, WeightedPair
from logicloom.tables import Table


def make_t1() -> Table:
    return Table.from_raw(
        "t1", "1991 season", ["player", "goals", "team"],
        [["mark dacey", "12", "yale"],
         ["john smith", "9", "harvard"],
         ["sam fox", "12", "brown"]],
    )


def make_t2() -> Table:
    return Table.from_raw(
        "t2", "2008 matches", ["date", "opponent", "score", "attendance"],
        [["august 12 , 2008", "fc barcelona", "3 - 1", "45,000"],
         ["august 19 , 2008", "real madrid", "0 - 2", "60,123"],
         ["september 2 , 2008", "valencia cf", "1 - 1", "30,500"]],
    )


_WORDS = ["yale", "harvard", "brown", "fc barcelona", "real madrid", "mark dacey",
          "john smith", "red", "blue", "green", "final", "semi final"]
_MESSY = ["12 (3 ot)", "round 4", "n / a", "", "3 - 1", "w 27 - 10"]
_COLS = ["alpha", "beta", "gamma", "delta", "epsilon"]


def _random_cell(rng: random.Random, flavor: str) -> str:
    if flavor == "number":
        return rng.choice([str(rng.randint(-5, 120)), f"{rng.randint(1, 9)},{rng.randint(100, 999)}",
                           str(round(rng.uniform(0, 50), 1))])
    if flavor == "date":
        month = rng.choice(["january", "march", "august", "september", "dec"])
        day = rng.randint(1, 28)
        if rng.random() < 0.5:
            return f"{month} {day}"
        return f"{month} {day} , {rng.randint(1950, 2020)}"
    if flavor == "messy":
        return rng.choice(_MESSY)
    return rng.choice(_WORDS)


def random_table(rng: random.Random, table_id: str = "rt", max_rows: int = 6,
                 max_cols: int = 5) -> Table:
    """An arbitrary small table: mixed numeric/date/word/messy columns,
    possibly ragged content already padded to rectangular."""
    n_cols = rng.randint(1, max_cols)
    n_rows = rng.randint(1, max_rows)
    columns = rng.sample(_COLS, n_cols)
    flavors = [rng.choice(["number", "date", "word", "messy", "word"]) for _ in range(n_cols)]
    rows = [[_random_cell(rng, flavors[c]) for c in range(n_cols)] for _ in range(n_rows)]
    return Table.from_raw(table_id, f"{table_id} caption", columns, rows)


class SpyModel(GenerativeModel):
    """Records every train call; generates a deterministic function of its
    version (train-call count) and the input, so behavior changes exactly when
    trained and save/load transfers behavior."""

    def __init__(self):
        self.train_calls: list[list[WeightedPair]] = []
        self.generate_log: list[tuple[int, list[str], int]] = []
        self.version = 0

    def train_weighted(self, pairs):
        self.train_calls.append(list(pairs))
        self.version += 1
        return 0.0

    def generate(self, inputs, beam_size: int = 1):
        self.generate_log.append((self.version, list(inputs), beam_size))
        return [f"v{self.version}.{zlib.crc32(text.encode()) % 99999}" for text in inputs]

    def save(self, path):
        import json
        from pathlib import Path

        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        (path / "spy.json").write_text(json.dumps({"version": self.version}))

    def load(self, path):
        import json
        from pathlib import Path

        self.version = json.loads((Path(path) / "spy.json").read_text())["version"]

    @property
    def trained_pairs(self) -> list[WeightedPair]:
        return [pair for batch in self.train_calls for pair in batch]


class EchoModel(GenerativeModel):
    """Oracle spy: answers from a fixed source -> target mapping, "" otherwise."""

    def __init__(self, mapping: dict[str, str] | None = None):
        self.mapping = dict(mapping or {})

    def train_weighted(self, pairs):
        for pair in pairs:
            self.mapping[pair.source] = pair.target
        return 0.0

    def generate(self, inputs, beam_size: int = 1):
        return [self.mapping.get(text, "") for text in inputs]

    def save(self, path):
        import json
        from pathlib import Path

        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        (path / "echo.json").write_text(json.dumps(self.mapping))

    def load(self, path):
        import json
        from pathlib import Path

        self.mapping = json.loads((Path(path) / "echo.json").read_text())
