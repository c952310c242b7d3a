"""Synthetic corpora for desk-scale runs: random tables with sampled logical
forms and template-realized descriptions as gold data.

Generated tables always carry a unique key column, numeric columns, and a
category column with a strict-majority value, so every topic is samplable.
"""

from __future__ import annotations

import random

from .dsl import SamplingExhausted, print_lf, realize_template, sample_lf
from .tables import LOGIC_TYPES, Corpus, SupervisedInstance, Table

_FIRST = ["mark", "john", "sam", "anna", "lucy", "peter", "carla", "diego", "mia", "owen",
          "nina", "paul", "rita", "tom", "vera", "walt", "ines", "hugo", "lea", "finn"]
_LAST = ["dacey", "smith", "fox", "reed", "stone", "lane", "cole", "hart", "bloom", "wells",
         "marsh", "frost", "gale", "pond", "rhodes", "slate", "vance", "york", "ash", "birch"]
_TEAMS = ["yale", "harvard", "brown", "cornell", "penn", "columbia", "princeton", "dartmouth"]
_DIVISIONS = ["east", "west", "north", "south"]
_SPORTS = ["season", "league", "cup", "tournament", "series"]
_MONTH_NAMES = ["january", "february", "march", "april", "may", "june", "july",
                "august", "september", "october", "november", "december"]


def make_table(table_id: str, rng: random.Random) -> Table:
    n_rows = rng.randint(3, 6)
    year = rng.randint(1950, 2020)
    caption = f"{year} {rng.choice(_TEAMS)} {rng.choice(_SPORTS)}"
    columns = ["player", "goals", "points", "division", "date"]

    names = rng.sample(_FIRST, n_rows)
    lasts = rng.sample(_LAST, n_rows)
    majority_division = rng.choice(_DIVISIONS)
    rows = []
    for i in range(n_rows):
        goals = rng.randint(0, 30)
        points = rng.randint(0, 120)
        division = majority_division if i <= n_rows // 2 else rng.choice(_DIVISIONS)
        month = rng.choice(_MONTH_NAMES)
        day = rng.randint(1, 28)
        rows.append([
            f"{names[i]} {lasts[i]}",
            str(goals),
            str(points),
            division,
            f"{month} {day} , {year}",
        ])
    return Table.from_raw(table_id, caption, columns, rows)


def make_corpus(n_tables: int, per_table: int = 2, seed: int = 0,
                id_prefix: str = "syn") -> Corpus:
    """Tables plus sampler/template gold instances, topics cycled per table."""
    rng = random.Random(seed)
    corpus = Corpus()
    for i in range(n_tables):
        table = make_table(f"{id_prefix}{i:04d}", rng)
        corpus.add_table(table)
        topics = rng.sample(LOGIC_TYPES, len(LOGIC_TYPES))
        made = 0
        for topic in topics:
            if made >= per_table:
                break
            try:
                ast = sample_lf(table, topic, seed=rng.randrange(10**9), depth_budget=3)
            except SamplingExhausted:
                continue
            corpus.instances.append(SupervisedInstance(
                topic, table, print_lf(ast), realize_template(ast, table)))
            made += 1
    return corpus


def make_splits(n_tables: int, per_table: int = 2, seed: int = 0) -> tuple[Corpus, Corpus, Corpus]:
    """Train/validation/test corpora over disjoint tables (8:1:1 by table)."""
    full = make_corpus(n_tables, per_table, seed)
    train, valid, test = Corpus(), Corpus(), Corpus()
    buckets = [train] * 8 + [valid, test]
    assignment = {}
    for i, table in enumerate(full.tables.values()):
        bucket = buckets[i % len(buckets)]
        bucket.add_table(table)
        assignment[table.id] = bucket
    for inst in full.instances:
        assignment[inst.table.id].instances.append(inst)
    return train, valid, test
