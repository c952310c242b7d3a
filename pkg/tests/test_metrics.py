"""Metric oracles and properties.

The BLEU/ROUGE oracles below are brute-force position-scanning
implementations, independent of the package's Counter-based code; the frozen
constants were produced by running them once and are re-derived here on every
run.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logicloom.metrics import (
    BuiltinEmbedder,
    EvalBundle,
    bleu4,
    exec_accuracy,
    greedy_match_f1,
    lf_accuracy,
    rouge,
)

from helpers import make_t1

# ---- independent oracles ------------------------------------------------------


def oracle_bleu(cands, refs):
    match = {n: 0 for n in (1, 2, 3, 4)}
    tot = {n: 0 for n in (1, 2, 3, 4)}
    clen = rlen = 0
    for c, r in zip(cands, refs):
        clen += len(c)
        rlen += len(r)
        for n in (1, 2, 3, 4):
            tot[n] += max(0, len(c) - n + 1)
            seen = []
            for i in range(len(c) - n + 1):
                g = tuple(c[i:i + n])
                if g in seen:
                    continue
                seen.append(g)
                in_cand = sum(1 for i2 in range(len(c) - n + 1) if tuple(c[i2:i2 + n]) == g)
                in_ref = sum(1 for j in range(len(r) - n + 1) if tuple(r[j:j + n]) == g)
                match[n] += min(in_cand, in_ref)
    if any(match[n] == 0 or tot[n] == 0 for n in (1, 2, 3, 4)):
        return 0.0
    logp = sum(math.log(match[n] / tot[n]) for n in (1, 2, 3, 4)) / 4
    bp = 1.0 if clen > rlen else math.exp(1 - rlen / clen)
    return 100.0 * bp * math.exp(logp)


def oracle_rouge_n(c, r, n):
    cg = [tuple(c[i:i + n]) for i in range(len(c) - n + 1)]
    rg = [tuple(r[i:i + n]) for i in range(len(r) - n + 1)]
    if not cg and not rg:
        return 1.0 if c == r else 0.0
    if not cg or not rg:
        return 0.0
    overlap = 0
    used = [False] * len(rg)
    for g in cg:
        for j, h in enumerate(rg):
            if not used[j] and h == g:
                used[j] = True
                overlap += 1
                break
    p, rr = overlap / len(cg), overlap / len(rg)
    return 0.0 if p + rr == 0 else 2 * p * rr / (p + rr)


def oracle_rouge_l(c, r):
    m, n = len(c), len(r)
    grid = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m):
        for j in range(n):
            grid[i + 1][j + 1] = grid[i][j] + 1 if c[i] == r[j] else max(grid[i][j + 1],
                                                                         grid[i + 1][j])
    lcs = grid[m][n]
    if not c or not r:
        return 1.0 if c == r else 0.0
    p, rr = lcs / len(c), lcs / len(r)
    return 0.0 if p + rr == 0 else 2 * p * rr / (p + rr)


# ---- frozen fixture -----------------------------------------------------------

FIXTURE_CANDS = [
    "the cat sat on the mat".split(),
    "there are 2 rows whose goals is 12".split(),
    "mark dacey scored the most goals in 1991".split(),
    "season the of winner is yale the 1991".split(),
]
FIXTURE_REFS = [
    "the cat sat on the mat quietly".split(),
    "there are 2 players whose goals is 12".split(),
    "mark dacey had the most goals in the 1991 season".split(),
    "the winner of the 1991 season is yale".split(),
]
FROZEN = {
    "bleu4": 45.73468967497134,
    "1": 0.8939636752136751,
    "2": 0.6022727272727273,
    "4": 0.305952380952381,
    "l": 0.7689636752136751,
}


class TestBleu:
    def test_fixture_matches_oracle_and_frozen(self):
        got = bleu4(FIXTURE_CANDS, FIXTURE_REFS)
        assert got == pytest.approx(oracle_bleu(FIXTURE_CANDS, FIXTURE_REFS), abs=1e-4)
        assert got == pytest.approx(FROZEN["bleu4"], abs=1e-4)

    def test_identity_is_exactly_100(self):
        assert bleu4(FIXTURE_REFS, FIXTURE_REFS) == 100.0

    def test_disjoint_is_zero(self):
        assert bleu4([["aa", "bb", "cc", "dd"]], [["xx", "yy", "zz", "ww"]]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            bleu4([["a"]], [["a"], ["b"]])

    def test_empty_reference(self):
        with pytest.raises(ValueError):
            bleu4([["a"]], [[]])

    def test_brevity_penalty_on_perfect_prefix(self):
        # candidate is a 6-token prefix of an 8-token reference: all precisions 1,
        # so the score is exactly the brevity penalty
        assert bleu4([list("abcdef")], [list("abcdefgh")]) == pytest.approx(
            100.0 * math.exp(1 - 8 / 6), abs=1e-9)
        # a candidate longer than its reference gets no brevity penalty
        assert bleu4([list("abcdefgh")], [list("abcdef")]) == pytest.approx(
            100.0 * math.exp((math.log(6 / 8) + math.log(5 / 7) + math.log(4 / 6)
                              + math.log(3 / 5)) / 4), abs=1e-9)


class TestRouge:
    @pytest.mark.parametrize("variant", ["1", "2", "4", "l"])
    def test_fixture_matches_oracle_and_frozen(self, variant):
        got = rouge(FIXTURE_CANDS, FIXTURE_REFS, variant)
        if variant == "l":
            oracle_vals = [oracle_rouge_l(c, r) for c, r in zip(FIXTURE_CANDS, FIXTURE_REFS)]
        else:
            oracle_vals = [oracle_rouge_n(c, r, int(variant))
                           for c, r in zip(FIXTURE_CANDS, FIXTURE_REFS)]
        assert got == pytest.approx(sum(oracle_vals) / len(oracle_vals), abs=1e-4)
        assert got == pytest.approx(FROZEN[variant], abs=1e-4)

    def test_hand_case_rouge1(self):
        assert rouge([["a", "b", "c"]], [["a", "b", "d"]], 1) == pytest.approx(2 / 3, abs=1e-4)

    def test_hand_case_rouge_l(self):
        assert rouge([["a", "b", "c", "d"]], [["d", "c", "b", "a"]], "L") == pytest.approx(
            0.25, abs=1e-4)

    @pytest.mark.parametrize("variant", [1, 2, 4, "L"])
    def test_identity_is_exactly_one(self, variant):
        assert rouge(FIXTURE_REFS, FIXTURE_REFS, variant) == 1.0

    def test_maximum_iff_equal_per_pair(self):
        # one differing pair keeps every variant strictly below 1
        cands = [["a", "b", "c", "d", "e"], ["x", "y", "z", "w"]]
        refs = [["a", "b", "c", "d", "e"], ["x", "y", "z", "q"]]
        for variant in (1, 2, 4, "L"):
            assert rouge(cands, refs, variant) < 1.0


class TestLfAccuracy:
    def test_counting(self):
        preds = ["eq { count { all_rows } ; 3 }", "count { all_rows }", "only { all_rows }"]
        golds = ["eq { count { all_rows } ; 3 }", "count { all_rows }", "most_eq { all_rows ; a ; b }"]
        assert lf_accuracy(preds, golds) == pytest.approx(2 / 3, abs=1e-4)

    def test_whitespace_only_difference_matches(self):
        assert lf_accuracy(["eq{count{all_rows};3}"], ["eq { count { all_rows } ; 3 }"]) == 1.0

    def test_unparseable_prediction_does_not_match(self):
        assert lf_accuracy(["eq { count {"], ["eq { count { all_rows } ; 3 }"]) == 0.0

    def test_identical_unparseable_strings_match_raw(self):
        assert lf_accuracy(["not an lf"], [" not an lf "]) == 1.0


class TestExecAccuracy:
    def test_mixed_fixture_7_of_10(self):
        t1 = make_t1()
        true_lfs = [
            "eq { count { all_rows } ; 3 }",
            "only { filter_eq { all_rows ; goals ; 9 } }",
            "most_eq { all_rows ; goals ; 12 }",
            "eq { max { all_rows ; goals } ; 12 }",
            "all_greater { all_rows ; goals ; 8 }",
            "eq { hop { filter_eq { all_rows ; team ; yale } ; player } ; mark dacey }",
            "round_eq { avg { all_rows ; goals } ; 11 }",
        ]
        failing = [
            "count { all_rows }",             # root is num, not bool
            "eq { count { all_rows } ; 99 }",  # executes to false
            "eq { count {",                    # unparseable
        ]
        preds = true_lfs + failing
        assert exec_accuracy(preds, [t1] * 10) == pytest.approx(0.7, abs=1e-9)

    def test_error_free_mode_counts_false_results(self):
        t1 = make_t1()
        preds = ["eq { count { all_rows } ; 99 }", "count { all_rows }"]
        assert exec_accuracy(preds, [t1] * 2, mode="truthy") == 0.0
        assert exec_accuracy(preds, [t1] * 2, mode="error-free") == 0.5

    def test_execution_error_fails(self):
        assert exec_accuracy(["eq { hop { all_rows ; player } ; x }"], [make_t1()]) == 0.0

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            exec_accuracy(["all_rows"], [make_t1()], mode="bogus")


class _OneHot:
    """Orthogonal embeddings: every distinct token gets its own axis."""

    dim = 16

    def __init__(self):
        self._axes = {}

    def embed(self, token):
        axis = self._axes.setdefault(token, len(self._axes) % self.dim)
        vec = np.zeros(self.dim)
        vec[axis] = 1.0
        return vec


class TestGreedyMatchF1:
    def test_identical(self):
        assert greedy_match_f1(["a", "b"], ["a", "b"], BuiltinEmbedder()) == pytest.approx(1.0)

    def test_order_free(self):
        assert greedy_match_f1(["a", "b"], ["b", "a"], BuiltinEmbedder()) == pytest.approx(1.0)

    def test_orthogonal_is_zero(self):
        assert greedy_match_f1(["aa"], ["bb"], _OneHot()) == 0.0

    def test_swap_leaves_f1_unchanged(self):
        embedder = BuiltinEmbedder()
        cand = ["the", "cat", "sat"]
        ref = ["a", "cat", "slept", "here"]
        assert greedy_match_f1(cand, ref, embedder) == pytest.approx(
            greedy_match_f1(ref, cand, embedder))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            greedy_match_f1([], ["a"], BuiltinEmbedder())


class TestBuiltinEmbedder:
    def test_deterministic(self):
        a = BuiltinEmbedder().embed("cat")
        b = BuiltinEmbedder().embed("cat")
        assert np.array_equal(a, b)

    def test_unit_norm_and_self_cosine(self):
        vec = BuiltinEmbedder().embed("cat")
        assert np.linalg.norm(vec) == pytest.approx(1.0)

    def test_trigram_similarity_ordering(self):
        embedder = BuiltinEmbedder()
        near = float(embedder.embed("superlative") @ embedder.embed("superlatives"))
        far = float(embedder.embed("superlative") @ embedder.embed("count"))
        assert near > far

    def test_dimension_fixed(self):
        embedder = BuiltinEmbedder()
        assert embedder.embed("a").shape == (512,)
        assert embedder.embed("longertoken").shape == (512,)


_TOKENS = st.lists(st.sampled_from("a b c d e f g aa bb cc".split()), min_size=1, max_size=12)


class TestRangeProperties:
    @settings(max_examples=150, deadline=None)
    @given(st.lists(st.tuples(_TOKENS, _TOKENS), min_size=1, max_size=5))
    def test_all_metrics_in_declared_ranges(self, pairs):
        cands = [c for c, _ in pairs]
        refs = [r for _, r in pairs]
        assert 0.0 <= bleu4(cands, refs) <= 100.0
        for variant in (1, 2, 4, "L"):
            assert 0.0 <= rouge(cands, refs, variant) <= 1.0

    @settings(max_examples=100, deadline=None)
    @given(_TOKENS, _TOKENS)
    def test_greedy_f1_clamped_and_symmetric(self, cand, ref):
        embedder = BuiltinEmbedder()
        score = greedy_match_f1(cand, ref, embedder)
        assert 0.0 <= score <= 1.0
        assert score == pytest.approx(greedy_match_f1(ref, cand, embedder))


class TestEvalBundle:
    def test_range_validation(self):
        with pytest.raises(ValueError):
            EvalBundle(n=1, bleu4=101.0)
        with pytest.raises(ValueError):
            EvalBundle(n=0)

    def test_json_round_trip(self):
        bundle = EvalBundle(n=3, bleu4=50.0, rouge1=0.5, lf_acc=0.9)
        again = EvalBundle.from_json(bundle.to_json())
        assert again == bundle

    def test_format_table_fixed_order(self):
        table = EvalBundle(n=2, bleu4=12.5).format_table()
        lines = table.splitlines()
        assert lines[1].startswith("bleu4")
        assert lines[-1].startswith("n")


def test_exact_true_prediction_contributes_to_both_accuracies():
    t1 = make_t1()
    gold = "eq { count { all_rows } ; 3 }"
    assert lf_accuracy([gold], [gold]) == 1.0
    assert exec_accuracy([gold], [t1]) == 1.0
