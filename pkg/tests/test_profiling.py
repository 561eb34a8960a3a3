from __future__ import annotations

import itertools
import json
import uuid
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from benchstab.errors import ValidationError
from benchstab.profiling import (
    ColumnProfile,
    TaxonomyTag,
    classify_column,
    gini_concentration,
    load_lexicon,
    load_profiler_config,
    mean_offdiag_cosine,
    profile_column,
    profile_table,
    structural_metrics,
)

FIXTURE = Path(__file__).parent / "data" / "labeled_columns.json"


def test_lexicons_load():
    wl = load_lexicon("wordlist")
    sw = load_lexicon("stopwords")
    assert len(wl) > 100_000 and "house" in wl
    assert "the" in sw and "house" not in sw


def test_counting_example():
    p = profile_column(["Red", "Red", "Blue", "Red"])
    assert p.uniqueness_ratio == 0.5
    assert p.avg_words_per_cell == 1.0
    assert classify_column(p) is TaxonomyTag.CATEGORICAL


def test_stopword_example_against_bundled_list():
    sw = load_lexicon("stopwords")
    cells = ["the quick brown fox", "a lazy dog"]
    toks = [t for c in cells for t in c.split()]
    p = profile_column(cells)
    assert p.stopword_density == pytest.approx(sum(t in sw for t in toks) / len(toks))
    assert p.stopword_density > 0
    assert p.multiword_fraction == 1.0


def test_uuid_column():
    r = np.random.default_rng(0)
    ids = [str(uuid.UUID(int=int(r.integers(0, 2**63)) << 64 | int(r.integers(0, 2**63)))) for _ in range(1000)]
    p = profile_column(ids)
    assert p.uniqueness_ratio == 1.0
    assert p.dictionary_hit_rate < 0.01
    assert classify_column(p) is TaxonomyTag.IDENTIFIER


def test_datetime_examples():
    assert classify_column(profile_column(["2024-03-15", "2023-11-02", "2024-01-30"])) is TaxonomyTag.DATETIME
    assert classify_column(profile_column(["March 15, 2024", "Q1 2024", "April 2, 2023"])) is TaxonomyTag.DATETIME


def test_nulls_counted_separately():
    p = profile_column(["a b", None, "", float("nan"), "c"])
    assert p.n_null == 3 and p.n_cells == 2
    with pytest.raises(ValidationError):
        profile_column([None, ""])


def test_row_order_invariance_with_sampling():
    r = np.random.default_rng(1)
    vals = [f"item {int(v)}" for v in r.integers(0, 3000, 2500)]
    a = profile_column(vals)
    b = profile_column(list(reversed(vals)))
    assert a == b and a.n_cells == 1000


@given(st.lists(st.text(min_size=0, max_size=12), min_size=1, max_size=25))
def test_classification_is_total_and_fractions_bounded(values):
    if all(not v.strip() for v in values):
        return
    p = profile_column(values)
    tag = classify_column(p)
    assert isinstance(tag, TaxonomyTag)
    for f in (p.dictionary_hit_rate, p.stopword_density, p.symbol_density, p.proportion_numeric,
              p.multiword_fraction, p.uniqueness_ratio, p.titlecase_fraction, *p.pattern_hits.values()):
        assert 0.0 <= f <= 1.0
    assert p.avg_words_per_cell >= 0 and p.n_cells >= 1


def test_config_override(tmp_path):
    text = (Path(__file__).parents[1] / "src/benchstab/resources/profiling.ini").read_text()
    text = text.replace("[identifier]\nmin_uniqueness = 0.95", "[identifier]\nmin_uniqueness = 2.0")
    path = tmp_path / "p.ini"
    path.write_text(text)
    cfg = load_profiler_config(path)
    hashes = [f"{i:040x}" for i in range(0, 10**6, 997)][:200]
    assert classify_column(profile_column(hashes)) is TaxonomyTag.IDENTIFIER
    assert classify_column(profile_column(hashes, config=cfg), cfg) is not TaxonomyTag.IDENTIFIER
    with pytest.raises(ValidationError):
        load_profiler_config(tmp_path / "missing.ini")


def test_labeled_fixture_agreement():
    cols = json.loads(FIXTURE.read_text())["columns"]
    assert len(cols) == 30
    agree = sum(classify_column(profile_column(c["values"])).value == c["label"] for c in cols)
    assert agree / 30 >= 0.9


def test_structural_single_cell():
    s = structural_metrics({"c": ["hello world"]})
    assert s.avg_tokens_per_cell == 2
    assert s.avg_chars_per_cell == 11
    assert s.avg_unique_alpha_words_per_cell == 2
    assert s.text_col_ratio == 1.0


def test_structural_identical_column_and_text_ratio():
    s = structural_metrics({"c": ["x y"] * 8, "num": ["1", "2.5", "3"] * 3})
    assert s.proportion_unique_values == pytest.approx(1 / 8)
    assert s.text_col_ratio == 0.5
    with pytest.raises(ValidationError):
        structural_metrics({})


def _brute_ngrams(s):
    out = set()
    for i, j in itertools.combinations(range(len(s) + 1), 2):
        if 2 <= j - i <= 4:
            out.add(s[i:j])
    return len(out)


def test_ngram_counting_against_enumeration():
    assert structural_metrics({"c": ["ab"]}).avg_unique_ngrams_per_cell == 1
    r = np.random.default_rng(7)
    words = ["".join(r.choice(list("abcab "), size=int(r.integers(1, 9)))).strip() or "q" for _ in range(5)]
    s = structural_metrics({"c": words})
    cells = sorted(w.strip() for w in words)
    assert s.avg_unique_ngrams_per_cell == pytest.approx(np.mean([_brute_ngrams(c) for c in cells]))


def test_profile_table_skips_numeric_columns():
    out = profile_table({"n": ["1", "2", "3"], "t": ["a", "b", "a"]})
    assert list(out) == ["t"]


def _gini_brute(v):
    v = np.asarray(v, float)
    return sum(abs(a - b) for a in v for b in v) / (2 * len(v) ** 2 * v.mean())


def test_gini_examples_and_errors():
    assert gini_concentration([1, 1, 1, 1]) == 0.0
    assert gini_concentration([0, 0, 0, 4]) == pytest.approx(0.75)
    with pytest.raises(ValidationError):
        gini_concentration([0, 0])
    with pytest.raises(ValidationError):
        gini_concentration([1, -1])


@given(st.lists(st.floats(0, 100), min_size=2, max_size=20).filter(lambda v: sum(v) > 1e-6),
       st.floats(0.01, 100), st.randoms())
def test_gini_properties(v, c, r):
    g = gini_concentration(v)
    assert g == pytest.approx(_gini_brute(v), abs=1e-9)
    assert 0 <= g < 1
    assert gini_concentration(np.array(v) * c) == pytest.approx(g, abs=1e-12)
    w = list(v)
    r.shuffle(w)
    assert gini_concentration(w) == pytest.approx(g, abs=1e-12)


def test_cosine_examples():
    assert mean_offdiag_cosine([[1, 2], [1, 2], [1, 2]]) == pytest.approx(1.0)
    assert mean_offdiag_cosine([[1, 0], [0, 3]]) == pytest.approx(0.0)
    rows = np.array([[1.0, 0.0], [1.0, 1.0], [-1.0, 2.0]])
    brute = np.mean([a @ b / np.linalg.norm(a) / np.linalg.norm(b) for a, b in itertools.combinations(rows, 2)])
    assert mean_offdiag_cosine(rows) == pytest.approx(brute, abs=1e-15)
    with pytest.raises(ValidationError):
        mean_offdiag_cosine([[1, 0], [0, 0]])
