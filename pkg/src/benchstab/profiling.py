"""String-column profiling: deterministic indices, a six-way taxonomy, table metrics.

A column is profiled on its non-null cells. Cells are put in a canonical
(sorted) order first and, beyond ``max_rows`` cells, a seeded uniform sample
is taken from that order, so every index is independent of row order.

Tokens are whitespace-separated. A token counts toward the dictionary hit
rate and stopword density after lower-casing and stripping surrounding
punctuation; alphabetic means Unicode letter category, so the metrics do not
depend on the locale.

Thresholds and regular expressions live in ``resources/profiling.ini``.
"""

from __future__ import annotations

import configparser
import enum
import math
import re
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import rng
from .errors import ValidationError

__all__ = [
    "ColumnProfile",
    "ProfilerConfig",
    "StructuralMetrics",
    "TaxonomyTag",
    "classify_column",
    "gini_concentration",
    "load_lexicon",
    "load_profiler_config",
    "mean_offdiag_cosine",
    "profile_column",
    "profile_table",
    "structural_metrics",
]

_ALPHA_WORD = re.compile(r"[^\W\d_]{2,}")
_EDGE_PUNCT = re.compile(r"^[^\w]+|[^\w]+$")


class TaxonomyTag(str, enum.Enum):
    CATEGORICAL = "Categorical"
    NAME = "Name"
    STRUCTURED_CODE = "StructuredCode"
    FREE_TEXT = "FreeText"
    IDENTIFIER = "Identifier"
    DATETIME = "Datetime"


@dataclass(frozen=True)
class ProfilerConfig:
    max_rows: int
    seed: int
    thresholds: dict[str, dict[str, float]]
    patterns: dict[str, re.Pattern]
    code_patterns: tuple[str, ...]
    wordlist_path: str | None = None
    stopwords_path: str | None = None

    def t(self, section: str, key: str) -> float:
        return self.thresholds[section][key]


def _join_pattern(raw: str) -> str:
    return "".join(line.strip() for line in raw.splitlines())


def load_profiler_config(path: str | Path | None = None) -> ProfilerConfig:
    """Read thresholds and patterns from an INI file (default: the bundled one)."""
    cp = configparser.ConfigParser(interpolation=None)
    if path is None:
        cp.read_string(resources.files(__package__).joinpath("resources/profiling.ini").read_text("utf-8"))
    else:
        p = Path(path)
        if not p.is_file():
            raise ValidationError(f"profiler config not found: {p}")
        cp.read(p, encoding="utf-8")
    try:
        thresholds = {}
        for sec in ("datetime", "identifier", "free_text", "structured_code", "name"):
            thresholds[sec] = {k: float(v) for k, v in cp[sec].items() if k != "code_patterns"}
        patterns = {}
        for name, raw in cp["patterns"].items():
            patterns[name] = re.compile(_join_pattern(raw), re.IGNORECASE)
        code = tuple(s.strip() for s in cp["structured_code"]["code_patterns"].split(",") if s.strip())
        max_rows = cp.getint("sampling", "max_rows")
        seed = cp.getint("sampling", "seed")
    except (KeyError, ValueError, re.error) as exc:
        raise ValidationError(f"invalid profiler config: {exc}") from exc
    missing = [c for c in code + ("date", "numeric") if c not in patterns]
    if missing:
        raise ValidationError(f"profiler config lacks patterns: {missing}")
    if max_rows < 1:
        raise ValidationError("max_rows must be >= 1")
    lex = cp["lexicons"] if cp.has_section("lexicons") else {}
    return ProfilerConfig(max_rows, seed, thresholds, patterns, code,
                          lex.get("wordlist") or None, lex.get("stopwords") or None)


@lru_cache(maxsize=8)
def _read_lexicon(path: str | None, bundled: str) -> frozenset[str]:
    if path is None:
        text = resources.files(__package__).joinpath(f"resources/{bundled}").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip() and not w.startswith("#"))


def load_lexicon(name: str = "wordlist", path: str | Path | None = None) -> frozenset[str]:
    """Load a newline-delimited lexicon; ``name`` is ``"wordlist"`` or ``"stopwords"``."""
    if name not in ("wordlist", "stopwords"):
        raise ValidationError(f"unknown lexicon {name!r}")
    if path is not None and not Path(path).is_file():
        raise ValidationError(f"lexicon not found: {path}")
    return _read_lexicon(None if path is None else str(path), f"{name}.txt")


@dataclass(frozen=True)
class ColumnProfile:
    """Per-column indices; every fraction lies in [0, 1]."""

    dictionary_hit_rate: float
    stopword_density: float
    symbol_density: float
    proportion_numeric: float
    pattern_hits: dict[str, float]
    avg_words_per_cell: float
    multiword_fraction: float
    uniqueness_ratio: float
    n_cells: int
    titlecase_fraction: float = 0.0
    n_null: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def _is_null(v) -> bool:
    if v is None:
        return True
    if isinstance(v, float) and math.isnan(v):
        return True
    return isinstance(v, str) and not v.strip()


def _sample_cells(values: Iterable, max_rows: int, seed: int) -> tuple[list[str], int]:
    cells, n_null = [], 0
    for v in values:
        if _is_null(v):
            n_null += 1
        else:
            cells.append(str(v).strip())
    if not cells:
        raise ValidationError("column has no non-null values")
    cells.sort()
    if len(cells) > max_rows:
        g = rng.generator(seed, 0, rng.TAG_PROFILE_SAMPLE)
        idx = np.sort(g.choice(len(cells), size=max_rows, replace=False))
        cells = [cells[i] for i in idx]
    return cells, n_null


def _is_titlecase(token_words: list[str]) -> bool:
    return bool(token_words) and all(w[0].isupper() for w in token_words)


def profile_column(values: Sequence, wordlist: frozenset[str] | None = None,
                   stopwords: frozenset[str] | None = None,
                   config: ProfilerConfig | None = None) -> ColumnProfile:
    """Compute the deterministic indices of one string column.

    Examples
    --------
    >>> p = profile_column(["Red", "Red", "Blue", "Red"])
    >>> p.uniqueness_ratio, p.avg_words_per_cell
    (0.5, 1.0)
    """
    cfg = config or load_profiler_config()
    if wordlist is None:
        wordlist = load_lexicon("wordlist", cfg.wordlist_path)
    if stopwords is None:
        stopwords = load_lexicon("stopwords", cfg.stopwords_path)
    cells, n_null = _sample_cells(values, cfg.max_rows, cfg.seed)
    n = len(cells)

    n_tokens = hits = stops = 0
    n_chars = n_symbols = 0
    multi = title = 0
    words_per_cell = np.empty(n)
    for i, cell in enumerate(cells):
        toks = cell.split()
        words_per_cell[i] = len(toks)
        multi += len(toks) >= 2
        for tok in toks:
            w = _EDGE_PUNCT.sub("", tok).lower()
            n_tokens += 1
            hits += w in wordlist
            stops += w in stopwords
        title += _is_titlecase(_ALPHA_WORD.findall(cell))
        for ch in cell:
            if not ch.isspace():
                n_chars += 1
                n_symbols += not ch.isalnum()

    def frac(pattern: re.Pattern) -> float:
        return sum(pattern.fullmatch(c) is not None for c in cells) / n

    hits_by = {name: frac(p) for name, p in cfg.patterns.items() if name != "numeric"}
    return ColumnProfile(
        dictionary_hit_rate=hits / n_tokens if n_tokens else 0.0,
        stopword_density=stops / n_tokens if n_tokens else 0.0,
        symbol_density=n_symbols / n_chars if n_chars else 0.0,
        proportion_numeric=frac(cfg.patterns["numeric"]),
        pattern_hits=hits_by,
        avg_words_per_cell=float(words_per_cell.mean()),
        multiword_fraction=multi / n,
        uniqueness_ratio=len(set(cells)) / n,
        n_cells=n,
        titlecase_fraction=title / n,
        n_null=n_null,
    )


def classify_column(p: ColumnProfile, config: ProfilerConfig | None = None) -> TaxonomyTag:
    """Assign one taxonomy tag by a fixed decision cascade.

    Datetime, then Identifier, FreeText, StructuredCode, Name, and Categorical
    as the fallback; the first rule that fires wins.
    """
    cfg = config or load_profiler_config()
    t = cfg.t
    ph = p.pattern_hits
    if ph.get("date", 0.0) >= t("datetime", "min_date_hits"):
        return TaxonomyTag.DATETIME
    if (p.uniqueness_ratio >= t("identifier", "min_uniqueness")
            and p.dictionary_hit_rate <= t("identifier", "max_dictionary_hit_rate")):
        return TaxonomyTag.IDENTIFIER
    if (p.avg_words_per_cell >= t("free_text", "min_avg_words")
            and p.stopword_density >= t("free_text", "min_stopword_density")):
        return TaxonomyTag.FREE_TEXT
    code_hits = max((ph.get(c, 0.0) for c in cfg.code_patterns), default=0.0)
    if (p.symbol_density >= t("structured_code", "min_symbol_density")
            or (p.proportion_numeric >= t("structured_code", "min_proportion_numeric")
                and code_hits >= t("structured_code", "min_numeric_pattern_hits"))
            or code_hits >= t("structured_code", "min_pattern_dominance")):
        return TaxonomyTag.STRUCTURED_CODE
    if (p.multiword_fraction >= t("name", "min_multiword_fraction")
            and p.titlecase_fraction >= t("name", "min_titlecase_fraction")
            and p.uniqueness_ratio >= t("name", "min_uniqueness")):
        return TaxonomyTag.NAME
    return TaxonomyTag.CATEGORICAL


@dataclass(frozen=True)
class StructuralMetrics:
    avg_tokens_per_cell: float
    avg_chars_per_cell: float
    avg_unique_alpha_words_per_cell: float
    avg_unique_ngrams_per_cell: float
    proportion_unique_values: float
    text_col_ratio: float
    text_columns: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["text_columns"] = list(self.text_columns)
        return d


def _char_ngrams(s: str, lo: int = 2, hi: int = 4) -> set[str]:
    return {s[i:i + n] for n in range(lo, hi + 1) for i in range(len(s) - n + 1)}


def _is_text_column(cells: list[str], numeric: re.Pattern) -> bool:
    return any(numeric.fullmatch(c) is None for c in cells)


def structural_metrics(table: Mapping[str, Sequence], config: ProfilerConfig | None = None) -> StructuralMetrics:
    """Table-level string metrics over the text columns.

    A column is text when at least one non-null cell is not a plain number.
    Per-cell averages pool the sampled cells of all text columns; the unique
    proportion is averaged over text columns. ``text_col_ratio`` counts
    all-null columns as non-text.
    """
    if not table:
        raise ValidationError("table has no columns")
    cfg = config or load_profiler_config()
    numeric = cfg.patterns["numeric"]
    toks, chars, words, grams, uniq, names = [], [], [], [], [], []
    for name in sorted(table):
        try:
            cells, _ = _sample_cells(table[name], cfg.max_rows, cfg.seed)
        except ValidationError:
            continue
        if not _is_text_column(cells, numeric):
            continue
        names.append(name)
        uniq.append(len(set(cells)) / len(cells))
        for c in cells:
            toks.append(len(c.split()))
            chars.append(len(c))
            words.append(len(set(_ALPHA_WORD.findall(c.lower()))))
            grams.append(len(_char_ngrams(c)))
    ratio = len(names) / len(table)
    if not names:
        return StructuralMetrics(0.0, 0.0, 0.0, 0.0, 0.0, ratio, ())

    def avg(xs):
        return float(np.mean(xs))

    return StructuralMetrics(avg(toks), avg(chars), avg(words), avg(grams), avg(uniq), ratio, tuple(names))


def profile_table(table: Mapping[str, Sequence], config: ProfilerConfig | None = None) -> dict[str, dict]:
    """Profile and classify every text column (see :func:`structural_metrics`)."""
    cfg = config or load_profiler_config()
    wl = load_lexicon("wordlist", cfg.wordlist_path)
    sw = load_lexicon("stopwords", cfg.stopwords_path)
    out = {}
    for name in sorted(table):
        try:
            cells, _ = _sample_cells(table[name], cfg.max_rows, cfg.seed)
        except ValidationError:
            continue
        if not _is_text_column(cells, cfg.patterns["numeric"]):
            continue
        p = profile_column(table[name], wl, sw, cfg)
        out[name] = {"tag": classify_column(p, cfg).value, "profile": p.to_dict()}
    return out


def gini_concentration(variances) -> float:
    """Gini coefficient ``sum_ij |v_i - v_j| / (2 n^2 mean(v))`` of nonnegative values.

    Examples
    --------
    >>> gini_concentration([0, 0, 0, 4])
    0.75
    """
    v = np.asarray(variances, dtype=np.float64).ravel()
    if len(v) < 2:
        raise ValidationError("need at least 2 entries")
    if not np.all(np.isfinite(v)) or np.any(v < 0):
        raise ValidationError("entries must be finite and nonnegative")
    total = v.sum()
    if total <= 0:
        raise ValidationError("all entries are zero")
    n = len(v)
    s = np.sort(v)
    # sum_ij |v_i - v_j| = 2 sum_i (2i - n + 1) s_i with 0-based sorted index
    mad = 2.0 * float(np.sum((2 * np.arange(n) - n + 1) * s))
    return mad / (2.0 * n * total)


def mean_offdiag_cosine(rows) -> float:
    """Mean cosine similarity over all unordered pairs of distinct rows."""
    x = np.asarray(rows, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValidationError("need a matrix with at least 2 rows")
    if not np.all(np.isfinite(x)):
        raise ValidationError("rows must be finite")
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0):
        raise ValidationError(f"row {int(np.argmin(norms))} has zero norm")
    u = x / norms[:, None]
    n = len(u)
    # sum over i != j of u_i.u_j = |sum u|^2 - sum |u_i|^2
    s = u.sum(axis=0)
    off = float(s @ s) - float(np.sum(u * u))
    return float(np.clip(off / (n * (n - 1)), -1.0, 1.0))
