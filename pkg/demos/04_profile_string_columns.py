"""Tagging the string columns of a table and summarising how text-heavy it is."""

from __future__ import annotations

from benchstab.profiling import classify_column, profile_column, structural_metrics

table = {
    "city": ["Paris", "Lima", "Oslo", "Paris", "Lima", "Paris"] * 5,
    "customer": ["Ana Silva", "Tom Becker", "Li Wei", "Omar Haddad", "Ines Duarte", "Kofi Mensah"] * 5,
    "review": ["the lid was cracked when it arrived", "works well but the cable is short",
               "it is fine for the price", "we returned it after a week",
               "great for small kitchens", "the colour is not as shown"] * 5,
    "signup": [f"2023-{m:02d}-{d:02d}" for m in range(1, 11) for d in (3, 14, 27)],
    "order_id": [f"ORD{100000 + 37 * i}" for i in range(30)],
}

for name, values in table.items():
    p = profile_column(values)
    print(f"{name:9s} -> {classify_column(p).value:14s} "
          f"uniqueness {p.uniqueness_ratio:.2f}, words/cell {p.avg_words_per_cell:.1f}, "
          f"dictionary hits {p.dictionary_hit_rate:.2f}")

s = structural_metrics(table)
print(f"\n{s.text_col_ratio:.0%} text columns; {s.avg_tokens_per_cell:.1f} tokens and "
      f"{s.avg_unique_ngrams_per_cell:.0f} distinct character 2-4 grams per cell")
