"""Parameter accounting: why tying decouples depth from budget.

An untied model pays 3*3*M^2 weights for every layer beyond the first;
the tied model pays once no matter how deep it goes. That makes two
controlled comparisons possible: equal (M, L) with different budgets,
and equal (budget, L) with different M.

Run:  python3 demos/02_parameter_budgets.py
"""

from reconv import ArchConfig, emit_contours, match_pairs, param_count

# --- counts over a small grid ------------------------------------------------
print("parameter counts (untied | tied):")
print("        " + "".join(f"L={l:<14d}" for l in (1, 2, 4, 8)))
for m in (16, 32, 64, 128):
    row = []
    for l in (1, 2, 4, 8):
        untied = param_count(ArchConfig(feature_maps=m, layers=l, tied=False))
        tied = param_count(ArchConfig(feature_maps=m, layers=l, tied=True))
        row.append(f"{untied:>7d}|{tied:<7d}")
    print(f"M={m:<4d} " + " ".join(row))
print("tied columns are constant: depth is free once the kernel is shared\n")

# --- matched pairs -----------------------------------------------------------
# Pairs of (untied M, tied M) whose totals agree within 1%: the tied
# model buys a wider representation with the same budget and depth.
pairs = match_pairs(3, (16, 256), 0.01)
print(f"{len(pairs)} matched pairs at L=3 in M=[16, 256] within 1%")
print("closest five:")
for p in pairs[:5]:
    print(f"  untied M={p.m_untied:>3d} (P={p.p_untied})  ~  "
          f"tied M={p.m_tied:>3d} (P={p.p_tied})   rel diff {p.rel_diff:.4%}")

reference = next(p for p in pairs if (p.m_untied, p.m_tied) == (71, 108))
print(f"the reference pair: untied M=71 P={reference.p_untied}, "
      f"tied M=108 P={reference.p_tied}, rel diff {reference.rel_diff:.2%}\n")

# --- iso-parameter contours ---------------------------------------------------
# Along a contour the budget is constant; for untied models the trade is
# "more layers means fewer maps", for tied models contours are horizontal.
rows = emit_contours([16, 32, 64, 128], [1, 2, 4, 8], "untied")
levels = sorted({r.param_count for r in rows if r.level_id >= 0})
print("untied iso-parameter contours (fractional M per L):")
for level_id, level in enumerate(levels):
    points = [r for r in rows if r.level_id == level_id]
    path = "  ".join(f"L={r.layers}: M={r.m:6.1f}" for r in points)
    print(f"  P={level:>7d}   {path}")
