"""Meta-raters: average a rater pool, then greedily drop the worst members.

The first ensemble averages all ten automated raters.  Greedy pruning
then removes, one member at a time, whichever rater's removal most
improves mean QWK against the human benchmarks.  An explicit removal
chain (when the drop order is already decided) is also shown.
"""

from importlib.resources import files

from facetkit import build_ensemble, greedy_prune, ingest_csv, qwk, removal_chain

DATA = str(files("facetkit") / "data" / "paper_shaped.csv")

tensor = ingest_csv(DATA, scale_min=0, scale_max=6)
members = [f"A{i}" for i in range(1, 11)]

# averaging ensemble over all ten automated raters
specs = removal_chain(members, removals=[], names=["AI11"])
extended = build_ensemble(tensor, specs[0])
print("ensemble AI11 = mean of", ", ".join(members))
for item in tensor.ids.items:
    r = qwk(extended, "AI11", "R1", items=[item])
    print(f"  QWK AI11 vs R1 on {item}: {r.kappa:.3f}")

# greedy leave-worst-out pruning against both benchmarks
trace = greedy_prune(tensor, members, ["R1", "R2"], steps=4)
print("\ngreedy pruning trace (mean QWK over benchmarks x items):")
for i, step in enumerate(trace.steps):
    removed = "start" if step.removed is None else f"drop {step.removed}"
    print(f"  step {i}: {removed:<10} members={len(step.members):>2} "
          f"mean QWK {step.mean_qwk:.3f}")

# replaying a fixed removal chain instead of searching
chain = removal_chain(
    members,
    removals=[["A7"], ["A9"], ["A6"], ["A8"], ["A2", "A4"]],
    names=["AI11", "AI12", "AI13", "AI14", "AI15", "AI16"],
)
print("\nfixed removal chain:")
for spec in chain:
    print(f"  {spec.name}: {len(spec.members)} members "
          f"({', '.join(str(m) for m in spec.members)})")
