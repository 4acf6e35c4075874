"""Load the bundled ratings file and measure rater agreement.

The bundled dataset mirrors a fully crossed essay-scoring design: 30
writers, 4 tasks, 12 raters (two human benchmarks R1/R2 plus ten
automated raters A1..A10), scores 0-6.  We compute quadratic weighted
kappa of every automated rater against each benchmark, per task, and
Cronbach alpha per rater across task groups.
"""

from importlib.resources import files

from facetkit import cronbach_alpha, ingest_csv, qwk, qwk_matrix

DATA = str(files("facetkit") / "data" / "paper_shaped.csv")

tensor = ingest_csv(DATA, scale_min=0, scale_max=6)
print(f"loaded {tensor.n_cells} scores: "
      f"{len(tensor.ids.persons)} persons x {len(tensor.ids.items)} items x "
      f"{len(tensor.ids.raters)} raters, connected={tensor.connected}")

# single pair, single task
one = qwk(tensor, "A5", "R1", items=["SN1"])
print(f"\nQWK A5 vs R1 on SN1: {one.kappa:.3f}  ({one.n_pairs} pairs)")

# the full accuracy table: candidates x benchmarks x per-item groups
candidates = [f"A{i}" for i in range(1, 11)]
groups = [(item,) for item in tensor.ids.items]
table = qwk_matrix(tensor, ["R1", "R2"], candidates, groups)

print("\nQWK per task (rows: candidate, columns: task, benchmark R1):")
header = "rater  " + "".join(f"{item:>8}" for item in tensor.ids.items)
print(header)
for cand in candidates:
    cells = [r for r in table.rows if r.rater_a == cand and r.rater_b == "R1"]
    print(f"{cand:<7}" + "".join(f"{r.kappa:>8.3f}" for r in cells))

# human-human baseline
baseline = [qwk(tensor, "R1", "R2", items=[item]) for item in tensor.ids.items]
print("R1/R2  " + "".join(f"{r.kappa:>8.3f}" for r in baseline))

# intra-rater consistency across task groups
print("\nCronbach alpha across all four tasks:")
for rater in tensor.ids.raters:
    res = cronbach_alpha(tensor, rater, tensor.ids.items)
    print(f"  {rater:<4} alpha={res.alpha:.2f}  (n={res.n_persons})")
