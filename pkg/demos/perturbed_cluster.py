"""A sextuple zero breaks into a cluster of six simple zeros under perturbation."""
from pathlib import Path

from multizero import cluster_search, parse_system
from multizero.cli import fmt_point

HERE = Path(__file__).resolve().parent / "systems"

for eps in (1e-8, 1e-12):
    text = (HERE / "perturbed_trig.sys").read_text().replace("1e-8", repr(eps))
    zeros = cluster_search(parse_system(text), [0, 0], radius=0.02, n_starts=500)
    print(f"eps = {eps:g}: {len(zeros)} zeros")
    for z in zeros:
        print(f"  {fmt_point(z.x, 10)}  hits {z.hits}")

# the same perturbation with the sign of y^2 flipped in the second equation
text = (HERE / "perturbed_trig.sys").read_text().replace("- y^2", "+ y^2")
zeros = cluster_search(parse_system(text), [0, 0], radius=0.02, n_starts=500)
print(f"+y^2 variant, eps = 1e-8: {len(zeros)} zeros")
for z in zeros:
    print(f"  {fmt_point(z.x, 10)}")
