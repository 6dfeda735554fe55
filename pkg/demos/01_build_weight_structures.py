"""Tour of the seven dependence structures on a toy network.

Four flows over four nodes are enough to see how each structure groups
flows: sender-attached clusters exports of one country, receiver-attached
its imports, full activity both, and the alliance/distance structures tie
flows to formal allies or spatially close anchors.
"""

import numpy as np

from netdisturb import (
    DyadicSeries,
    FlowIndex,
    NeighborhoodSpec,
    build_weight_matrix,
    neighborhood,
)

index = FlowIndex(period=1, dyads=(("A", "B"), ("A", "C"), ("B", "A"), ("D", "C")))
print("flows:", " ".join(f"{s}->{r}" for s, r in index.dyads))

alliance = DyadicSeries("alliance", True, {("B", "C", 1): 1.0}, default=0.0)
distance = DyadicSeries(
    "distance",
    True,
    {("A", "B", 1): 500.0, ("B", "C", 1): 2000.0, ("A", "C", 1): 2400.0,
     ("A", "D", 1): 900.0, ("B", "D", 1): 1300.0, ("C", "D", 1): 3100.0},
)

specs = [
    (NeighborhoodSpec("sender_attached"), None),
    (NeighborhoodSpec("receiver_attached"), None),
    (NeighborhoodSpec("full_activity"), None),
    (NeighborhoodSpec("alliance_import"), alliance),
    (NeighborhoodSpec("alliance_export"), alliance),
    (NeighborhoodSpec("distance_import", cutoff_km=1100.0), distance),
    (NeighborhoodSpec("distance_export", cutoff_km=1100.0), distance),
]

for spec, context in specs:
    print(f"\n== {spec.structure_id} ==")
    nbrs = neighborhood(spec, index, context)
    for dyad in index.dyads:
        members = sorted(nbrs[dyad])
        pretty = ", ".join(f"{s}->{r}" for s, r in members) or "(none)"
        print(f"  N({dyad[0]}->{dyad[1]}) = {{{pretty}}}")
    matrix = build_weight_matrix(spec, index, context)
    with np.printoptions(precision=3, suppress=True):
        print(matrix.entries)
    print("row sums:", matrix.entries.sum(axis=1))
