"""Dependence structures over flows and their row-normalized weight matrices.

A flow's neighbourhood is the set of other flows its disturbance is allowed
to correlate with.  Seven structures are supported; for a flow (i, j) the
member predicate over another flow (p, q) is

    sender_attached     p = i, or (p, q) = (j, i)
    receiver_attached   q = j, or (p, q) = (j, i)
    full_activity       p in {i, j}, or q in {i, j}
    alliance_import     receiver q is a formal ally of j
    alliance_export     sender p is a formal ally of i
    distance_import     q != j and d(j, q) < cutoff
    distance_export     p != i and d(i, p) < cutoff

The flow itself is never its own neighbour (a nonzero diagonal would break
the disturbance model), and no node is treated as allied with itself.
Weights are uniform within a neighbourhood: W[a, b] = 1/|N(a)| for
neighbours, 0 otherwise, so each row sums to 1, or to 0 when the
neighbourhood is empty (such flows receive no spillover).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._serialize import write_csv
from .covariates import DyadicSeries
from .errors import CovariateError, WeightError
from .panel import FlowIndex

KINDS = (
    "sender_attached",
    "receiver_attached",
    "full_activity",
    "alliance_import",
    "alliance_export",
    "distance_import",
    "distance_export",
)
ALLIANCE_KINDS = frozenset({"alliance_import", "alliance_export"})
DISTANCE_KINDS = frozenset({"distance_import", "distance_export"})


@dataclass(frozen=True)
class NeighborhoodSpec:
    """Selects one dependence structure; distance kinds carry a cutoff."""

    kind: str
    cutoff_km: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise WeightError(f"unknown neighbourhood kind {self.kind!r}")
        if self.kind in DISTANCE_KINDS:
            if self.cutoff_km is None or not self.cutoff_km > 0:
                raise WeightError(
                    f"{self.kind} needs a positive cutoff_km, got {self.cutoff_km!r}"
                )
        elif self.cutoff_km is not None:
            raise WeightError(f"{self.kind} takes no cutoff_km")

    @property
    def structure_id(self) -> str:
        if self.kind in DISTANCE_KINDS:
            return f"{self.kind}@{self.cutoff_km:g}"
        return self.kind


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Row-normalized n x n dependence matrix over a flow index."""

    index: FlowIndex
    entries: np.ndarray
    spec: NeighborhoodSpec

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        object.__setattr__(self, "entries", entries)
        n = self.index.n
        if entries.shape != (n, n):
            raise WeightError(f"weight matrix shape {entries.shape}, expected ({n}, {n})")

    @property
    def n(self) -> int:
        return self.index.n


def _lookup(dyadic, a, b, period, what):
    if dyadic is None:
        raise WeightError(f"{what} data required but no dyadic series given")
    try:
        return dyadic.lookup(a, b, period)
    except CovariateError as exc:
        raise WeightError(str(exc)) from None


def neighborhood(
    spec: NeighborhoodSpec,
    index: FlowIndex,
    dyadic: DyadicSeries | None = None,
) -> dict[tuple[str, str], frozenset]:
    """Neighbour sets for every flow in the index.

    Parameters
    ----------
    spec : NeighborhoodSpec
        Which structure to build.
    index : FlowIndex
        The period's flow ordering.
    dyadic : DyadicSeries, optional
        Alliance indicator (nonzero = allied) for the alliance kinds, or
        pairwise distances in km for the distance kinds, read at the
        index's period.  Ignored by the three activity-based kinds.

    Returns
    -------
    dict
        Maps each dyad to a frozenset of neighbouring dyads.

    Raises
    ------
    WeightError
        When alliance or distance data is missing for a required pair.
    """
    dyads = index.dyads
    period = index.period
    by_sender: dict[str, set] = {}
    by_receiver: dict[str, set] = {}
    for dyad in dyads:
        by_sender.setdefault(dyad[0], set()).add(dyad)
        by_receiver.setdefault(dyad[1], set()).add(dyad)

    out = {}
    if spec.kind == "sender_attached":
        for i, j in dyads:
            nbrs = set(by_sender[i])
            if (j, i) in index:
                nbrs.add((j, i))
            nbrs.discard((i, j))
            out[(i, j)] = frozenset(nbrs)
    elif spec.kind == "receiver_attached":
        for i, j in dyads:
            nbrs = set(by_receiver[j])
            if (j, i) in index:
                nbrs.add((j, i))
            nbrs.discard((i, j))
            out[(i, j)] = frozenset(nbrs)
    elif spec.kind == "full_activity":
        for i, j in dyads:
            nbrs = (
                by_sender.get(i, set())
                | by_receiver.get(i, set())
                | by_sender.get(j, set())
                | by_receiver.get(j, set())
            )
            nbrs = set(nbrs)
            nbrs.discard((i, j))
            out[(i, j)] = frozenset(nbrs)
    elif spec.kind in ALLIANCE_KINDS:
        importing = spec.kind == "alliance_import"
        groups = by_receiver if importing else by_sender
        anchors = {j for _, j in dyads} if importing else {i for i, _ in dyads}
        partners = sorted(groups)
        allied: dict[str, list[str]] = {}
        for anchor in sorted(anchors):
            allied[anchor] = [
                partner
                for partner in partners
                if partner != anchor
                and _lookup(dyadic, anchor, partner, period, "alliance") != 0
            ]
        for i, j in dyads:
            anchor = j if importing else i
            nbrs = set()
            for partner in allied[anchor]:
                nbrs |= groups[partner]
            nbrs.discard((i, j))
            out[(i, j)] = frozenset(nbrs)
    else:
        importing = spec.kind == "distance_import"
        groups = by_receiver if importing else by_sender
        anchors = {j for _, j in dyads} if importing else {i for i, _ in dyads}
        partners = sorted(groups)
        cutoff = spec.cutoff_km
        close: dict[str, list[str]] = {}
        for anchor in sorted(anchors):
            close[anchor] = [
                partner
                for partner in partners
                if partner != anchor
                and _lookup(dyadic, anchor, partner, period, "distance") < cutoff
            ]
        for i, j in dyads:
            anchor = j if importing else i
            nbrs = set()
            for partner in close[anchor]:
                nbrs |= groups[partner]
            nbrs.discard((i, j))
            out[(i, j)] = frozenset(nbrs)
    return out


def build_weight_matrix(
    spec: NeighborhoodSpec,
    index: FlowIndex,
    dyadic: DyadicSeries | None = None,
) -> WeightMatrix:
    """Materialize the row-normalized weight matrix for one structure.

    Row a holds 1/|N(v_a)| at the columns of v_a's neighbours and 0
    elsewhere; a flow with an empty neighbourhood keeps an all-zero row.
    """
    nbr_map = neighborhood(spec, index, dyadic)
    n = index.n
    entries = np.zeros((n, n))
    for a, dyad in enumerate(index.dyads):
        nbrs = nbr_map[dyad]
        if not nbrs:
            continue
        weight = 1.0 / len(nbrs)
        for other in nbrs:
            entries[a, index.position(other)] = weight
    return WeightMatrix(index=index, entries=entries, spec=spec)


def write_weight_csv(path, matrix: WeightMatrix) -> None:
    """Dump nonzero entries as ``row_dyad,col_dyad,weight`` for inspection."""
    dyads = matrix.index.dyads
    rows = []
    for a, b in zip(*np.nonzero(matrix.entries)):
        rows.append(
            (
                f"{dyads[a][0]}->{dyads[a][1]}",
                f"{dyads[b][0]}->{dyads[b][1]}",
                matrix.entries[a, b],
            )
        )
    write_csv(path, ("row_dyad", "col_dyad", "weight"), rows)
