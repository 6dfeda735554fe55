"""Moran's I on pooled residuals and the distance-cutoff scan.

Moran's I for a vector z under weights W (after centering z) is

    I = (m / S0) * (z' W z) / (z' z),    S0 = sum of all entries of W

For cutoff selection, per-period distance-based weight matrices are stacked
block-diagonally over the panel so pooled residuals never correlate across
periods, and I is evaluated on a grid of cutoffs; the chosen cutoff is the
first argmax.  The blocks are never materialized jointly: with pooled
centered z, I decomposes into per-block quadratic forms z_t' W_t z_t and
per-block S0 contributions, which is what the scan accumulates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ._serialize import write_csv, write_json
from .covariates import DyadicSeries
from .errors import CovariateError, WeightError
from .panel import FlowIndex

DEFAULT_GRID_KM = np.arange(0.0, 20_000.0 + 100.0, 100.0)


def morans_i(z, weight) -> float:
    """Moran's I of ``z`` (centered internally) under ``weight``.

    Raises
    ------
    ValueError
        If the weight matrix has no nonzero entry or z has no variance.
    """
    z = np.asarray(z, dtype=float).ravel()
    weight = np.asarray(weight, dtype=float)
    if weight.shape != (z.size, z.size):
        raise ValueError(f"weight shape {weight.shape} does not match z length {z.size}")
    s0 = weight.sum()
    if s0 == 0.0:
        raise ValueError("weight matrix is all zero; Moran's I undefined")
    zc = z - z.mean()
    denom = zc @ zc
    if denom == 0.0:
        raise ValueError("z has zero variance after centering")
    return float(z.size / s0 * (zc @ (weight @ zc)) / denom)


@dataclass(frozen=True, eq=False)
class CutoffScan:
    """Moran's I along a cutoff grid; NaN marks undefined grid points."""

    grid: np.ndarray
    moran_values: np.ndarray
    defined: np.ndarray
    best_cutoff: float
    best_value: float
    direction: str


class _PeriodBlock:
    """Distance geometry of one period, shared across all cutoffs."""

    def __init__(self, index: FlowIndex, distances: DyadicSeries, direction: str):
        codes = index.receivers if direction == "import" else index.senders
        unique = sorted(set(codes))
        pos = {code: k for k, code in enumerate(unique)}
        inv = np.array([pos[code] for code in codes])
        u = len(unique)
        dist = np.zeros((u, u))
        for a in range(u):
            for b in range(a + 1, u):
                try:
                    d = distances.lookup(unique[a], unique[b], index.period)
                except CovariateError as exc:
                    raise WeightError(str(exc)) from None
                dist[a, b] = dist[b, a] = d
        self.inv = inv
        self.dist = dist
        # Flows anchored at the same node are never neighbours, whatever
        # the cutoff; same-node pairs include the flow itself.
        self.same = inv[:, None] == inv[None, :]

    def quad_form(self, zc: np.ndarray, cutoff: float) -> tuple[float, float]:
        """(z' W z, S0) for this block's row-normalized W at `cutoff`."""
        close = self.dist < cutoff
        adjacency = close[np.ix_(self.inv, self.inv)] & ~self.same
        counts = adjacency.sum(axis=1)
        nonzero = counts > 0
        if not nonzero.any():
            return 0.0, 0.0
        wz = (adjacency @ zc)[nonzero] / counts[nonzero]
        return float(zc[nonzero] @ wz), float(nonzero.sum())


def scan_cutoffs(
    residuals: Mapping[int, np.ndarray],
    indices: Mapping[int, FlowIndex],
    distances: DyadicSeries,
    direction: str = "import",
    grid=None,
) -> CutoffScan:
    """Scan distance cutoffs by maximizing Moran's I over the panel.

    Parameters
    ----------
    residuals : mapping period -> residual vector
        Typically the per-period OLS residuals of the covariate model,
        each aligned with the matching entry of ``indices``.
    indices : mapping period -> FlowIndex
    distances : DyadicSeries
        Pairwise distances in km.
    direction : {"import", "export"}
        Anchor the neighbourhoods at receivers or at senders.
    grid : array-like, optional
        Increasing cutoffs in km; defaults to 0..20000 in steps of 100.

    Returns
    -------
    CutoffScan
        Cutoffs where every period's weight block is all-zero are recorded
        as undefined and skipped when locating the maximum; ties pick the
        smallest cutoff.
    """
    if direction not in ("import", "export"):
        raise ValueError(f"direction must be 'import' or 'export', got {direction!r}")
    grid = np.asarray(DEFAULT_GRID_KM if grid is None else grid, dtype=float)
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("cutoff grid must be nonempty and strictly increasing")
    periods = sorted(residuals)
    if not periods:
        raise ValueError("no residual vectors given")
    if sorted(indices) != periods:
        raise ValueError("residuals and indices cover different periods")

    segments = []
    blocks = []
    for period in periods:
        z_t = np.asarray(residuals[period], dtype=float).ravel()
        index = indices[period]
        if z_t.size != index.n:
            raise ValueError(
                f"period {period}: residual length {z_t.size} != index n {index.n}"
            )
        segments.append(z_t)
        blocks.append(_PeriodBlock(index, distances, direction))

    z = np.concatenate(segments)
    m = z.size
    zc = z - z.mean()
    denom = zc @ zc
    if denom == 0.0:
        raise ValueError("pooled residuals have zero variance")
    bounds = np.cumsum([0] + [seg.size for seg in segments])

    values = np.full(grid.size, np.nan)
    for g, cutoff in enumerate(grid):
        total_quad = 0.0
        total_s0 = 0.0
        for block, lo, hi in zip(blocks, bounds[:-1], bounds[1:]):
            quad, s0 = block.quad_form(zc[lo:hi], cutoff)
            total_quad += quad
            total_s0 += s0
        if total_s0 > 0.0:
            values[g] = m / total_s0 * total_quad / denom

    defined = np.isfinite(values)
    if not defined.any():
        raise ValueError("Moran's I undefined at every grid point")
    best = int(np.nanargmax(values))
    return CutoffScan(
        grid=grid,
        moran_values=values,
        defined=defined,
        best_cutoff=float(grid[best]),
        best_value=float(values[best]),
        direction=direction,
    )


def write_scan_csv(path, scan: CutoffScan) -> None:
    """`cutoff_km,morans_i,defined` rows over the grid."""
    rows = [
        (scan.grid[g], scan.moran_values[g], int(scan.defined[g]))
        for g in range(scan.grid.size)
    ]
    write_csv(path, ("cutoff_km", "morans_i", "defined"), rows)


def write_scan_json(path, scan: CutoffScan) -> None:
    write_json(
        path,
        {
            "direction": scan.direction,
            "best_cutoff_km": scan.best_cutoff,
            "best_morans_i": scan.best_value,
            "grid_points": int(scan.grid.size),
            "defined_points": int(scan.defined.sum()),
        },
    )
