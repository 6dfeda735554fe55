"""Residual diagnostics for fitted disturbance models.

Emits plot-ready data only (no rendering): QQ pairs and histogram bins of
standardized whitened residuals against a standard normal reference, and
per-node kernel density estimates of the spillover residuals rho_hat W
u_hat, each flow's value attributed to both of its endpoint nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ._serialize import write_csv
from .errors import EstimationError
from .panel import FlowIndex
from .sem import DEGENERATE_SIGMA2, SemFit
from .weights import WeightMatrix


def standardized_residuals(fit: SemFit) -> np.ndarray:
    """Whitened residuals scaled by the estimated sigma."""
    if not fit.converged:
        raise EstimationError("cannot standardize residuals of a non-converged fit")
    if fit.degenerate or fit.sigma2_hat < DEGENERATE_SIGMA2:
        raise EstimationError("sigma^2 is degenerate; standardized residuals undefined")
    return fit.eps_hat / math.sqrt(fit.sigma2_hat)


def qq_pairs(values) -> tuple[np.ndarray, np.ndarray]:
    """(theoretical, empirical) quantile pairs against a standard normal.

    Sorted values are paired with normal quantiles at probabilities
    (k - 0.5) / n for k = 1..n.
    """
    values = np.sort(np.asarray(values, dtype=float).ravel())
    n = values.size
    if n == 0:
        raise ValueError("no values for QQ pairs")
    probs = (np.arange(1, n + 1) - 0.5) / n
    return stats.norm.ppf(probs), values


@dataclass(frozen=True, eq=False)
class HistogramData:
    """Freedman-Diaconis bins with standard-normal reference counts."""

    bin_edges: np.ndarray
    counts: np.ndarray
    normal_ref: np.ndarray


def histogram(values) -> HistogramData:
    """Bin values with the Freedman-Diaconis rule.

    ``normal_ref`` holds the count a standard normal sample of the same
    size would put in each bin (n times the normal mass of the bin).
    """
    values = np.asarray(values, dtype=float).ravel()
    if values.size < 2:
        raise ValueError("need at least two values to bin")
    counts, edges = np.histogram(values, bins="fd")
    mass = stats.norm.cdf(edges[1:]) - stats.norm.cdf(edges[:-1])
    return HistogramData(bin_edges=edges, counts=counts, normal_ref=values.size * mass)


@dataclass(frozen=True, eq=False)
class TradecorrResiduals:
    """Per-flow spillover residuals rho_hat * W u_hat for one period.

    ``attribution`` maps each node to the values of the flows it sends or
    receives, so every flow's value appears in exactly two lists.
    """

    period: int
    values: np.ndarray
    attribution: dict[str, list[float]]
    index: FlowIndex


def tradecorr_residuals(
    fit: SemFit, weights: WeightMatrix, index: FlowIndex
) -> TradecorrResiduals:
    """Spillover residuals with sender/receiver attribution."""
    if not fit.converged:
        raise EstimationError("cannot compute spillover residuals of a non-converged fit")
    if weights.index is not index and weights.index.dyads != index.dyads:
        raise EstimationError("weight matrix and flow index do not match")
    values = fit.rho_hat * (weights.entries @ fit.u_hat)
    attribution: dict[str, list[float]] = {}
    for a, (sender, receiver) in enumerate(index.dyads):
        attribution.setdefault(sender, []).append(float(values[a]))
        attribution.setdefault(receiver, []).append(float(values[a]))
    return TradecorrResiduals(
        period=index.period, values=values, attribution=attribution, index=index
    )


@dataclass(frozen=True, eq=False)
class DensityCurve:
    """Gaussian KDE evaluated on a regular grid."""

    node_id: str
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float


def kde(values, n_grid: int = 512, node_id: str = "") -> DensityCurve:
    """Gaussian kernel density with Silverman's rule-of-thumb bandwidth.

    The bandwidth is 0.9 * min(sd, IQR / 1.34) * m^(-1/5) (falling back to
    the sd when the IQR is zero); the grid spans the data range plus three
    bandwidths on each side.

    Raises
    ------
    ValueError
        With fewer than two distinct values.
    """
    values = np.asarray(values, dtype=float).ravel()
    m = values.size
    if m < 2 or np.unique(values).size < 2:
        raise ValueError("need at least two distinct values for a density estimate")
    sd = float(np.std(values, ddof=1))
    q75, q25 = np.percentile(values, [75.0, 25.0])
    iqr = float(q75 - q25)
    scale = min(sd, iqr / 1.34) if iqr > 0 else sd
    bandwidth = 0.9 * scale * m ** (-0.2)
    grid = np.linspace(values.min() - 3 * bandwidth, values.max() + 3 * bandwidth, n_grid)
    density = np.zeros(n_grid)
    # Chunk over the sample so the (grid x m) kernel matrix stays small.
    for start in range(0, m, 4096):
        chunk = values[start : start + 4096]
        density += stats.norm.pdf((grid[:, None] - chunk[None, :]) / bandwidth).sum(axis=1)
    density /= m * bandwidth
    return DensityCurve(node_id=node_id, grid=grid, density=density, bandwidth=bandwidth)


def write_qq_csv(path, theoretical, empirical) -> None:
    write_csv(path, ("theoretical", "empirical"), zip(theoretical, empirical))


def write_hist_csv(path, hist: HistogramData) -> None:
    rows = [
        (hist.bin_edges[k], hist.bin_edges[k + 1], int(hist.counts[k]), hist.normal_ref[k])
        for k in range(hist.counts.size)
    ]
    write_csv(path, ("bin_left", "bin_right", "count", "normal_ref"), rows)


def write_kde_csv(path, curves) -> None:
    rows = [
        (curve.node_id, curve.grid[k], curve.density[k])
        for curve in curves
        for k in range(curve.grid.size)
    ]
    write_csv(path, ("node", "x", "density"), rows)


def write_tradecorr_csv(path, items) -> None:
    """`period,sender,receiver,value` rows from TradecorrResiduals objects."""
    rows = []
    for item in items:
        for a, (sender, receiver) in enumerate(item.index.dyads):
            rows.append((item.period, sender, receiver, item.values[a]))
    write_csv(path, ("period", "sender", "receiver", "value"), rows)
