"""Synthetic panels drawn from the exact generative model.

Each period realizes a directed Erdos-Renyi graph over the node roster,
builds the declared dependence structure's weight matrix W over the
resulting flows, draws eps ~ N(0, sigma^2 I), solves

    u = (I - rho W)^{-1} eps,    y = X beta + u,    flows = exp(y)

and packages everything in the same types the ingestion path produces.
Covariate series are standard normal per node and period, alliances are
symmetric Bernoulli indicators, and node positions are uniform on a disk
so capital-style pairwise distances exist for the distance structures.
Everything is reproducible from the seed, and the CSV emitters write the
exact formats the loaders consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._serialize import write_json
from .covariates import (
    CovariateTerm,
    DesignMatrix,
    DyadicSeries,
    NodalSeries,
    build_design,
    write_dyadic_csv,
    write_nodal_csv,
)
from .errors import NetdisturbError
from .panel import (
    Flow,
    FlowIndex,
    NetworkSnapshot,
    NodeRoster,
    RosterEntry,
    write_edge_csv,
    write_roster_csv,
)
from .sem import spectrum
from .weights import ALLIANCE_KINDS, DISTANCE_KINDS, NeighborhoodSpec, WeightMatrix, build_weight_matrix

# Re-draw a period's graph at most this many times when it comes out too
# sparse to fit (fewer flows than parameters plus two).
MAX_GRAPH_RETRIES = 100


@dataclass(frozen=True)
class SimSpec:
    """Parameters of one synthetic panel."""

    n_nodes: int
    n_periods: int
    density: float
    structure: NeighborhoodSpec
    rho: float
    beta: tuple[float, ...]
    sigma: float
    seed: int
    lag: int = 0
    alliance_prob: float = 0.3
    disk_radius_km: float = 3000.0

    def __post_init__(self):
        if not 0.0 < self.density <= 1.0:
            raise NetdisturbError(f"density must be in (0, 1], got {self.density}")
        if self.n_nodes < 2 or self.n_periods < 1:
            raise NetdisturbError("need at least 2 nodes and 1 period")
        if not self.sigma > 0:
            raise NetdisturbError(f"sigma must be positive, got {self.sigma}")
        if len(self.beta) < 1:
            raise NetdisturbError("beta needs at least the intercept coefficient")
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))


def synthetic_recipe(n_coefficients: int) -> tuple[CovariateTerm, ...]:
    """Recipe matching a beta of the given length (intercept included).

    Coefficient k > 0 reads the standard normal nodal series ``x{k}`` at
    the flow's sender for odd k and at its receiver for even k.
    """
    terms = []
    for k in range(1, n_coefficients):
        role = "sender" if k % 2 == 1 else "receiver"
        terms.append(CovariateTerm(f"x{k}", role))
    return tuple(terms)


@dataclass(frozen=True, eq=False)
class SimResult:
    """A generated panel plus every intermediate the tests may need."""

    spec: SimSpec
    panel: list[NetworkSnapshot]
    roster: NodeRoster
    nodal: list[NodalSeries]
    dyadic: list[DyadicSeries]
    indices: dict[int, FlowIndex]
    designs: dict[int, DesignMatrix]
    weights: dict[int, WeightMatrix]
    truth: dict = field(default_factory=dict)


def draw_disturbances(
    W: np.ndarray, rho: float, sigma: float, rng: np.random.Generator, size: int = 1
) -> np.ndarray:
    """Draw `size` disturbance vectors u = (I - rho W)^{-1} eps.

    Returns a (size, n) array; this is the exact law the estimator assumes,
    with covariance sigma^2 (I - rho W)^{-1} (I - rho W')^{-1}.
    """
    if isinstance(W, WeightMatrix):
        W = W.entries
    W = np.asarray(W, dtype=float)
    n = W.shape[0]
    eps = rng.normal(0.0, sigma, size=(size, n))
    A = np.eye(n) - rho * W
    return np.linalg.solve(A, eps.T).T


def _structure_context(spec: SimSpec, dyadic_map):
    kind = spec.structure.kind
    if kind in ALLIANCE_KINDS:
        return dyadic_map["alliance"]
    if kind in DISTANCE_KINDS:
        return dyadic_map["distance"]
    return None


def simulate(spec: SimSpec) -> SimResult:
    """Generate a panel from the disturbance model.

    Raises
    ------
    NetdisturbError
        If |rho| falls outside the spectral interval of some period's
        realized weight matrix; re-run with a smaller |rho|.
    """
    rng = np.random.default_rng(spec.seed)
    nodes = [f"N{k:03d}" for k in range(spec.n_nodes)]
    first_period = 1
    roster = NodeRoster(
        entries=tuple(
            RosterEntry(node_id=node, active_from=first_period - spec.lag,
                        active_to=spec.n_periods)
            for node in nodes
        )
    )
    p = len(spec.beta)
    recipe = synthetic_recipe(p)

    cov_periods = range(first_period - spec.lag, spec.n_periods + 1)
    nodal = [
        NodalSeries(
            name=f"x{k}",
            values={
                (node, t): float(rng.standard_normal())
                for node in nodes
                for t in cov_periods
            },
        )
        for k in range(1, p)
    ]

    # Node geometry: uniform positions on a disk, Euclidean pairwise
    # distances standing in for capital distances.
    radius = spec.disk_radius_km / 2.0
    angles = rng.uniform(0.0, 2.0 * math.pi, spec.n_nodes)
    radii = radius * np.sqrt(rng.uniform(0.0, 1.0, spec.n_nodes))
    xy = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
    distance_values = {}
    alliance_values = {}
    for a in range(spec.n_nodes):
        for b in range(a + 1, spec.n_nodes):
            distance_values[(nodes[a], nodes[b], first_period)] = float(
                np.hypot(*(xy[a] - xy[b]))
            )
            alliance_values[(nodes[a], nodes[b], first_period)] = float(
                rng.uniform() < spec.alliance_prob
            )
    dyadic = [
        DyadicSeries(name="alliance", symmetric=True, values=alliance_values),
        DyadicSeries(name="distance", symmetric=True, values=distance_values),
    ]
    dyadic_map = {series.name: series for series in dyadic}
    context = _structure_context(spec, dyadic_map)

    ordered_pairs = [
        (nodes[a], nodes[b])
        for a in range(spec.n_nodes)
        for b in range(spec.n_nodes)
        if a != b
    ]
    min_flows = p + 2

    panel = []
    indices = {}
    designs = {}
    weight_mats = {}
    truth_periods = {}
    for period in range(first_period, spec.n_periods + 1):
        dyads = None
        for _ in range(MAX_GRAPH_RETRIES):
            keep = rng.uniform(size=len(ordered_pairs)) < spec.density
            candidate = [pair for pair, k in zip(ordered_pairs, keep) if k]
            if len(candidate) >= min_flows:
                dyads = candidate
                break
        if dyads is None:
            raise NetdisturbError(
                f"period {period}: could not realize at least {min_flows} flows "
                f"at density {spec.density}; increase density or n_nodes"
            )
        index = FlowIndex(period=period, dyads=tuple(sorted(dyads)))
        provisional = NetworkSnapshot(
            period=period,
            flows=tuple(Flow(sender=s, receiver=r, value=1.0) for s, r in index.dyads),
        )
        design = build_design(
            provisional, index, nodal, dyadic, recipe=recipe, lag=spec.lag
        )
        W = build_weight_matrix(spec.structure, index, context)
        spect = spectrum(W)
        if not spect.rho_lower < spec.rho < spect.rho_upper:
            raise NetdisturbError(
                f"period {period}: rho={spec.rho} outside the spectral interval "
                f"({spect.rho_lower:.6g}, {spect.rho_upper:.6g}) of the realized "
                f"weight matrix; choose a smaller |rho|"
            )
        u = draw_disturbances(W.entries, spec.rho, spec.sigma, rng, size=1)[0]
        y = design.rows @ np.asarray(spec.beta) + u
        # exp(y) must stay a normal positive double, or the flow values
        # would degenerate to 0 or inf.
        if np.abs(y).max() > 700.0:
            raise NetdisturbError(
                f"period {period}: log flows reach |y|={np.abs(y).max():.3g}, "
                f"beyond exp() range; reduce |rho| or sigma"
            )
        snapshot = NetworkSnapshot(
            period=period,
            flows=tuple(
                Flow(sender=s, receiver=r, value=float(math.exp(y[a])))
                for a, (s, r) in enumerate(index.dyads)
            ),
        )
        panel.append(snapshot)
        indices[period] = index
        designs[period] = design
        weight_mats[period] = W
        truth_periods[period] = {
            "n_flows": index.n,
            "rho_bounds": [spect.rho_lower, spect.rho_upper],
        }

    truth = {
        "rho": spec.rho,
        "beta": list(spec.beta),
        "sigma": spec.sigma,
        "structure": spec.structure.structure_id,
        "seed": spec.seed,
        "lag": spec.lag,
        "density": spec.density,
        "n_nodes": spec.n_nodes,
        "column_names": ["intercept"] + [term.column_name for term in recipe],
        "periods": truth_periods,
    }
    return SimResult(
        spec=spec,
        panel=panel,
        roster=roster,
        nodal=nodal,
        dyadic=dyadic,
        indices=indices,
        designs=designs,
        weights=weight_mats,
        truth=truth,
    )


def write_sim_csvs(result: SimResult, outdir) -> dict[str, Path]:
    """Emit the panel and covariates in the loaders' CSV formats.

    Writes ``edges.csv``, ``roster.csv``, one ``<name>.csv`` per covariate
    series, and ``truth.json``; returns the paths keyed by artifact name.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "edges": outdir / "edges.csv",
        "roster": outdir / "roster.csv",
        "truth": outdir / "truth.json",
    }
    write_edge_csv(paths["edges"], result.panel)
    write_roster_csv(paths["roster"], result.roster)
    for series in result.nodal:
        paths[series.name] = outdir / f"{series.name}.csv"
        write_nodal_csv(paths[series.name], series)
    for series in result.dyadic:
        paths[series.name] = outdir / f"{series.name}.csv"
        write_dyadic_csv(paths[series.name], series)
    write_json(paths["truth"], result.truth)
    return paths
