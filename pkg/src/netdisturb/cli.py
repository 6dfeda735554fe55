"""Command-line front end for reproducible estimation runs.

Subcommands
-----------
fit          fit every candidate structure to every period
select       AIC comparison across candidate structures
scan-cutoff  Moran's I scan over distance cutoffs
diagnose     residual diagnostics for one structure
simulate     generate a synthetic panel from a spec file

Runs are driven by a flat ``key = value`` config file (``#`` starts a
comment; relative paths resolve against the config file's directory), with
``--out``, ``--seed`` and ``--jobs`` flags overriding the file.  Every run
writes a ``manifest.json`` recording the config hash, package and library
versions, and the seed, so a run can be reproduced exactly; reruns with the
same config and seed produce byte-identical artifacts.

Config keys (run commands)
--------------------------
edges, roster            input CSV paths
nodal.<name>             nodal covariate CSV for series <name>
dyadic.<name>            dyadic covariate CSV for series <name>
dyadic.<name>.symmetric  true/false (default true)
dyadic.<name>.default    value for absent dyads (default: absent = error)
recipe                   comma list of [log:]<series>:<role> terms, with
                         role one of sender, receiver, dyadic, abs_diff
lag                      covariate lag in periods (default 2)
candidates               comma list of structure ids; a distance structure
                         carries its cutoff as kind:cutoff_km; `rho0` adds
                         the independent-errors (OLS) candidate
alliance_series          dyadic series used by alliance structures
distance_series          dyadic series used by distance structures and scans
rho_interval             unit | spectral (default unit)
optimizer_xtol           rho search tolerance (default 1e-8)
optimizer_max_iter       optimizer iteration cap (default 500)
scan_direction           import | export (default import)
scan_grid                start:stop:step in km (default 0:20000:100)
scan_source              ols_residuals | log_flows (default ols_residuals)
smooth_window            odd moving-average window for weights (default 5;
                         0 disables the smoothed series)
diagnose_structure       structure id diagnosed by `diagnose`
out, seed, jobs          defaults for the corresponding flags

Simulation spec keys: n_nodes, n_periods, density, structure, rho, beta
(comma list), sigma, seed, lag, alliance_prob, disk_radius_km.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from ._serialize import write_json
from .covariates import (
    CovariateTerm,
    DEFAULT_LAG,
    build_design,
    impute_linear,
    load_dyadic_csv,
    load_nodal_csv,
)
from .diagnostics import (
    histogram,
    kde,
    qq_pairs,
    standardized_residuals,
    tradecorr_residuals,
    write_hist_csv,
    write_kde_csv,
    write_qq_csv,
    write_tradecorr_csv,
)
from .errors import ConfigError, NetdisturbError
from .moran import scan_cutoffs, write_scan_csv, write_scan_json
from .panel import index_flows, load_panel, log_flow_vector
from .selection import (
    select,
    write_aggregated_csv,
    write_report_json,
    write_weights_csv,
)
from .sem import SemProblem, fit, fit_ols, write_coefficients_csv, write_fit_json
from .simulate import SimSpec, simulate, write_sim_csvs
from .weights import (
    ALLIANCE_KINDS,
    DISTANCE_KINDS,
    KINDS,
    NeighborhoodSpec,
    build_weight_matrix,
)

OLS_CANDIDATE = "rho0"


def parse_config(path) -> dict[str, str]:
    """Parse a flat key = value file; errors carry path and line number."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def _parse_typed(values, key, kind, default):
    if key not in values:
        return default
    text = values[key]
    try:
        return kind(text)
    except ValueError:
        raise ConfigError(f"config key {key!r}: bad value {text!r}") from None


def parse_candidate(token: str):
    """One candidates entry: a structure kind, kind:cutoff_km, or rho0."""
    token = token.strip()
    if token == OLS_CANDIDATE:
        return OLS_CANDIDATE
    kind, _, cutoff = token.partition(":")
    if kind not in KINDS:
        raise ConfigError(
            f"unknown candidate {token!r}; expected one of {', '.join(KINDS)} "
            f"or {OLS_CANDIDATE}"
        )
    if kind in DISTANCE_KINDS:
        if not cutoff:
            raise ConfigError(f"candidate {token!r} needs a cutoff, e.g. {kind}:1100")
        try:
            return NeighborhoodSpec(kind, cutoff_km=float(cutoff))
        except ValueError:
            raise ConfigError(f"candidate {token!r}: bad cutoff {cutoff!r}") from None
    if cutoff:
        raise ConfigError(f"candidate {token!r}: only distance kinds take a cutoff")
    return NeighborhoodSpec(kind)


def parse_recipe(text: str) -> tuple[CovariateTerm, ...]:
    terms = []
    for token in filter(None, (t.strip() for t in text.split(","))):
        parts = token.split(":")
        transform = "none"
        if parts[0] == "log":
            transform = "log"
            parts = parts[1:]
        if len(parts) != 2:
            raise ConfigError(
                f"recipe term {token!r}: expected [log:]<series>:<role>"
            )
        series, role = parts
        try:
            terms.append(CovariateTerm(series, role, transform))
        except NetdisturbError as exc:
            raise ConfigError(f"recipe term {token!r}: {exc}") from None
    if not terms:
        raise ConfigError("recipe is empty")
    return tuple(terms)


def parse_grid(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"scan_grid {text!r}: expected start:stop:step")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"scan_grid {text!r}: bad number") from None
    if step <= 0 or stop < start:
        raise ConfigError(f"scan_grid {text!r}: need stop >= start and step > 0")
    return np.arange(start, stop + step / 2.0, step)


@dataclass
class DyadicFile:
    path: Path
    symmetric: bool = True
    default: float | None = None


@dataclass
class RunConfig:
    """Validated configuration for the fit/select/scan/diagnose commands."""

    config_path: Path
    config_sha256: str
    edges: Path
    roster: Path
    nodal: dict[str, Path]
    dyadic: dict[str, DyadicFile]
    recipe: tuple[CovariateTerm, ...]
    lag: int
    candidates: list
    alliance_series: str
    distance_series: str
    rho_interval: str
    optimizer_xtol: float
    optimizer_max_iter: int
    out: Path
    seed: int
    jobs: int
    scan_direction: str
    scan_grid: np.ndarray
    scan_source: str
    smooth_window: int
    diagnose_structure: NeighborhoodSpec | None = None


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "1"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    raise ValueError(text)


KNOWN_SCALAR_KEYS = {
    "edges", "roster", "recipe", "lag", "candidates", "alliance_series",
    "distance_series", "rho_interval", "optimizer_xtol", "optimizer_max_iter",
    "out", "seed", "jobs", "scan_direction", "scan_grid", "scan_source",
    "smooth_window", "diagnose_structure",
}


def load_run_config(path, out=None, seed=None, jobs=None) -> RunConfig:
    """Read, type and validate a run config; flags override file values."""
    path = Path(path)
    values = parse_config(path)
    base = path.parent

    for key in values:
        if key in KNOWN_SCALAR_KEYS or key.startswith(("nodal.", "dyadic.")):
            continue
        raise ConfigError(f"unknown config key {key!r}")

    def resolve(text):
        candidate = Path(text)
        return candidate if candidate.is_absolute() else base / candidate

    for required in ("edges", "roster"):
        if required not in values:
            raise ConfigError(f"config is missing required key {required!r}")

    nodal = {}
    dyadic: dict[str, DyadicFile] = {}
    for key, value in values.items():
        if key.startswith("nodal."):
            nodal[key[len("nodal."):]] = resolve(value)
        elif key.startswith("dyadic."):
            rest = key[len("dyadic."):]
            name, _, attr = rest.partition(".")
            entry = dyadic.setdefault(name, DyadicFile(path=Path()))
            if not attr:
                entry.path = resolve(value)
            elif attr == "symmetric":
                try:
                    entry.symmetric = _parse_bool(value)
                except ValueError:
                    raise ConfigError(
                        f"config key {key!r}: expected true/false, got {value!r}"
                    ) from None
            elif attr == "default":
                entry.default = _parse_typed({key: value}, key, float, None)
            else:
                raise ConfigError(f"unknown dyadic attribute in key {key!r}")
    for name, entry in dyadic.items():
        if entry.path == Path():
            raise ConfigError(f"dyadic.{name} has attributes but no file path")

    candidates = [
        parse_candidate(token)
        for token in filter(None, (t.strip() for t in values.get("candidates", "").split(",")))
    ]
    if not candidates:
        raise ConfigError("config needs at least one entry in 'candidates'")
    ids = [c if isinstance(c, str) else c.structure_id for c in candidates]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"duplicate candidates: {ids}")

    recipe = parse_recipe(values["recipe"]) if "recipe" in values else None
    if recipe is None:
        raise ConfigError("config is missing required key 'recipe'")

    rho_interval = values.get("rho_interval", "unit")
    if rho_interval not in ("unit", "spectral"):
        raise ConfigError(f"rho_interval must be unit or spectral, got {rho_interval!r}")
    scan_direction = values.get("scan_direction", "import")
    if scan_direction not in ("import", "export"):
        raise ConfigError(f"scan_direction must be import or export, got {scan_direction!r}")
    scan_source = values.get("scan_source", "ols_residuals")
    if scan_source not in ("ols_residuals", "log_flows"):
        raise ConfigError(
            f"scan_source must be ols_residuals or log_flows, got {scan_source!r}"
        )

    smooth_window = _parse_typed(values, "smooth_window", int, 5)
    if smooth_window < 0 or (smooth_window > 0 and smooth_window % 2 == 0):
        raise ConfigError(
            f"smooth_window must be 0 (disabled) or a positive odd integer, "
            f"got {smooth_window}"
        )

    diagnose_structure = None
    if "diagnose_structure" in values:
        parsed = parse_candidate(values["diagnose_structure"])
        if parsed == OLS_CANDIDATE:
            raise ConfigError("diagnose_structure must be a dependence structure, not rho0")
        diagnose_structure = parsed

    config = RunConfig(
        config_path=path,
        config_sha256=hashlib.sha256(path.read_bytes()).hexdigest(),
        edges=resolve(values["edges"]),
        roster=resolve(values["roster"]),
        nodal=nodal,
        dyadic=dyadic,
        recipe=recipe,
        lag=_parse_typed(values, "lag", int, DEFAULT_LAG),
        candidates=candidates,
        alliance_series=values.get("alliance_series", "alliance"),
        distance_series=values.get("distance_series", "distance"),
        rho_interval=rho_interval,
        optimizer_xtol=_parse_typed(values, "optimizer_xtol", float, 1e-8),
        optimizer_max_iter=_parse_typed(values, "optimizer_max_iter", int, 500),
        out=Path(out) if out is not None else resolve(values.get("out", "out")),
        seed=seed if seed is not None else _parse_typed(values, "seed", int, 0),
        jobs=jobs if jobs is not None else _parse_typed(values, "jobs", int, 1),
        scan_direction=scan_direction,
        scan_grid=parse_grid(values["scan_grid"]) if "scan_grid" in values else None,
        scan_source=scan_source,
        smooth_window=smooth_window,
        diagnose_structure=diagnose_structure,
    )

    for label, file_path in [("edges", config.edges), ("roster", config.roster)]:
        if not file_path.is_file():
            raise ConfigError(f"{label} file does not exist: {file_path}")
    for name, file_path in config.nodal.items():
        if not file_path.is_file():
            raise ConfigError(f"nodal.{name} file does not exist: {file_path}")
    for name, entry in config.dyadic.items():
        if not entry.path.is_file():
            raise ConfigError(f"dyadic.{name} file does not exist: {entry.path}")
    return config


def _write_manifest(config, command: str, extra=None) -> None:
    manifest = {
        "command": command,
        "config_file": config.config_path.name,
        "config_sha256": config.config_sha256,
        "package_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "seed": config.seed,
        "jobs": config.jobs,
    }
    if extra:
        manifest.update(extra)
    write_json(config.out / "manifest.json", manifest)


@dataclass(eq=False)
class PeriodData:
    snapshot: object
    index: object
    design: object
    y: np.ndarray


def _load_inputs(config):
    panel = load_panel(config.edges, config.roster)
    nodal = [
        impute_linear(load_nodal_csv(path, name))
        for name, path in sorted(config.nodal.items())
    ]
    dyadic = [
        load_dyadic_csv(entry.path, name, entry.symmetric, entry.default)
        for name, entry in sorted(config.dyadic.items())
    ]
    return panel, nodal, {series.name: series for series in dyadic}


def _prepare_periods(config, panel, nodal, dyadic_map):
    prepared: dict[int, PeriodData] = {}
    skipped = []
    dyadic = list(dyadic_map.values())
    for snapshot in panel:
        if snapshot.n_flows == 0:
            skipped.append({"period": snapshot.period, "reason": "no flows"})
            warnings.warn(f"period {snapshot.period} has no flows; skipped")
            continue
        index = index_flows(snapshot)
        try:
            design = build_design(
                snapshot, index, nodal, dyadic, recipe=config.recipe, lag=config.lag
            )
        except NetdisturbError as exc:
            skipped.append({"period": snapshot.period, "reason": str(exc)})
            warnings.warn(f"period {snapshot.period} skipped: {exc}")
            continue
        prepared[snapshot.period] = PeriodData(
            snapshot=snapshot,
            index=index,
            design=design,
            y=log_flow_vector(snapshot, index),
        )
    return prepared, skipped


def _structure_context(structure: NeighborhoodSpec, config, dyadic_map):
    if structure.kind in ALLIANCE_KINDS:
        name = config.alliance_series
    elif structure.kind in DISTANCE_KINDS:
        name = config.distance_series
    else:
        return None
    if name not in dyadic_map:
        raise ConfigError(
            f"structure {structure.structure_id} needs dyadic series {name!r}; "
            f"add a dyadic.{name} entry to the config"
        )
    return dyadic_map[name]


def _fit_one(config, data: PeriodData, candidate, dyadic_map):
    n = data.index.n
    if candidate == OLS_CANDIDATE:
        problem = SemProblem(y=data.y, X=data.design, W=np.zeros((n, n)))
        return fit_ols(problem), None
    context = _structure_context(candidate, config, dyadic_map)
    weight = build_weight_matrix(candidate, data.index, context)
    problem = SemProblem(y=data.y, X=data.design, W=weight)
    result = fit(
        problem,
        interval=config.rho_interval,
        xtol=config.optimizer_xtol,
        max_iter=config.optimizer_max_iter,
    )
    return result, weight


def _run_fits(config, prepared, dyadic_map):
    """Fit every (period, candidate); returns (fits, weights, failures)."""
    tasks = [
        (period, candidate)
        for period in sorted(prepared)
        for candidate in config.candidates
    ]

    def run(task):
        period, candidate = task
        cand_id = candidate if isinstance(candidate, str) else candidate.structure_id
        try:
            result, weight = _fit_one(config, prepared[period], candidate, dyadic_map)
            return period, cand_id, result, weight, None
        except ConfigError:
            raise
        except NetdisturbError as exc:
            return period, cand_id, None, None, str(exc)

    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            outcomes = list(pool.map(run, tasks))
    else:
        outcomes = [run(task) for task in tasks]

    fits = {}
    weight_mats = {}
    failures = []
    for period, cand_id, result, weight, error in outcomes:
        if error is not None:
            failures.append({"period": period, "structure": cand_id, "error": error})
            continue
        fits[(period, cand_id)] = result
        if weight is not None:
            weight_mats[(period, cand_id)] = weight
    return fits, weight_mats, failures


def candidate_ids(config) -> list[str]:
    return [
        candidate if isinstance(candidate, str) else candidate.structure_id
        for candidate in config.candidates
    ]


def cmd_fit(config: RunConfig) -> int:
    panel, nodal, dyadic_map = _load_inputs(config)
    prepared, skipped = _prepare_periods(config, panel, nodal, dyadic_map)
    fits, _, failures = _run_fits(config, prepared, dyadic_map)

    for cand_id in candidate_ids(config):
        directory = config.out / "fits" / cand_id
        entries = []
        for period in sorted(prepared):
            result = fits.get((period, cand_id))
            if result is None:
                continue
            write_fit_json(directory / f"period_{period}.json", result)
            entries.append((period, cand_id, result))
        if entries:
            write_coefficients_csv(directory / "coefficients.csv", entries)

    write_json(
        config.out / "fit_report.json",
        {
            "periods_fitted": sorted(prepared),
            "skipped_periods": skipped,
            "failures": failures,
            "candidates": candidate_ids(config),
        },
    )
    _write_manifest(config, "fit")
    for failure in failures:
        print(
            f"fit failed for period {failure['period']} / {failure['structure']}: "
            f"{failure['error']}",
            file=sys.stderr,
        )
    return 0


def cmd_select(config: RunConfig) -> int:
    panel, nodal, dyadic_map = _load_inputs(config)
    prepared, _ = _prepare_periods(config, panel, nodal, dyadic_map)
    fits, _, failures = _run_fits(config, prepared, dyadic_map)
    try:
        report = select(fits, structures=candidate_ids(config))
    except ValueError as exc:
        raise NetdisturbError(str(exc)) from None
    write_aggregated_csv(config.out / "aggregated.csv", report)
    write_weights_csv(config.out / "weights.csv", report)
    if config.smooth_window > 0:
        write_weights_csv(
            config.out / "weights_smoothed.csv", report,
            smoothed_window=config.smooth_window,
        )
    write_report_json(config.out / "selection.json", report)
    _write_manifest(config, "select", {"winner": report.winner})
    print(f"winner: {report.winner}")
    for structure, delta in zip(report.structures, report.aggregated_delta):
        print(f"  {structure}: aggregated delta {delta:.3f}")
    if failures:
        print(f"{len(failures)} fit failure(s); see stderr", file=sys.stderr)
    return 0


def cmd_scan(config: RunConfig) -> int:
    panel, nodal, dyadic_map = _load_inputs(config)
    prepared, _ = _prepare_periods(config, panel, nodal, dyadic_map)
    if config.distance_series not in dyadic_map:
        raise ConfigError(
            f"scan needs dyadic series {config.distance_series!r}; add a "
            f"dyadic.{config.distance_series} entry to the config"
        )
    residuals = {}
    indices = {}
    for period, data in prepared.items():
        if config.scan_source == "ols_residuals":
            problem = SemProblem(
                y=data.y, X=data.design, W=np.zeros((data.index.n, data.index.n))
            )
            residuals[period] = fit_ols(problem).u_hat
        else:
            residuals[period] = data.y
        indices[period] = data.index
    scan = scan_cutoffs(
        residuals,
        indices,
        dyadic_map[config.distance_series],
        direction=config.scan_direction,
        grid=config.scan_grid,
    )
    write_scan_csv(config.out / "scan.csv", scan)
    write_scan_json(config.out / "scan.json", scan)
    _write_manifest(config, "scan-cutoff", {"best_cutoff_km": scan.best_cutoff})
    print(f"best cutoff: {scan.best_cutoff:g} km (Moran's I = {scan.best_value:.6f})")
    return 0


def cmd_diagnose(config: RunConfig) -> int:
    structure = config.diagnose_structure
    if structure is None:
        raise ConfigError("diagnose needs a 'diagnose_structure' config entry")
    panel, nodal, dyadic_map = _load_inputs(config)
    prepared, _ = _prepare_periods(config, panel, nodal, dyadic_map)

    pooled = []
    tradecorr_items = []
    failures = []
    for period in sorted(prepared):
        data = prepared[period]
        try:
            result, weight = _fit_one(config, data, structure, dyadic_map)
        except ConfigError:
            raise
        except NetdisturbError as exc:
            failures.append({"period": period, "error": str(exc)})
            continue
        if not result.converged or result.degenerate:
            failures.append({"period": period, "error": "fit did not converge"})
            continue
        pooled.append(standardized_residuals(result))
        tradecorr_items.append(tradecorr_residuals(result, weight, data.index))

    if not pooled:
        raise NetdisturbError("no period produced a usable fit to diagnose")
    standardized = np.concatenate(pooled)
    theoretical, empirical = qq_pairs(standardized)
    write_qq_csv(config.out / "qq.csv", theoretical, empirical)
    write_hist_csv(config.out / "hist.csv", histogram(standardized))
    write_tradecorr_csv(config.out / "tradecorr.csv", tradecorr_items)

    by_node: dict[str, list[float]] = {}
    for item in tradecorr_items:
        for node, values in item.attribution.items():
            by_node.setdefault(node, []).extend(values)
    curves = []
    for node in sorted(by_node):
        values = np.asarray(by_node[node])
        if np.unique(values).size < 2:
            continue
        curves.append(kde(values, node_id=node))
    write_kde_csv(config.out / "kde.csv", curves)
    _write_manifest(
        config, "diagnose",
        {"structure": structure.structure_id, "failures": failures},
    )
    print(
        f"diagnosed {len(tradecorr_items)} period(s) under {structure.structure_id}; "
        f"{len(curves)} node density curves"
    )
    return 0


def load_sim_spec(path, seed=None) -> SimSpec:
    values = parse_config(path)
    known = {
        "n_nodes", "n_periods", "density", "structure", "rho", "beta",
        "sigma", "seed", "lag", "alliance_prob", "disk_radius_km",
    }
    for key in values:
        if key not in known:
            raise ConfigError(f"unknown simulation key {key!r}")
    for required in ("n_nodes", "n_periods", "density", "structure", "rho", "beta", "sigma"):
        if required not in values:
            raise ConfigError(f"simulation spec is missing key {required!r}")
    structure = parse_candidate(values["structure"])
    if structure == OLS_CANDIDATE:
        raise ConfigError("simulation structure must be a dependence structure")
    try:
        beta = tuple(float(b) for b in values["beta"].split(","))
    except ValueError:
        raise ConfigError(f"bad beta list {values['beta']!r}") from None
    try:
        return SimSpec(
            n_nodes=_parse_typed(values, "n_nodes", int, None),
            n_periods=_parse_typed(values, "n_periods", int, None),
            density=_parse_typed(values, "density", float, None),
            structure=structure,
            rho=_parse_typed(values, "rho", float, None),
            beta=beta,
            sigma=_parse_typed(values, "sigma", float, None),
            seed=seed if seed is not None else _parse_typed(values, "seed", int, 0),
            lag=_parse_typed(values, "lag", int, 0),
            alliance_prob=_parse_typed(values, "alliance_prob", float, 0.3),
            disk_radius_km=_parse_typed(values, "disk_radius_km", float, 3000.0),
        )
    except NetdisturbError as exc:
        raise ConfigError(f"invalid simulation spec: {exc}") from None


def cmd_simulate(spec_path, out, seed=None) -> int:
    spec = load_sim_spec(spec_path, seed=seed)
    result = simulate(spec)
    outdir = Path(out)
    write_sim_csvs(result, outdir)
    spec_path = Path(spec_path)
    write_json(
        outdir / "manifest.json",
        {
            "command": "simulate",
            "config_file": spec_path.name,
            "config_sha256": hashlib.sha256(spec_path.read_bytes()).hexdigest(),
            "package_version": __version__,
            "numpy_version": np.__version__,
            "scipy_version": scipy.__version__,
            "seed": spec.seed,
        },
    )
    total = sum(s.n_flows for s in result.panel)
    print(f"simulated {len(result.panel)} period(s), {total} flows -> {outdir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netdisturb",
        description="Network disturbance models over panels of directed weighted networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_command(name, help_text):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="run config file")
        cmd.add_argument("--out", help="output directory (overrides config)")
        cmd.add_argument("--seed", type=int, help="seed recorded in the manifest")
        cmd.add_argument("--jobs", type=int, help="parallel fit workers")
        return cmd

    add_run_command("fit", "fit every candidate structure per period")
    add_run_command("select", "compare candidate structures by AIC")
    add_run_command("scan-cutoff", "scan distance cutoffs by Moran's I")
    add_run_command("diagnose", "residual diagnostics for one structure")

    sim = sub.add_parser("simulate", help="generate a synthetic panel")
    sim.add_argument("--spec", required=True, help="simulation spec file")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--seed", type=int, help="override the spec's seed")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(args.spec, args.out, seed=args.seed)
        config = load_run_config(
            args.config, out=args.out, seed=args.seed, jobs=args.jobs
        )
        handler = {
            "fit": cmd_fit,
            "select": cmd_select,
            "scan-cutoff": cmd_scan,
            "diagnose": cmd_diagnose,
        }[args.command]
        return handler(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NetdisturbError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
