"""End-to-end run: ingest, metrics, aggregation, denoising, outputs.

A single JSON config drives the whole run.  For every requested
(variable, period, fare mode) combination the pipeline assembles
zone-keyed samples, selects the penalty strength out of sample, refits
on all samples, and writes a surface table, a GeoJSON map file, the
lambda sweep, and optional zone-group summaries.  A run manifest
records the config hash, seed, and every count needed to account for
each input row.  Reruns with the same config and seed are
byte-identical.
"""
from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, PipelineError, ZonefuseError
from .fares import (FARE_MODES, Tariff, evaluate_samples, experiment_filter,
                    samples_audit_text)
from .gfl import AdmmConfig, build_problem
from .graph import (ZoneGraph, decompose_trails, dump_edges, dump_trails,
                    knn_graph, zone_centroids)
from .ingest import (ANALYSIS_PERIODS, PeriodBin, PeriodCalendar,
                     chain_driver_transitions, parse_trips, zone_trips)
from .modelselect import (SplitSpec, default_lambda_grid, linear_r2,
                          select_lambda)
from .zones import ZoneRegistry, load_assignments, load_zone_geojson

VARIABLES = ("idle_time", "reach_time", "continuation_payoff",
             "driver_productivity")


@dataclass
class RunConfig:
    trips: str
    output_dir: str
    zones: str | None = None
    zone_assignments: str | None = None
    covariates: str | None = None
    schema: dict | None = None
    delimiter: str = ","
    timezone: str = "America/Chicago"
    idle_cap_minutes: float = 60.0
    duration_tolerance_minutes: float = 2.0
    tariff: Tariff = field(default_factory=Tariff)
    experiment_origin_zones: tuple[str, ...] = ()
    fare_modes: tuple[str, ...] = ("flat", "surge")
    variables: tuple[str, ...] = VARIABLES
    periods: tuple[PeriodBin, ...] = ANALYSIS_PERIODS
    lambda_grid: np.ndarray = field(default_factory=default_lambda_grid)
    knn_k: int = 4
    knn_metric: str = "degrees"
    admm: AdmmConfig = field(default_factory=AdmmConfig)
    zone_groups: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    seed: int = 0
    train_fraction: float = 0.9
    verbose: bool = False
    config_hash: str = ""

    def __post_init__(self):
        if not self.variables:
            raise ConfigError("select at least one variable")
        if not self.fare_modes:
            raise ConfigError("select at least one fare mode")
        for v in self.variables:
            if v not in VARIABLES:
                raise ConfigError(f"unknown variable {v!r}")
        for m in self.fare_modes:
            if m not in FARE_MODES:
                raise ConfigError(f"unknown fare mode {m!r}")
        if self.zones is None and self.zone_assignments is None:
            raise ConfigError("need a zone geometry file or an assignment file")


_CONFIG_KEYS = {
    "trips", "zones", "zone_assignments", "covariates", "output_dir",
    "schema", "delimiter", "timezone", "idle_cap_minutes",
    "duration_tolerance_minutes", "tariff", "experiment_origin_zones",
    "fare_modes", "variables", "periods", "lambda_grid", "knn_k",
    "knn_metric", "admm", "zone_groups", "seed", "train_fraction", "verbose",
}


def load_config(path) -> RunConfig:
    """Parse and validate a JSON run config."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(raw) - _CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    for key in ("trips", "output_dir"):
        if key not in raw:
            raise ConfigError(f"config is missing {key!r}")

    base = os.path.dirname(os.path.abspath(path))

    def _resolve(p):
        if p is None:
            return None
        return p if os.path.isabs(p) else os.path.join(base, p)

    tariff = Tariff(**raw.get("tariff", {}))
    admm = AdmmConfig(**raw.get("admm", {}))
    grid_spec = raw.get("lambda_grid")
    if grid_spec is None:
        grid = default_lambda_grid()
    elif isinstance(grid_spec, dict):
        grid = default_lambda_grid(grid_spec.get("min", 0.001),
                                   grid_spec.get("max", 100.0),
                                   grid_spec.get("count", 30))
    else:
        grid = np.asarray(grid_spec, dtype=float)
    periods = tuple(PeriodBin(p) for p in raw.get(
        "periods", [p.value for p in ANALYSIS_PERIODS]))
    groups = {str(g): tuple(str(z) for z in zs)
              for g, zs in raw.get("zone_groups", {}).items()}

    cfg = RunConfig(
        trips=_resolve(raw["trips"]),
        zones=_resolve(raw.get("zones")),
        zone_assignments=_resolve(raw.get("zone_assignments")),
        covariates=_resolve(raw.get("covariates")),
        output_dir=_resolve(raw["output_dir"]),
        schema=raw.get("schema"),
        delimiter=raw.get("delimiter", ","),
        timezone=raw.get("timezone", "America/Chicago"),
        idle_cap_minutes=float(raw.get("idle_cap_minutes", 60.0)),
        duration_tolerance_minutes=float(
            raw.get("duration_tolerance_minutes", 2.0)),
        tariff=tariff,
        experiment_origin_zones=tuple(
            str(z) for z in raw.get("experiment_origin_zones", [])),
        fare_modes=tuple(raw.get("fare_modes", ["flat", "surge"])),
        variables=tuple(raw.get("variables", VARIABLES)),
        periods=periods,
        lambda_grid=grid,
        knn_k=int(raw.get("knn_k", 4)),
        knn_metric=raw.get("knn_metric", "degrees"),
        admm=admm,
        zone_groups=groups,
        seed=int(raw.get("seed", 0)),
        train_fraction=float(raw.get("train_fraction", 0.9)),
        verbose=bool(raw.get("verbose", False)),
        config_hash=hashlib.sha256(
            json.dumps(raw, sort_keys=True).encode()).hexdigest(),
    )
    for name in ("trips", "zones", "zone_assignments", "covariates"):
        p = getattr(cfg, name)
        if p is not None and not os.path.exists(p):
            raise ConfigError(f"{name} path does not exist: {p}")
    return cfg


@dataclass
class GroupRow:
    group: str
    zones_present: int
    samples: int
    raw_weighted_mean: float | None
    denoised_weighted_mean: float | None


@dataclass
class SurfaceOutput:
    """One denoised zone surface plus its provenance."""

    variable: str
    period: str
    fare_mode: str
    zones: tuple[str, ...]
    raw_mean: np.ndarray      # NaN where the zone had no samples
    count: np.ndarray
    denoised: np.ndarray
    delta: np.ndarray         # denoised minus count-weighted global mean
    lam: float

    def to_csv_text(self) -> str:
        lines = ["zone_id,raw_mean,count,denoised,delta,lambda"]
        for i, zone in enumerate(self.zones):
            raw = "" if self.count[i] == 0 else f"{self.raw_mean[i]:.6f}"
            lines.append(
                f"{zone},{raw},{int(self.count[i])},{self.denoised[i]:.6f},"
                f"{self.delta[i]:.6f},{self.lam:.6f}")
        return "\n".join(lines) + "\n"


def make_surface(variable: str, period: PeriodBin, fare_mode: str,
                 graph: ZoneGraph, problem_y: np.ndarray,
                 problem_eta: np.ndarray, denoised: np.ndarray,
                 lam: float) -> SurfaceOutput:
    total = float(problem_eta.sum())
    mean = float(np.sum(problem_eta * denoised) / total) if total else 0.0
    raw = np.where(problem_eta > 0, problem_y, np.nan)
    return SurfaceOutput(
        variable=variable, period=period.value, fare_mode=fare_mode,
        zones=graph.nodes, raw_mean=raw, count=problem_eta.astype(int),
        denoised=denoised, delta=denoised - mean, lam=lam)


def emit_geojson(surface: SurfaceOutput, registry: ZoneRegistry | None
                 ) -> tuple[dict, int]:
    """FeatureCollection for the surface; returns (doc, missing-geometry count).

    Zones without geometry still get a feature (geometry null) so every
    surface row appears in the map file.
    """
    features = []
    missing = 0
    for i, zone in enumerate(surface.zones):
        geometry = None
        if registry is not None and registry.has_zone(zone):
            rings = [[[float(x), float(y)] for x, y in ring] + [
                [float(ring[0][0]), float(ring[0][1])]]
                for ring in registry.rings(zone)]
            geometry = {"type": "Polygon", "coordinates": rings}
        else:
            missing += 1
        raw = surface.raw_mean[i]
        features.append({
            "type": "Feature",
            "geometry": geometry,
            "properties": {
                "zone_id": zone,
                "raw_mean": None if np.isnan(raw) else float(raw),
                "count": int(surface.count[i]),
                "denoised": float(surface.denoised[i]),
                "delta": float(surface.delta[i]),
                "lambda": float(surface.lam),
            },
        })
    doc = {"type": "FeatureCollection", "features": features}
    return doc, missing


def zone_group_summary(surface: SurfaceOutput,
                       groups: Mapping[str, Sequence[str]]) -> list[GroupRow]:
    """Sample-count-weighted means of raw and denoised values per group."""
    if not groups:
        raise ValueError("groups must be nonempty")
    index = {z: i for i, z in enumerate(surface.zones)}
    rows = []
    for name in sorted(groups):
        idx = [index[z] for z in groups[name] if z in index]
        if not idx:
            rows.append(GroupRow(name, 0, 0, None, None))
            continue
        counts = surface.count[idx].astype(float)
        total = counts.sum()
        if total == 0:
            raw_mean = None
        else:
            raw = np.nan_to_num(surface.raw_mean[idx], nan=0.0)
            raw_mean = float(np.sum(counts * raw) / total)
        den_mean = (float(np.sum(counts * surface.denoised[idx]) / total)
                    if total else None)
        rows.append(GroupRow(name, len(idx), int(total), raw_mean, den_mean))
    return rows


def _groups_csv(rows: list[GroupRow]) -> str:
    lines = ["group,zones_present,samples,raw_weighted_mean,denoised_weighted_mean"]
    for r in rows:
        raw = "NA" if r.raw_weighted_mean is None else f"{r.raw_weighted_mean:.6f}"
        den = "NA" if r.denoised_weighted_mean is None else f"{r.denoised_weighted_mean:.6f}"
        lines.append(f"{r.group},{r.zones_present},{r.samples},{raw},{den}")
    return "\n".join(lines) + "\n"


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(path)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _combo_seed(master: int, *parts: str) -> int:
    digest = hashlib.sha256("|".join([str(master), *parts]).encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _stage(name: str):
    """Wrap stage failures with the stage name."""
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, etype, err, tb):
            if err is not None and isinstance(err, (ZonefuseError, OSError)) \
                    and not isinstance(err, PipelineError):
                raise PipelineError(f"stage '{name}': {err}") from err
            return False
    return _Ctx()


def _load_covariates(path: str) -> tuple[list[str], dict[str, dict[str, float]]]:
    """Covariate table: zone_id plus one numeric column per covariate."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        names = [c for c in (reader.fieldnames or []) if c != "zone_id"]
        if "zone_id" not in (reader.fieldnames or []):
            raise ConfigError("covariates file needs a zone_id column")
        table: dict[str, dict[str, float]] = {}
        for row in reader:
            vals = {}
            for c in names:
                try:
                    vals[c] = float(row[c])
                except (TypeError, ValueError):
                    vals[c] = float("nan")
            table[row["zone_id"]] = vals
    return names, table


def run_pipeline(cfg: RunConfig) -> dict:
    """Execute the full run; returns the manifest dict (also written)."""
    os.makedirs(cfg.output_dir, exist_ok=True)
    calendar = PeriodCalendar(timezone=cfg.timezone)
    manifest: dict = {
        "config_hash": cfg.config_hash,
        "seed": cfg.seed,
        "counts": {},
        "combos": {},
        "outputs": [],
    }

    with _stage("ingest"):
        trips, ingest_report = parse_trips(
            cfg.trips, cfg.schema, delimiter=cfg.delimiter,
            duration_tolerance=cfg.duration_tolerance_minutes)
    manifest["counts"]["input_rows"] = ingest_report.total_rows
    manifest["counts"]["accepted"] = ingest_report.accepted
    manifest["counts"]["rejections"] = dict(sorted(
        ingest_report.rejections.items()))

    registry = None
    with _stage("zones"):
        if cfg.zones is not None:
            registry = load_zone_geojson(cfg.zones)
        if cfg.zone_assignments is not None:
            amap = load_assignments(cfg.zone_assignments)

            def origin_of(trip):
                pair = amap.get(trip.trip_id)
                return None if pair is None else pair[0]

            def dest_of(trip):
                pair = amap.get(trip.trip_id)
                return None if pair is None else pair[1]
        else:
            origins = registry.assign_points(
                np.array([t.pickup_point for t in trips], dtype=float)
                if trips else np.empty((0, 2)))
            dests = registry.assign_points(
                np.array([t.dropoff_point for t in trips], dtype=float)
                if trips else np.empty((0, 2)))
            omap = {t.trip_id: z for t, z in zip(trips, origins)}
            dmap = {t.trip_id: z for t, z in zip(trips, dests)}

            def origin_of(trip):
                return omap[trip.trip_id]

            def dest_of(trip):
                return dmap[trip.trip_id]

        zoned, zone_report = zone_trips(trips, origin_of, dest_of, calendar)
    manifest["counts"]["zoned"] = len(zoned)
    manifest["counts"]["zoning_exclusions"] = dict(sorted(zone_report.items()))

    with _stage("transitions"):
        transitions, chain_report = chain_driver_transitions(
            zoned, cfg.idle_cap_minutes)
    manifest["counts"]["transitions"] = len(transitions)
    manifest["counts"]["transition_exclusions"] = dict(sorted(
        chain_report.items()))

    with _stage("graph"):
        observations = []
        for zt in zoned:
            observations.append((zt.origin_zone, *zt.trip.pickup_point))
            observations.append((zt.dest_zone, *zt.trip.dropoff_point))
        centroids, centroid_report = zone_centroids(
            observations, registry=registry)
        if len(centroids) < 2:
            raise PipelineError("stage 'graph': fewer than 2 zones located")
        graph = knn_graph(centroids, k=cfg.knn_k, metric=cfg.knn_metric)
        decomposition = decompose_trails(graph)
    manifest["counts"]["graph_nodes"] = graph.n_nodes
    manifest["counts"]["graph_edges"] = graph.n_edges
    manifest["counts"]["graph_trails"] = len(decomposition.trails)
    manifest["counts"]["centroid_report"] = dict(sorted(
        centroid_report.items()))
    _atomic_write(os.path.join(cfg.output_dir, "graph_edges.csv"),
                  dump_edges(graph))
    _atomic_write(os.path.join(cfg.output_dir, "graph_trails.csv"),
                  dump_trails(graph, decomposition))
    manifest["outputs"] += ["graph_edges.csv", "graph_trails.csv"]

    with _stage("experiment-filter"):
        if cfg.experiment_origin_zones:
            experiment_transitions, filt = experiment_filter(
                transitions, cfg.experiment_origin_zones)
            manifest["counts"]["experiment_transitions"] = filt.kept
        else:
            experiment_transitions = transitions
            manifest["counts"]["experiment_transitions"] = len(transitions)

    covariate_names: list[str] = []
    covariates: dict[str, dict[str, float]] = {}
    if cfg.covariates is not None:
        with _stage("covariates"):
            covariate_names, covariates = _load_covariates(cfg.covariates)

    # Assemble (zone, value, period) observations per variable/fare mode.
    def _samples_for(variable: str, fare_mode: str):
        report: Counter = Counter()
        audit = None
        if variable == "idle_time":
            rows = [(tr.first.dest_zone, tr.idle_time, tr.first.dropoff_period)
                    for tr in transitions]
        elif variable == "reach_time":
            rows = [(zt.origin_zone, zt.reach_time, zt.period) for zt in zoned]
        else:
            source = (transitions if variable == "continuation_payoff"
                      else experiment_transitions)
            audit, report = evaluate_samples(
                source, variable, fare_mode, cfg.tariff)
            rows = [(s.anchor_zone, s.value, s.period) for s in audit]
        return rows, report, audit

    diagnostics_rows: list[str] = []
    for variable in cfg.variables:
        for fare_mode in cfg.fare_modes:
            with _stage(f"metrics({variable},{fare_mode})"):
                rows, metric_report, audit = _samples_for(variable, fare_mode)
            for period in cfg.periods:
                combo = f"{variable}_{period.value}_{fare_mode}"
                samples = [(z, v) for z, v, p in rows if p == period]
                if cfg.verbose and audit is not None:
                    in_period = [s for s in audit if s.period == period]
                    if in_period:
                        _atomic_write(
                            os.path.join(cfg.output_dir,
                                         f"audit_{combo}.csv"),
                            samples_audit_text(in_period))
                        manifest["outputs"].append(f"audit_{combo}.csv")
                entry: dict = {"samples": len(samples)}
                if metric_report:
                    entry["metric_report"] = dict(sorted(metric_report.items()))
                if len(samples) < 10:
                    entry["skipped"] = "too-few-samples"
                    manifest["combos"][combo] = entry
                    continue
                with _stage(f"denoise({combo})"):
                    # seed depends on (variable, period) only, so equal
                    # sample sets (e.g. time variables under both fare
                    # modes) yield identical splits and surfaces
                    split = SplitSpec(
                        train_fraction=cfg.train_fraction,
                        seed=_combo_seed(cfg.seed, variable, period.value))
                    path, solution = select_lambda(
                        graph, decomposition, samples,
                        grid=cfg.lambda_grid, split=split, admm=cfg.admm)
                    problem = build_problem(graph, decomposition, samples)
                    surface = make_surface(
                        variable, period, fare_mode, graph, problem.y,
                        problem.eta, solution.x, path.selected)

                with _stage(f"write({combo})"):
                    base = f"surface_{combo}"
                    _atomic_write(os.path.join(cfg.output_dir, base + ".csv"),
                                  surface.to_csv_text())
                    doc, missing_geom = emit_geojson(surface, registry)
                    _atomic_write(
                        os.path.join(cfg.output_dir, base + ".geojson"),
                        json.dumps(doc, sort_keys=True, indent=None,
                                   separators=(",", ":")) + "\n")
                    _atomic_write(
                        os.path.join(cfg.output_dir, f"lambda_{combo}.csv"),
                        path.to_text())
                    entry["outputs"] = [base + ".csv", base + ".geojson",
                                        f"lambda_{combo}.csv"]
                    if cfg.zone_groups:
                        grows = zone_group_summary(surface, cfg.zone_groups)
                        _atomic_write(
                            os.path.join(cfg.output_dir,
                                         f"groups_{combo}.csv"),
                            _groups_csv(grows))
                        entry["outputs"].append(f"groups_{combo}.csv")

                entry.update({
                    "lambda": float(path.selected),
                    "rmse": float(path.rmse[path.selected_index]),
                    "iterations": int(solution.iterations),
                    "converged": bool(solution.converged),
                    "dropped": dict(sorted(problem.dropped.items())),
                    "missing_geometry": missing_geom,
                })
                manifest["combos"][combo] = entry
                manifest["outputs"] += entry["outputs"]

                for cov in covariate_names:
                    have = [(float(surface.denoised[i]),
                             float(surface.raw_mean[i]),
                             covariates.get(z, {}).get(cov, float("nan")))
                            for i, z in enumerate(surface.zones)
                            if surface.count[i] > 0]
                    den = [d for d, _, c in have if np.isfinite(c)]
                    raw = [r for _, r, c in have if np.isfinite(c)]
                    cvals = [c for _, _, c in have if np.isfinite(c)]
                    if len(cvals) < 3 or np.var(cvals) == 0:
                        continue
                    fit_d = linear_r2(den, cvals)
                    fit_r = linear_r2(raw, cvals)
                    diagnostics_rows.append(
                        f"{variable},{period.value},{fare_mode},{cov},"
                        f"{fit_r.r2:.6f},{fit_d.r2:.6f},{fit_d.slope:.6f},"
                        f"{fit_d.intercept:.6f},{fit_d.n}")

    if diagnostics_rows:
        text = ("variable,period,fare_mode,covariate,r2_raw,r2_denoised,"
                "slope,intercept,n\n" + "\n".join(diagnostics_rows) + "\n")
        _atomic_write(os.path.join(cfg.output_dir, "diagnostics.csv"), text)
        manifest["outputs"].append("diagnostics.csv")

    manifest["outputs"] = sorted(manifest["outputs"])
    _atomic_write(os.path.join(cfg.output_dir, "manifest.json"),
                  json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return manifest
