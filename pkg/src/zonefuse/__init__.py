"""Zone-level ride-sourcing metrics with graph-fused-lasso denoising.

The package ingests ride trip records, computes search-friction and
driver-productivity metrics over traffic analysis zones, and denoises
the zone surfaces with a trail-decomposed ADMM solver for the
graph-fused lasso, selecting the penalty strength by out-of-sample
RMSE.
"""

from .errors import (ConfigError, PipelineError, SampleRejection,
                     SolverError, ZoneFileError, ZonefuseError)
from .fares import (FARE_MODES, ProductivitySample, Tariff,
                    continuation_payoff, driver_productivity,
                    evaluate_samples, experiment_filter, flat_fare,
                    normalize_to_standard, productivity_decomposition,
                    samples_audit_text, surge_fare, unproductive_time)
from .fused1d import ChainProblem, chain_objective, solve_chain, solve_chains
from .gfl import (AdmmConfig, DenoiseProblem, DenoiseSolution, admm_solve,
                  build_problem, objective)
from .graph import (TrailDecomposition, ZoneGraph, decompose_trails,
                    dump_edges, dump_trails, knn_graph, zone_centroids)
from .ingest import (ANALYSIS_PERIODS, DriverTransition, PeriodBin,
                     PeriodCalendar, TripRecord, ZonedTrip, bin_period,
                     chain_driver_transitions, parse_trips, zone_trips)
from .modelselect import (LambdaPath, LinearFit, SplitSpec,
                          default_lambda_grid, linear_r2, rmse,
                          select_lambda, split_observations)
from .pipeline import (RunConfig, SurfaceOutput, emit_geojson, load_config,
                       run_pipeline, zone_group_summary)
from .zones import (ZoneRegistry, assign_zone, load_assignments,
                    load_zone_geojson)

__version__ = "0.1.0"

__all__ = [
    "ANALYSIS_PERIODS", "AdmmConfig", "ChainProblem", "ConfigError",
    "DenoiseProblem", "DenoiseSolution", "DriverTransition", "FARE_MODES",
    "LambdaPath", "LinearFit", "PeriodBin", "PeriodCalendar",
    "PipelineError", "ProductivitySample", "RunConfig", "SampleRejection",
    "SolverError", "SplitSpec", "SurfaceOutput", "Tariff",
    "TrailDecomposition", "TripRecord", "ZoneFileError", "ZoneGraph",
    "ZoneRegistry", "ZonedTrip", "ZonefuseError", "admm_solve",
    "assign_zone", "bin_period", "build_problem", "chain_driver_transitions",
    "chain_objective", "continuation_payoff", "decompose_trails",
    "default_lambda_grid", "driver_productivity", "dump_edges",
    "dump_trails", "emit_geojson", "evaluate_samples", "experiment_filter",
    "flat_fare", "knn_graph", "linear_r2", "load_assignments", "load_config",
    "load_zone_geojson", "normalize_to_standard", "objective", "parse_trips",
    "productivity_decomposition", "rmse", "run_pipeline",
    "samples_audit_text", "select_lambda",
    "solve_chain", "solve_chains", "split_observations", "surge_fare",
    "unproductive_time", "zone_centroids", "zone_group_summary",
    "zone_trips",
]
