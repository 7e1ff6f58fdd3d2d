"""Parallel sample-based minimum sum-of-squares clustering."""
from .baselines import PbkConfig, forgy_kmeans, pbk_bdc
from .bench import (BlobSpec, CampaignConfig, MetricRecord, RunSeries, baseline_convergence_time,
                    baseline_objective, brute_force_mssc, gen_blobs, relative_error, run_campaign,
                    summarize)
from .core import (Assignment, CentroidSet, ConfigError, DistanceCounter, NoSolutionError,
                   PreconditionError, assign_nearest, minmax_normalize, mssc_objective,
                   squared_distance)
from .engine import (ClusteringResult, EngineConfig, SharedBest, Strategy, WorkerState,
                     draw_sample, final_assignment, run, select_best, worker_step)
from .lloyd import LloydConfig, LloydOutcome, kmeans, update_centroids
from .seeding import SeedConfig, kmeanspp_seed, reinit_degenerate

__version__ = "0.1.0"
