"""Generalized PageRank diffusion, two-block SBM mean field and Inverse PageRank seed expansion."""
from .graph import (CommunitySet, Graph, GraphFormatError, VertexMap, ZeroDegreeError, bfs_subgraph,
                    largest_connected_component, load_communities, load_edge_list, max_seed_eccentricity,
                    walk_step)
from .randgraph import MeanFieldModel, RngConfig, SbmSpec, mean_field, sample_er, sample_sbm
from .diffusion import (LpSequence, MeanFieldLp, SpectralEstimate, deviation_norms, gpr, lambda_sub_estimate,
                        landing_probabilities, mean_field_lp, mean_gap)
from .weights import (FeatureMoments, SchemeSpec, WeightScheme, hpr_weights, ipr_normalized_weights,
                      ipr_unnormalized_weights, parse_scheme, ppr_weights, pseudo_fisher_weights)
from .detect import (DetectionConfig, DetectionResult, recall, recall_vs_budget, recall_vs_steps, run_detection,
                     sample_seeds, select_communities_m34, top_q)
from .analysis import (BoundReport, VarianceTable, bound_eval, classification_experiment, l1_divergence_demo,
                       variance_experiment)

__version__ = "0.1.0"
