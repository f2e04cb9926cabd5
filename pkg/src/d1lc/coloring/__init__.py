from .config import PipelineConfig, degree_classes
from .dense import dense_pipeline, dense_roles, put_aside, synch_color_trial, PutAsideSets
from .pipeline import RunReport, combined, combined_state, full_coloring
from .primitives import multi_trial, slack_generation, try_color, try_random_color
from .slackcolor import InvalidKappa, slack_color, round_bound
from .sparse import sparse_pipeline
from .transversal import EmptyPart, low_degree_sample, transversal

__all__ = [
    "PipelineConfig", "degree_classes", "dense_pipeline", "dense_roles", "put_aside",
    "synch_color_trial", "PutAsideSets", "RunReport", "combined", "combined_state",
    "full_coloring", "multi_trial", "slack_generation", "try_color", "try_random_color",
    "InvalidKappa", "slack_color", "round_bound", "sparse_pipeline", "EmptyPart",
    "low_degree_sample", "transversal",
]
