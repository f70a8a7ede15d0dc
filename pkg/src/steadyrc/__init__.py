"""Steady-state detection in compressor test episodes with echo state networks."""

from .artifact import load_model, save_model
from .clustering import Centroids, assign_cluster, kmeans_fit, one_hot
from .dataset import (
    Archetype,
    DatasetSplit,
    Episode,
    NormStats,
    generate_labels,
    label_episode,
    normalize,
    read_episode,
    split_dataset,
    synthesize_corpus,
    synthesize_episode,
)
from .errors import (
    ConfigError,
    DataError,
    DegenerateMatrix,
    DimensionMismatch,
    NoSteadyState,
    SingleClass,
    SingularSystem,
    SteadyRCError,
    Unattainable,
)
from .evaluation import (
    ReferenceModel,
    auc,
    confusion_at_threshold,
    detection_time,
    evaluate,
    naive_reference,
    roc_curve,
    select_threshold_for_fpr,
)
from .experiment import VARIANTS, RunConfig, grid_search, load_run_config, reservoir_size_sweep, run_pipeline
from .readout import NormalEquations, TrainedModel, ridge_regress, train_model
from .reservoir import (
    ReservoirConfig,
    ReservoirWeights,
    harvest_states,
    init_weights,
    readout,
    rescale_spectral_radius,
    spectral_radius,
    update_state,
)

__version__ = "0.1.0"
