"""Model-space construction and projection for multi-model inference.

Fitted candidate models are embedded in a Euclidean space via their pairwise
KL divergences; the generating process's orthogonal projection onto that
space, its off-plane discrepancy h^2, and its neg-selfentropy Sgg are then
estimated and compared against Akaike-weight model averaging.
"""

from .distributions import (
    GaussianModel,
    PathModel,
    Sample,
    draw,
    entropy_gaussian,
    kl_gaussian,
    log_density,
    reduce_path_model,
    sample,
    simulate_path,
)
from .entropy import (
    EntropyEstimate,
    digamma,
    entropy_kl,
    entropy_weighted,
    knn_distances,
)
from .exceptions import NumericalError, PipelineStageError, ValidationError
from .mds import (
    DivergenceMatrix,
    Embedding,
    classical_mds,
    dissimilarities,
    divergence_matrix,
    embed_distance,
    isotonic_regression,
    nmds,
)
from .model_fit import CandidateSpec, FittedModel, aic, fit, fit_all, sgf_hat
from .projection import (
    AverageResult,
    ProjectionResult,
    akaike_weights,
    deletion_sweep,
    model_average_location,
    projection_objective,
    solve_projection,
)

__version__ = "0.1.0"
