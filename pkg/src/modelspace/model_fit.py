"""Maximum-likelihood fitting of linear-Gaussian candidate models.

Each candidate is a set of directed regression edges over the sample's
variables; every variable always gets a free intercept and a free residual
variance.  Per-equation ordinary least squares is the joint MLE for this
family, so the implied joint Gaussian and the exact log-likelihood follow in
closed form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distributions import (
    GaussianModel,
    LOG_2PI,
    PathModel,
    Sample,
    reduce_path_model,
    topological_order,
)
from .exceptions import NumericalError, ValidationError


@dataclass(frozen=True)
class CandidateSpec:
    """A named candidate structure: regression edges over sample variables."""

    name: str
    edges: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        name = str(self.name)
        if not name:
            raise ValidationError("candidate name must be non-empty")
        edges = tuple((str(s), str(t)) for s, t in self.edges)
        if len(set(edges)) != len(edges):
            raise ValidationError(f"duplicate edge in candidate '{name}'")
        # Raises, naming the cycle, if the edge set is not a DAG.
        vars_ = sorted({v for e in edges for v in e})
        topological_order(vars_, edges)
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "edges", edges)


@dataclass(frozen=True, eq=False)
class FittedModel:
    """MLE summary of one candidate: loglik, k, n, and the implied Gaussian."""

    spec: CandidateSpec
    loglik: float
    k: int
    n: int
    predictive: GaussianModel

    def __post_init__(self):
        if not np.isfinite(self.loglik):
            raise ValidationError("log-likelihood must be finite")
        if self.k < 1 or self.n < 1:
            raise ValidationError("k and n must be positive")


def parameter_count(spec: CandidateSpec, p: int) -> int:
    """Free scalars of the linear-Gaussian family: edges + p intercepts + p variances."""
    return len(spec.edges) + 2 * p


def fit(spec: CandidateSpec, sample: Sample) -> FittedModel:
    """Fit one candidate by per-equation OLS; residual variances use divisor n.

    Raises on unknown variables, rank-deficient designs, or n < k.
    """
    unknown = sorted({v for e in spec.edges for v in e} - set(sample.names))
    if unknown:
        raise ValidationError(
            f"candidate '{spec.name}' uses variables {unknown} not in the sample"
        )
    n, p = sample.n, sample.p
    k = parameter_count(spec, p)
    if n < k:
        raise ValidationError(
            f"candidate '{spec.name}' has k={k} parameters but only n={n} rows"
        )

    coefs: list[tuple[str, str, float]] = []
    intercepts: dict[str, float] = {}
    noise_sd: dict[str, float] = {}
    loglik = 0.0
    for v in sample.names:
        parents = [s for s, t in spec.edges if t == v]
        y = sample.column(v)
        design = np.column_stack(
            [np.ones(n)] + [sample.column(s) for s in parents]
        )
        q = design.shape[1]
        if np.linalg.matrix_rank(design) < q:
            raise ValidationError(
                f"rank-deficient design for '{v}' in candidate '{spec.name}'"
            )
        beta, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
        resid = y - design @ beta
        var = float(resid @ resid) / n
        if var <= 0.0 or not np.isfinite(var):
            raise NumericalError(
                f"degenerate residual variance for '{v}' in candidate '{spec.name}'"
            )
        intercepts[v] = float(beta[0])
        noise_sd[v] = float(np.sqrt(var))
        coefs.extend((s, v, float(b)) for s, b in zip(parents, beta[1:]))
        loglik += -0.5 * n * (LOG_2PI + np.log(var) + 1.0)

    fitted = PathModel(sample.names, tuple(coefs), noise_sd, intercepts)
    return FittedModel(spec, float(loglik), k, n, reduce_path_model(fitted))


def fit_all(specs: Sequence[CandidateSpec], sample: Sample) -> list[FittedModel]:
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ValidationError("candidate names must be distinct within a model set")
    return [fit(s, sample) for s in specs]


def aic(fm: FittedModel) -> float:
    """-2 loglik + 2k."""
    return -2.0 * fm.loglik + 2.0 * fm.k


def sgf_hat(fm: FittedModel) -> float:
    """Neg-crossentropy estimate loglik/n - k/n (identically -AIC / 2n)."""
    return fm.loglik / fm.n - fm.k / fm.n
