"""Desk-scale studies: the Sgg estimator benchmark, the end-to-end pipeline
on a simulated generating process, and the deletion-stability study.

All true quantities (Sgg, Sgf_i, KL(g, f_i), the true projection M and its
h^2) use closed forms exclusively; everything else is estimated from the
simulated data.  Every experiment is a pure function of its configuration,
seeds included.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import EntropySettings, RunConfig
from .distributions import (
    GaussianModel,
    PathModel,
    Sample,
    entropy_gaussian,
    kl_gaussian,
    reduce_path_model,
    sample as draw_sample,
    simulate_path,
)
from .entropy import EntropyEstimate, entropy_kl, entropy_weighted
from .exceptions import PipelineStageError, ValidationError
from .mds import DivergenceMatrix, Embedding, dissimilarities, divergence_matrix, nmds
from .model_fit import FittedModel, aic, fit_all, sgf_hat
from .projection import (
    AverageResult,
    ProjectionResult,
    akaike_weights,
    deletion_sweep,
    model_average_location,
    solve_projection,
)
from .rng import spawn


# ---------------------------------------------------------------------------
# Sgg estimator benchmark
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CellSummary:
    n: int
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    mean: float


@dataclass(frozen=True, eq=False)
class BenchmarkReport:
    p: int
    mu: float
    sample_sizes: tuple[int, ...]
    replicates: int
    k: int
    estimator: str
    seed: int
    h_true: float
    cells: tuple[CellSummary, ...]
    ratios: np.ndarray  # (len(sample_sizes), replicates) of h_hat / h_true

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "mu": self.mu,
            "sample_sizes": list(self.sample_sizes),
            "replicates": self.replicates,
            "k": self.k,
            "estimator": self.estimator,
            "seed": self.seed,
            "h_true": self.h_true,
            "sgg_true": -self.h_true,
            "cells": [vars(c) for c in self.cells],
        }


def summarize_cell(n: int, ratios: np.ndarray) -> CellSummary:
    q1, med, q3 = np.percentile(ratios, [25.0, 50.0, 75.0])
    return CellSummary(n, float(ratios.min()), float(q1), float(med), float(q3),
                       float(ratios.max()), float(ratios.mean()))


def sgg_benchmark(p: int = 7, mu: float = 10.0,
                  n_list: Sequence[int] = (10, 25, 50, 75, 150),
                  replicates: int = 2000, k: int = 0, seed: int = 0,
                  estimator: str = "weighted", threads: int = 1) -> BenchmarkReport:
    """Replicate entropy estimation on N(mu*1, I_p) draws across sample sizes.

    Each cell records the ratio of the estimated differential entropy to the
    closed-form truth; k = 0 means the estimator's default order.
    """
    if replicates < 1:
        raise ValidationError("need at least 1 replicate")
    if estimator not in ("weighted", "kl"):
        raise ValidationError(f"estimator must be 'weighted' or 'kl', got {estimator!r}")
    n_list = tuple(int(n) for n in n_list)
    model = GaussianModel(np.full(p, float(mu)), np.eye(p))
    h_true = -entropy_gaussian(model)
    gens = spawn(seed, len(n_list) * replicates)

    def one(idx: int) -> float:
        n = n_list[idx // replicates]
        gen = gens[idx]
        x = model.mean + gen.standard_normal((n, p)) @ model.chol.T
        est = _estimate(Sample(x), estimator, k)
        return est.h_hat / h_true

    indices = range(len(n_list) * replicates)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            flat = list(pool.map(one, indices))
    else:
        flat = [one(i) for i in indices]
    ratios = np.array(flat).reshape(len(n_list), replicates)
    cells = tuple(summarize_cell(n, row) for n, row in zip(n_list, ratios))
    return BenchmarkReport(p, float(mu), n_list, replicates, int(k), estimator,
                           seed, h_true, cells, ratios)


def _estimate(sample: Sample, estimator: str, k: int) -> EntropyEstimate:
    if estimator == "kl":
        return entropy_kl(sample, k if k > 0 else 1)
    return entropy_weighted(sample, k if k > 0 else None)


# ---------------------------------------------------------------------------
# End-to-end pipeline
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PipelineReport:
    n: int
    stress: float
    stress_percent: float
    scale: float
    converged: bool
    asymmetry: float
    names: tuple[str, ...]
    m_hat: np.ndarray
    average_location: np.ndarray
    m_true: np.ndarray
    h2_hat: float
    h_hat: float
    clamped: bool
    h2_true: float
    sgg_hat: float
    sgg_true: float
    dist_m_to_true: float
    dist_avg_to_true: float
    objective_value: float
    kl_to_g: np.ndarray
    weights: np.ndarray

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "stress": self.stress,
            "stress_percent": self.stress_percent,
            "scale": self.scale,
            "converged": self.converged,
            "asymmetry": self.asymmetry,
            "m_hat": self.m_hat,
            "average_location": self.average_location,
            "m_true": self.m_true,
            "h2_hat": self.h2_hat,
            "h_hat": self.h_hat,
            "clamped": self.clamped,
            "h2_true": self.h2_true,
            "sgg_hat": self.sgg_hat,
            "sgg_true": self.sgg_true,
            "dist_m_to_true": self.dist_m_to_true,
            "dist_avg_to_true": self.dist_avg_to_true,
            "objective_value": self.objective_value,
            "kl_to_g": {name: float(v) for name, v in zip(self.names, self.kl_to_g)},
            "weights": {name: float(w) for name, w in zip(self.names, self.weights)},
        }


@dataclass(frozen=True, eq=False)
class PipelineRun:
    """Full pipeline state: every stage's artifact plus the summary report."""

    config: RunConfig
    generating: GaussianModel
    sample: Sample
    fits: list[FittedModel]
    divergence: DivergenceMatrix
    embedding: Embedding
    entropy: EntropyEstimate
    projection: ProjectionResult
    average: AverageResult
    report: PipelineReport


def true_projection(g: GaussianModel, models: Sequence[FittedModel], e: Embedding,
                    seed: int = 0) -> tuple[np.ndarray, float]:
    """Solve the projection system with exact inputs (closed-form KL and Sgg)."""
    sgg = entropy_gaussian(g)
    sgf = [sgg - kl_gaussian(g, fm.predictive) for fm in models]
    res = solve_projection(sgf, e, sgg, seed=seed,
                           aics=[aic(fm) for fm in models])
    return res.m, res.h2


def run_pipeline_full(config: RunConfig, threads: int = 1) -> PipelineRun:
    def stage(name, fn):
        try:
            return fn()
        except PipelineStageError:
            raise
        except Exception as exc:
            raise PipelineStageError(name, exc) from exc

    generating = stage("reduce", lambda: _implied_gaussian(config.generating))
    smp = stage("simulate", lambda: _simulate(config))
    fits = stage("fit", lambda: fit_all(config.candidates, smp))
    dm = stage("divergence", lambda: divergence_matrix(fits))
    emb = stage("embed", lambda: nmds(
        dissimilarities(dm), dim=config.nmds.dim, restarts=config.nmds.restarts,
        seed=config.seeds.nmds, max_iter=config.nmds.max_iter, tol=config.nmds.tol,
        names=dm.names))
    ent = stage("entropy", lambda: _entropy_estimate(smp, config.entropy))
    aics = [aic(fm) for fm in fits]
    sgfs = [sgf_hat(fm) for fm in fits]
    proj = stage("project", lambda: solve_projection(
        sgfs, emb, ent.sgg_hat, seed=config.seeds.projection, aics=aics))
    avg = stage("average", lambda: model_average_location(emb, akaike_weights(aics)))
    m_true, h2_true = stage("truth", lambda: true_projection(
        generating, fits, emb, seed=config.seeds.projection))

    sgg_true = entropy_gaussian(generating)
    report = PipelineReport(
        n=config.n,
        stress=emb.stress,
        stress_percent=100.0 * emb.stress,
        scale=emb.scale,
        converged=emb.converged,
        asymmetry=dm.asymmetry(),
        names=dm.names,
        m_hat=proj.m,
        average_location=avg.location,
        m_true=m_true,
        h2_hat=proj.h2,
        h_hat=float(np.sqrt(proj.h2)),
        clamped=proj.clamped,
        h2_true=h2_true,
        sgg_hat=ent.sgg_hat,
        sgg_true=sgg_true,
        dist_m_to_true=float(np.linalg.norm(proj.m - m_true)),
        dist_avg_to_true=float(np.linalg.norm(avg.location - m_true)),
        objective_value=proj.objective_value,
        kl_to_g=proj.kl_to_g,
        weights=avg.weights,
    )
    return PipelineRun(config, generating, smp, fits, dm, emb, ent, proj, avg, report)


def run_pipeline(config: RunConfig, threads: int = 1) -> PipelineReport:
    """Simulate, fit, embed, estimate, project; see PipelineRun for artifacts."""
    return run_pipeline_full(config, threads=threads).report


def _implied_gaussian(generating) -> GaussianModel:
    if isinstance(generating, PathModel):
        return reduce_path_model(generating)
    return generating


def _simulate(config: RunConfig) -> Sample:
    if isinstance(config.generating, PathModel):
        return simulate_path(config.generating, config.n, config.seeds.data)
    return draw_sample(_implied_gaussian(config.generating), config.n,
                       config.seeds.data, names=config.variables)


def _entropy_estimate(sample: Sample, settings: EntropySettings) -> EntropyEstimate:
    return _estimate(sample, settings.estimator, settings.k)


# ---------------------------------------------------------------------------
# Deletion stability
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeletionStep:
    step: int
    removed: str
    m: tuple[float, ...]
    average: tuple[float, ...]
    dist_m_to_true: float
    dist_avg_to_true: float
    h2: float

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "removed": self.removed,
            "m": list(self.m),
            "average": list(self.average),
            "dist_m_to_true": self.dist_m_to_true,
            "dist_avg_to_true": self.dist_avg_to_true,
            "h2": self.h2,
        }


@dataclass(frozen=True, eq=False)
class DeletionReport:
    direction: str
    pipeline: PipelineReport
    steps: tuple[DeletionStep, ...]

    @property
    def m_displacement(self) -> float:
        """Total path length of the projection across deletion steps."""
        return _path_length([s.m for s in self.steps])

    @property
    def average_displacement(self) -> float:
        return _path_length([s.average for s in self.steps])


def _path_length(points) -> float:
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return 0.0
    return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())


def deletion_experiment(config: RunConfig, direction: str = "left",
                        steps: int | None = None, threads: int = 1) -> DeletionReport:
    """Run the pipeline once, then delete extreme models one at a time.

    The embedding stays fixed; weights, average, and projection are
    recomputed over the survivors at every step and compared against the
    full-run true projection M.
    """
    run = run_pipeline_full(config, threads=threads)
    r = len(run.fits)
    max_steps = r - (config.nmds.dim + 2)
    if steps is None:
        steps = max_steps
    sweep = deletion_sweep(run.fits, run.embedding, run.entropy.sgg_hat,
                           direction=direction, steps=steps,
                           seed=config.seeds.projection)
    m_true = run.report.m_true
    rows = []
    removed_order = _removal_order(run.embedding, direction, steps)
    for step, (proj, avg) in enumerate(sweep):
        rows.append(DeletionStep(
            step=step,
            removed="" if step == 0 else removed_order[step - 1],
            m=tuple(float(x) for x in proj.m),
            average=tuple(float(x) for x in avg.location),
            dist_m_to_true=float(np.linalg.norm(proj.m - m_true)),
            dist_avg_to_true=float(np.linalg.norm(avg.location - m_true)),
            h2=proj.h2,
        ))
    return DeletionReport(direction, run.report, tuple(rows))


def _removal_order(e: Embedding, direction: str, steps: int) -> list[str]:
    names = e.names or tuple(f"f{i + 1}" for i in range(e.r))
    alive = list(range(e.r))
    order = []
    for _ in range(steps):
        first = e.coords[alive, 0]
        pick = alive[int(np.argmin(first) if direction == "left" else np.argmax(first))]
        alive.remove(pick)
        order.append(names[pick])
    return order
