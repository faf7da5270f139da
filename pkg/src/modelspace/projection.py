"""Locating the generating process in the embedded model space.

Each model contributes one relation  KL(g, f_i) = d(f_i, m)^2 + h^2  with a
common off-plane discrepancy h.  Writing KL(g, f_i) = Sgg - Sgf_i, the
Sgg-free level  t_i(m) = -sgf_i - d(f_i, m)^2  must be the same for every i,
so m is found by minimizing the summed squared pairwise differences of the
t_i; Sgg cancels in every difference and only re-enters afterwards to set the
level h^2.  The Akaike-weight model average is computed for comparison.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .exceptions import ValidationError
from .mds import Embedding
from .model_fit import FittedModel, aic, sgf_hat
from .rng import generator

_QUASI_STARTS = 16
_GRAD_TOL = 1e-10
_MAX_ITER = 1000
_COLLINEAR_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class ProjectionResult:
    """Estimated projection m, off-plane h^2, and per-model KL(g, f_i)."""

    m: np.ndarray
    h2: float
    sgg_used: float
    kl_to_g: np.ndarray
    objective_value: float
    clamped: bool
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float).reshape(-1)
        kl = np.asarray(self.kl_to_g, dtype=float).reshape(-1)
        if self.h2 < 0.0:
            raise ValidationError("h2 is a squared length and cannot be negative")
        m.setflags(write=False)
        kl.setflags(write=False)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "kl_to_g", kl)


@dataclass(frozen=True, eq=False)
class AverageResult:
    """Akaike weights and the weighted mean location in the embedding."""

    weights: np.ndarray
    location: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        loc = np.asarray(self.location, dtype=float).reshape(-1)
        if np.any(w < 0.0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValidationError("weights must be nonnegative and sum to 1")
        w.setflags(write=False)
        loc.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "location", loc)


def akaike_weights(aics) -> np.ndarray:
    """w_i = exp(-Delta_i / 2) / sum_r exp(-Delta_r / 2), Delta against min AIC."""
    a = np.asarray(aics, dtype=float).reshape(-1)
    if a.size < 1 or not np.all(np.isfinite(a)):
        raise ValidationError("AIC values must be a non-empty finite vector")
    ex = np.exp(-0.5 * (a - a.min()))
    return ex / ex.sum()


def model_average_location(e: Embedding, weights) -> AverageResult:
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.size != e.r:
        raise ValidationError(f"{w.size} weights for {e.r} embedded models")
    return AverageResult(w, w @ e.coords)


def projection_objective(m, sgf_hats, e: Embedding) -> float:
    """Sum over model pairs of (t_i - t_j)^2 for t_i = -sgf_i - d(f_i, m)^2.

    Evaluated as R * sum_i (t_i - mean t)^2, which equals the pairwise form.
    """
    t = _levels(np.asarray(m, dtype=float).reshape(-1), _sgf_vector(sgf_hats, e.r),
                e.coords)
    c = t - t.mean()
    return float(e.r * (c @ c))


def solve_projection(sgf_hats, e: Embedding, sgg_hat: float, seed: int = 0,
                     aics=None) -> ProjectionResult:
    """Estimate the projection m and off-plane discrepancy h^2.

    Quasi-Newton descent with the analytic gradient, multistarted from the
    model-average location (when ``aics`` is given), the centroid, and 16
    scrambled-Sobol points in the twice-expanded bounding box of the
    coordinates.  Lowest objective wins, ties broken by start index.  Then
    h^2 = sgg_hat - mean(sgf_i + d_i^2), clamped at zero with a flag, and
    kl_to_g[i] = h^2 + d_i^2.
    """
    sgf = _sgf_vector(sgf_hats, e.r)
    r, dim = e.coords.shape
    if r < dim + 2:
        raise ValidationError(
            f"projection from {r} models in {dim} dimensions is not identifiable; "
            f"need at least dim + 2 = {dim + 2}"
        )

    center = e.coords.mean(axis=0)
    centered = e.coords - center
    basis = _solve_basis(centered, dim)
    anchors = centered @ basis  # (r, rdim) frame where the descent runs

    starts = []
    if aics is not None:
        avg = model_average_location(e, akaike_weights(aics))
        starts.append((avg.location - center) @ basis)
    starts.append(np.zeros(basis.shape[1]))
    starts.extend(_quasi_random_starts(anchors, seed))

    def fun(z):
        t = _levels(z, sgf, anchors)
        c = t - t.mean()
        return r * float(c @ c)

    def grad(z):
        t = _levels(z, sgf, anchors)
        c = t - t.mean()
        return -4.0 * r * (c @ (z - anchors))

    if basis.shape[1] == 0:
        # Coincident anchors: the objective is flat, so m is the centroid.
        z = np.zeros(0)
        objective = fun(z)
    else:
        best = None
        for index, z0 in enumerate(starts):
            res = minimize(fun, z0, jac=grad, method="BFGS",
                           options={"gtol": _GRAD_TOL, "maxiter": _MAX_ITER})
            key = (float(res.fun), index)
            if best is None or key < best[0]:
                best = (key, res.x)
        (objective, _), z = best

    m = center + basis @ z
    d2 = np.einsum("ij,ij->i", e.coords - m, e.coords - m)
    h2 = float(sgg_hat - np.mean(sgf + d2))
    clamped = h2 < 0.0
    if clamped:
        h2 = 0.0
    return ProjectionResult(m, h2, float(sgg_hat), h2 + d2, objective, clamped,
                            e.names)


def deletion_sweep(models: Sequence[FittedModel], e: Embedding, sgg_hat: float,
                   direction: str = "left", steps: int = 0,
                   seed: int = 0) -> list[tuple[ProjectionResult, AverageResult]]:
    """Recompute projection and average while deleting extreme models.

    Step 0 is the full set; each later step drops the surviving model with
    the smallest (direction "left") or largest ("right") first embedding
    coordinate.  Coordinates of survivors stay exactly as in the original
    embedding.
    """
    if direction not in ("left", "right"):
        raise ValidationError(f"direction must be 'left' or 'right', got {direction!r}")
    r, dim = e.coords.shape
    if len(models) != r:
        raise ValidationError(f"{len(models)} models for {r} embedded coordinates")
    if not 0 <= steps <= r - (dim + 2):
        raise ValidationError(
            f"steps={steps} out of range; at most R - (dim + 2) = {r - (dim + 2)} deletions"
        )
    alive = list(range(r))
    out = []
    for step in range(steps + 1):
        if step > 0:
            first = e.coords[alive, 0]
            drop = alive[int(np.argmin(first) if direction == "left" else np.argmax(first))]
            alive.remove(drop)
        # Survivor coordinates stay exactly where the original embedding put
        # them; the sub-embedding is only recentered for the solver (the
        # objective and the average are translation-equivariant) and the
        # resulting locations are shifted back into the original frame.
        shift = e.coords[alive].mean(axis=0)
        names = tuple(e.names[i] for i in alive) if e.names is not None else None
        sub = Embedding(e.coords[alive] - shift, e.dim, e.stress, e.scale,
                        e.converged, e.restarts_used, names)
        aics = [aic(models[i]) for i in alive]
        sgfs = [sgf_hat(models[i]) for i in alive]
        avg = model_average_location(sub, akaike_weights(aics))
        avg = AverageResult(avg.weights, avg.location + shift)
        proj = solve_projection(sgfs, sub, sgg_hat, seed=seed, aics=aics)
        proj = replace(proj, m=proj.m + shift)
        out.append((proj, avg))
    return out


def _sgf_vector(sgf_hats, r: int) -> np.ndarray:
    sgf = np.asarray(sgf_hats, dtype=float).reshape(-1)
    if sgf.size != r:
        raise ValidationError(f"{sgf.size} sgf values for {r} embedded models")
    if not np.all(np.isfinite(sgf)):
        raise ValidationError("sgf values must be finite")
    return sgf


def _levels(z: np.ndarray, sgf: np.ndarray, anchors: np.ndarray) -> np.ndarray:
    diff = z - anchors
    return -sgf - np.einsum("ij,ij->i", diff, diff)


def _solve_basis(centered: np.ndarray, dim: int) -> np.ndarray:
    """Orthonormal basis of the subspace the anchors actually span.

    Near-collinear coordinates make the objective flat along the unspanned
    directions; those components of m are pinned to the centroid.
    """
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((dim, 0))
    keep = s > _COLLINEAR_RTOL * s[0]
    if not np.all(keep):
        warnings.warn(
            "embedded coordinates are nearly collinear; solving the projection "
            "in the spanned subspace only"
        )
    return vt[keep].T


def _quasi_random_starts(anchors: np.ndarray, seed: int) -> list[np.ndarray]:
    rdim = anchors.shape[1]
    if rdim == 0:
        return []
    lo = anchors.min(axis=0)
    hi = anchors.max(axis=0)
    mid = 0.5 * (lo + hi)
    half = np.maximum(0.5 * (hi - lo), 1e-12)
    sob = qmc.Sobol(d=rdim, scramble=True, seed=generator(seed))
    u = sob.random(_QUASI_STARTS)  # in [0, 1)
    return list(mid + (2.0 * u - 1.0) * 2.0 * half)
