"""Euclidean model space via non-metric multidimensional scaling.

KL divergences between fitted models play the role of squared distances, so
the NMDS input is delta_ij = sqrt of the symmetrized divergence.  Kruskal
stress-1 is minimized by alternating monotone (isotonic) regression on the
rank order of delta with majorization updates of the configuration; the best
of several restarts wins and the final coordinates are least-squares rescaled
so embedded distances are in delta units.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .distributions import kl_gaussian
from .exceptions import ValidationError
from .model_fit import FittedModel
from .rng import spawn


@dataclass(frozen=True, eq=False)
class DivergenceMatrix:
    """R x R nonnegative divergence matrix with a zero diagonal, R >= 3."""

    values: np.ndarray
    names: tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        r = values.shape[0]
        if values.ndim != 2 or values.shape != (r, r):
            raise ValidationError(f"divergence matrix must be square, got {values.shape}")
        if r < 3:
            raise ValidationError("embedding and projection need at least 3 models")
        if not np.all(np.isfinite(values)):
            raise ValidationError("divergence matrix has non-finite entries")
        if np.any(values < 0.0):
            raise ValidationError("divergences must be nonnegative")
        if np.any(np.diag(values) != 0.0):
            raise ValidationError("divergence matrix diagonal must be zero")
        names = tuple(self.names)
        if len(names) != r or len(set(names)) != r:
            raise ValidationError("need one distinct name per model")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", names)

    @property
    def r(self) -> int:
        return self.values.shape[0]

    def asymmetry(self) -> float:
        """max |KL_ij - KL_ji|, a diagnostic for how non-metric the input is."""
        return float(np.abs(self.values - self.values.T).max())


@dataclass(frozen=True, eq=False)
class Embedding:
    """NMDS coordinates with final stress and the distance calibration factor."""

    coords: np.ndarray
    dim: int
    stress: float
    scale: float
    converged: bool
    restarts_used: int
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        if coords.ndim != 2 or coords.shape[1] != self.dim:
            raise ValidationError(f"coords shape {coords.shape} does not match dim={self.dim}")
        if not 0.0 <= self.stress <= 1.0:
            raise ValidationError(f"stress must lie in [0, 1], got {self.stress}")
        if self.scale <= 0.0:
            raise ValidationError("scale must be positive")
        if np.abs(coords.mean(axis=0)).max() > 1e-10:
            raise ValidationError("coords must be centered")
        names = tuple(self.names) if self.names is not None else None
        if names is not None and len(names) != coords.shape[0]:
            raise ValidationError("one name per embedded model required")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "names", names)

    @property
    def r(self) -> int:
        return self.coords.shape[0]


def divergence_matrix(models: Sequence[FittedModel]) -> DivergenceMatrix:
    """Pairwise exact KL between the models' predictive Gaussians."""
    dims = {m.predictive.dim for m in models}
    if len(dims) > 1:
        raise ValidationError(f"predictive dimensions differ: {sorted(dims)}")
    r = len(models)
    values = np.zeros((r, r))
    for i in range(r):
        for j in range(r):
            if i != j:
                values[i, j] = kl_gaussian(models[i].predictive, models[j].predictive)
    return DivergenceMatrix(values, tuple(m.spec.name for m in models))


def dissimilarities(dm: DivergenceMatrix) -> np.ndarray:
    """delta_ij = sqrt((KL_ij + KL_ji) / 2): symmetric, zero diagonal."""
    return np.sqrt(0.5 * (dm.values + dm.values.T))


def classical_mds(delta: np.ndarray, dim: int) -> np.ndarray:
    """Torgerson coordinates: eigendecompose -0.5 J delta^2 J.

    Eigenvalues are clamped at zero; if fewer than ``dim`` are positive the
    remaining columns are zero and a warning is emitted.
    """
    delta = _check_delta(delta)
    r = delta.shape[0]
    if not 1 <= dim:
        raise ValidationError(f"dim must be >= 1, got {dim}")
    j = np.eye(r) - np.ones((r, r)) / r
    b = -0.5 * j @ (delta**2) @ j
    evals, evecs = np.linalg.eigh(b)
    order = np.argsort(evals)[::-1][:dim]
    lam = evals[order]
    positive = lam > max(1.0, float(np.abs(evals).max())) * 1e-12
    if not np.all(positive):
        warnings.warn(
            f"only {int(positive.sum())} positive eigenvalues for dim={dim}; "
            "padding with zero columns"
        )
    coords = evecs[:, order] * np.sqrt(np.where(positive, lam, 0.0))
    return coords - coords.mean(axis=0)


def isotonic_regression(values, weights=None) -> np.ndarray:
    """Pool-adjacent-violators: weighted least-squares fit nondecreasing in
    the given order."""
    v = np.asarray(values, dtype=float).reshape(-1)
    if weights is None:
        w = np.ones_like(v)
    else:
        w = np.asarray(weights, dtype=float).reshape(-1)
        if w.shape != v.shape:
            raise ValidationError("weights must match values in length")
        if np.any(w <= 0.0):
            raise ValidationError("weights must be positive")
    means: list[float] = []
    wsum: list[float] = []
    count: list[int] = []
    for x, wt in zip(v, w):
        means.append(float(x))
        wsum.append(float(wt))
        count.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            m2, w2, c2 = means.pop(), wsum.pop(), count.pop()
            means[-1] = (means[-1] * wsum[-1] + m2 * w2) / (wsum[-1] + w2)
            wsum[-1] += w2
            count[-1] += c2
    return np.repeat(means, count)


def nmds(delta: np.ndarray, dim: int = 2, restarts: int = 8, seed: int = 0,
         max_iter: int = 500, tol: float = 1e-10,
         names: Sequence[str] | None = None) -> Embedding:
    """Minimize Kruskal stress-1 over configurations in ``dim`` dimensions.

    Starts from the classical-MDS configuration plus ``restarts - 1`` random
    ones; each start alternates isotonic regression on the rank order of
    delta (ties broken by the fit) with a majorization update of the
    coordinates, with step halving whenever an enlarged update would raise
    stress, then finishes with a quasi-Newton polish on the exact stress
    gradient.  The winner (lowest stress, ties by start index) is centered
    and rescaled by s* = sum(delta d) / sum(d^2) so distances are in delta
    units.
    """
    delta = _check_delta(delta)
    r = delta.shape[0]
    if r < 3:
        raise ValidationError("NMDS needs at least 3 objects")
    if restarts < 1:
        raise ValidationError("need at least one start")
    iu = np.triu_indices(r, 1)
    dvec = delta[iu]
    if not np.any(dvec > 0.0):
        raise ValidationError("all dissimilarities are zero")

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # rank padding is fine for a start
        starts = [classical_mds(delta, dim)]
    half_span = 0.5 * float(dvec.max())
    for gen in spawn(seed, restarts - 1):
        starts.append(half_span * gen.uniform(-1.0, 1.0, size=(r, dim)))

    best = None
    for index, x0 in enumerate(starts):
        x, stress, converged = _kruskal(x0, dvec, iu, r, max_iter, tol)
        key = (stress, index)
        if best is None or key < best[0]:
            best = (key, x, converged)
    (stress, _), x, converged = best

    x = x - x.mean(axis=0)
    d = _pair_distances(x, iu)
    ssq = float(d @ d)
    scale = float(dvec @ d) / ssq if ssq > 0.0 else 1.0
    if scale <= 0.0:
        scale = 1.0
    return Embedding(x * scale, dim, stress, scale, converged, len(starts),
                     tuple(names) if names is not None else None)


def embed_distance(e: Embedding, i: int, point) -> float:
    """Euclidean distance from model i's coordinates to a point in the plane."""
    point = np.asarray(point, dtype=float).reshape(-1)
    if point.size != e.dim:
        raise ValidationError(f"point has {point.size} coordinates, embedding dim is {e.dim}")
    return float(np.linalg.norm(e.coords[i] - point))


def _check_delta(delta) -> np.ndarray:
    delta = np.asarray(delta, dtype=float)
    r = delta.shape[0]
    if delta.ndim != 2 or delta.shape != (r, r):
        raise ValidationError(f"dissimilarity matrix must be square, got {delta.shape}")
    if not np.all(np.isfinite(delta)):
        raise ValidationError("dissimilarities must be finite")
    if np.abs(delta - delta.T).max() > 1e-8 * max(1.0, float(np.abs(delta).max())):
        raise ValidationError("dissimilarity matrix must be symmetric")
    if np.any(np.diag(delta) != 0.0):
        raise ValidationError("dissimilarity diagonal must be zero")
    if np.any(delta < 0.0):
        raise ValidationError("dissimilarities must be nonnegative")
    return 0.5 * (delta + delta.T)


def _pair_distances(x: np.ndarray, iu) -> np.ndarray:
    diff = x[iu[0]] - x[iu[1]]
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def _monotone_fit(dvec: np.ndarray, d: np.ndarray):
    """Isotonic targets for d in the rank order of dvec, and stress-1."""
    order = np.lexsort((d, dvec))
    dhat = np.empty_like(d)
    dhat[order] = isotonic_regression(d[order])
    ssq = float(d @ d)
    if ssq == 0.0:
        return dhat, 1.0
    resid = d - dhat
    return dhat, float(np.sqrt((resid @ resid) / ssq))


def _guttman(x: np.ndarray, dhat: np.ndarray, d: np.ndarray, iu, r: int) -> np.ndarray:
    ratio = np.zeros_like(d)
    nz = d > 0.0
    ratio[nz] = dhat[nz] / d[nz]
    b = np.zeros((r, r))
    b[iu] = -ratio
    b.T[iu] = -ratio
    np.fill_diagonal(b, -b.sum(axis=1))
    out = b @ x / r
    return out - out.mean(axis=0)


def _kruskal(x0: np.ndarray, dvec: np.ndarray, iu, r: int, max_iter: int, tol: float):
    x = x0 - x0.mean(axis=0)
    d = _pair_distances(x, iu)
    dhat, stress = _monotone_fit(dvec, d)
    converged = False
    step = 1.0
    for _ in range(max_iter):
        if stress == 0.0:
            converged = True
            break
        target = _guttman(x, dhat, d, iu, r)
        # Over-relaxed majorization: try an enlarged step first, halve on
        # failure; plain Guttman (step 1) is always stress-reducing.
        trial = min(2.0 * step, 4.0)
        accepted = None
        while trial > 1e-6:
            xn = x + trial * (target - x)
            dn = _pair_distances(xn, iu)
            dhn, sn = _monotone_fit(dvec, dn)
            if sn <= stress:
                accepted = (xn, dn, dhn, sn)
                break
            trial *= 0.5
        if accepted is None:
            converged = True  # no descent direction left
            break
        step = trial
        xn, dn, dhn, sn = accepted
        drop = stress - sn
        x, d, dhat, stress = xn, dn, dhn, sn
        if drop <= tol * max(stress, 1e-300):
            converged = True
            break
    x, stress, polished = _polish(x, dvec, iu, r)
    return x - x.mean(axis=0), stress, converged or polished


def _stress2_and_grad(flat: np.ndarray, dvec: np.ndarray, iu, r: int):
    """Squared stress-1 and its exact gradient in the coordinates.

    The isotonic fit is the projection of d onto a convex cone, so the
    residual term differentiates as if the targets were fixed.
    """
    x = flat.reshape(r, -1)
    d = _pair_distances(x, iu)
    dhat, _ = _monotone_fit(dvec, d)
    bot = float(d @ d)
    if bot == 0.0:
        return 1.0, np.zeros_like(flat)
    resid = d - dhat
    top = float(resid @ resid)
    g_d = (2.0 * resid * bot - top * 2.0 * d) / bot**2
    diff = x[iu[0]] - x[iu[1]]
    unit = diff / np.where(d > 0.0, d, 1.0)[:, None]
    gx = np.zeros_like(x)
    np.add.at(gx, iu[0], g_d[:, None] * unit)
    np.add.at(gx, iu[1], -g_d[:, None] * unit)
    return top / bot, gx.ravel()


def _polish(x: np.ndarray, dvec: np.ndarray, iu, r: int):
    """Quasi-Newton finish on the exact stress gradient; majorization alone
    approaches deep optima only linearly."""
    res = minimize(_stress2_and_grad, x.ravel(), args=(dvec, iu, r), jac=True,
                   method="L-BFGS-B",
                   options={"maxiter": 300, "ftol": 1e-18, "gtol": 1e-14})
    stress = float(np.sqrt(max(res.fun, 0.0)))
    return res.x.reshape(x.shape), stress, bool(res.success)
