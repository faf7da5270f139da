"""Probability-model primitives.

Multivariate Gaussians and linear-Gaussian path models, with sampling,
log-density, and closed-form divergence/entropy.  All divergences live on the
natural-log scale, KL(g, f) = Sgg - Sgf, where Sgf = E_g[ln f] is the
neg-crossentropy and Sgg = E_g[ln g] the neg-selfentropy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import NumericalError, ValidationError
from .rng import generator

_SYM_RTOL = 1e-12

LOG_2PI = float(np.log(2.0 * np.pi))


def standard_names(p: int) -> tuple[str, ...]:
    return tuple(f"x{i + 1}" for i in range(p))


@dataclass(frozen=True, eq=False)
class GaussianModel:
    """Multivariate normal N(mean, cov) with a positive-definite covariance.

    The covariance is symmetrized silently when the asymmetry is within
    1e-12 relative tolerance and rejected beyond; positive definiteness is
    checked by Cholesky factorization at construction.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.asarray(self.cov, dtype=float)
        if mean.size < 1:
            raise ValidationError("mean must have length >= 1")
        if cov.shape != (mean.size, mean.size):
            raise ValidationError(
                f"cov shape {cov.shape} does not match mean length {mean.size}"
            )
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValidationError("mean and cov must be finite")
        scale = max(1.0, float(np.abs(cov).max()))
        if float(np.abs(cov - cov.T).max()) > _SYM_RTOL * scale:
            raise ValidationError("covariance is not symmetric within tolerance")
        cov = 0.5 * (cov + cov.T)
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise ValidationError("covariance is not positive definite") from exc
        mean.setflags(write=False)
        cov.setflags(write=False)
        chol.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "_chol", chol)

    @property
    def dim(self) -> int:
        return self.mean.size

    @property
    def chol(self) -> np.ndarray:
        """Lower-triangular Cholesky factor of cov."""
        return self._chol

    @property
    def log_det_cov(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self._chol))))

    def __eq__(self, other) -> bool:
        if not isinstance(other, GaussianModel):
            return NotImplemented
        return np.array_equal(self.mean, other.mean) and np.array_equal(
            self.cov, other.cov
        )


@dataclass(frozen=True, eq=False)
class Sample:
    """An n x p data matrix with named columns; n >= 2, all entries finite."""

    data: np.ndarray
    names: tuple[str, ...] = ()

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise ValidationError(f"sample data must be 2-d, got shape {data.shape}")
        n, p = data.shape
        if n < 2:
            raise ValidationError(f"a sample needs at least 2 rows, got {n}")
        if p < 1:
            raise ValidationError("a sample needs at least 1 column")
        if not np.all(np.isfinite(data)):
            raise ValidationError("sample contains non-finite entries")
        names = tuple(self.names) if self.names else standard_names(p)
        if len(names) != p:
            raise ValidationError(f"{len(names)} names for {p} columns")
        if len(set(names)) != len(names):
            raise ValidationError("column names must be distinct")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.names.index(name)]


@dataclass(frozen=True)
class PathModel:
    """Linear-Gaussian path model: x = intercepts + B x + eps over an acyclic graph.

    ``edges`` are (source, target, coefficient) triples; ``noise_sd`` and
    ``intercepts`` are per-variable and may be given as a scalar, a sequence
    aligned with ``variables``, or a mapping by name.
    """

    variables: tuple[str, ...]
    edges: tuple[tuple[str, str, float], ...] = ()
    noise_sd: tuple[float, ...] = field(default=1.0)  # type: ignore[assignment]
    intercepts: tuple[float, ...] = field(default=0.0)  # type: ignore[assignment]

    def __post_init__(self):
        variables = tuple(str(v) for v in self.variables)
        if len(variables) < 1:
            raise ValidationError("a path model needs at least one variable")
        if len(set(variables)) != len(variables):
            raise ValidationError("variable names must be distinct")
        edges = tuple((str(s), str(t), float(c)) for s, t, c in self.edges)
        seen = set()
        for s, t, _ in edges:
            if s not in variables or t not in variables:
                raise ValidationError(f"edge {s}->{t} uses an unknown variable")
            if (s, t) in seen:
                raise ValidationError(f"duplicate edge {s}->{t}")
            seen.add((s, t))
        noise = _per_variable(self.noise_sd, variables, "noise_sd")
        if any(v <= 0 for v in noise):
            raise ValidationError("every noise_sd must be > 0")
        inter = _per_variable(self.intercepts, variables, "intercepts")
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "noise_sd", noise)
        object.__setattr__(self, "intercepts", inter)
        object.__setattr__(
            self, "_order", topological_order(variables, [(s, t) for s, t, _ in edges])
        )

    @property
    def p(self) -> int:
        return len(self.variables)

    @property
    def order(self) -> tuple[str, ...]:
        """A topological order of the variables (parents before children)."""
        return self._order

    def parents(self, name: str) -> list[tuple[str, float]]:
        return [(s, c) for s, t, c in self.edges if t == name]

    def coefficient_matrix(self) -> np.ndarray:
        """B with B[target, source] = coefficient, indices in ``variables`` order."""
        idx = {v: i for i, v in enumerate(self.variables)}
        b = np.zeros((self.p, self.p))
        for s, t, c in self.edges:
            b[idx[t], idx[s]] = c
        return b


def _per_variable(value, variables, what) -> tuple[float, ...]:
    if isinstance(value, Mapping):
        missing = [v for v in variables if v not in value]
        if missing:
            raise ValidationError(f"{what} missing for variables {missing}")
        extra = [k for k in value if k not in variables]
        if extra:
            raise ValidationError(f"{what} given for unknown variables {extra}")
        return tuple(float(value[v]) for v in variables)
    if np.isscalar(value):
        return (float(value),) * len(variables)
    vals = tuple(float(x) for x in value)
    if len(vals) != len(variables):
        raise ValidationError(f"{what} has {len(vals)} entries for {len(variables)} variables")
    return vals


def topological_order(variables: Sequence[str], edges) -> tuple[str, ...]:
    """Kahn's algorithm; raises naming a cycle if none exists."""
    variables = list(variables)
    children: dict[str, list[str]] = {v: [] for v in variables}
    indeg = {v: 0 for v in variables}
    for s, t in edges:
        children[s].append(t)
        indeg[t] += 1
    ready = [v for v in variables if indeg[v] == 0]
    order: list[str] = []
    while ready:
        v = ready.pop(0)
        order.append(v)
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
    if len(order) < len(variables):
        remaining = [v for v in variables if indeg[v] > 0]
        raise ValidationError(f"cycle in path model: {_name_cycle(remaining, edges)}")
    return tuple(order)


def _name_cycle(remaining, edges) -> str:
    # Trim nodes with no successor among the unresolved ones, so only cycle
    # members remain, then walk until a node repeats.
    core = set(remaining)
    while True:
        dead = [v for v in core if not any(s == v and t in core for s, t in edges)]
        if not dead:
            break
        core.difference_update(dead)
    succ = {v: [t for s, t in edges if s == v and t in core] for v in core}
    start = sorted(core)[0]
    path = [start]
    seen = {start: 0}
    while True:
        nxt = succ[path[-1]][0]
        if nxt in seen:
            cycle = path[seen[nxt]:] + [nxt]
            return " -> ".join(cycle)
        seen[nxt] = len(path)
        path.append(nxt)


def log_density(model: GaussianModel, x) -> float | np.ndarray:
    """ln f(x; mean, cov) of the multivariate normal.

    ``x`` may be a single length-p vector (returns a float) or an (n, p)
    matrix (returns a length-n array).
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = x.reshape(1, -1) if single else x
    if pts.ndim != 2 or pts.shape[1] != model.dim:
        raise ValidationError(
            f"point dimension {x.shape} does not match model dimension {model.dim}"
        )
    z = solve_triangular(model.chol, (pts - model.mean).T, lower=True)
    quad = np.einsum("ij,ij->j", z, z)
    out = -0.5 * (model.dim * LOG_2PI + model.log_det_cov + quad)
    return float(out[0]) if single else out


def draw(model: GaussianModel, n: int, seed: int) -> np.ndarray:
    """n i.i.d. rows via the Cholesky transform of standard normals."""
    if n < 1:
        raise ValidationError(f"need n >= 1 draws, got {n}")
    z = generator(seed).standard_normal((n, model.dim))
    return model.mean + z @ model.chol.T

def sample(model: GaussianModel, n: int, seed: int, names: Sequence[str] = ()) -> Sample:
    """Draw n rows and wrap them as a Sample (which requires n >= 2)."""
    return Sample(draw(model, n, seed), tuple(names))


def kl_gaussian(a: GaussianModel, b: GaussianModel) -> float:
    """Exact KL(a, b) between Gaussians, natural-log scale.

    KL = 0.5 * [tr(Sb^-1 Sa) + (mb-ma)' Sb^-1 (mb-ma) - p + ln det Sb - ln det Sa]
    """
    if a.dim != b.dim:
        raise ValidationError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if a is b or a == b:
        return 0.0
    m = solve_triangular(b.chol, a.chol, lower=True)
    trace = float(np.sum(m * m))
    w = solve_triangular(b.chol, b.mean - a.mean, lower=True)
    quad = float(w @ w)
    kl = 0.5 * (trace + quad - a.dim + b.log_det_cov - a.log_det_cov)
    return max(kl, 0.0)


def entropy_gaussian(model: GaussianModel) -> float:
    """Neg-selfentropy Sgg = -0.5 ln[(2 pi e)^p det cov]; the entropy is -Sgg."""
    return -0.5 * (model.dim * (LOG_2PI + 1.0) + model.log_det_cov)


def reduce_path_model(pm: PathModel) -> GaussianModel:
    """Exact implied joint Gaussian of a path model.

    Solving x = c + Bx + eps gives mean (I-B)^-1 c and covariance
    (I-B)^-1 D (I-B)^-T with D = diag(noise_sd^2).
    """
    b = pm.coefficient_matrix()
    a = np.eye(pm.p) - b
    try:
        ainv = np.linalg.solve(a, np.eye(pm.p))
    except np.linalg.LinAlgError as exc:
        raise NumericalError("(I - B) is singular") from exc
    mean = ainv @ np.asarray(pm.intercepts)
    var = np.asarray(pm.noise_sd) ** 2
    cov = (ainv * var) @ ainv.T
    return GaussianModel(mean, 0.5 * (cov + cov.T))


def simulate_path(pm: PathModel, n: int, seed: int) -> Sample:
    """Sequential simulation of the path equations in topological order."""
    if n < 2:
        raise ValidationError(f"need n >= 2 rows for a Sample, got {n}")
    rng = generator(seed)
    idx = {v: i for i, v in enumerate(pm.variables)}
    data = np.empty((n, pm.p))
    # One noise vector per variable, consumed in topological order.
    for v in pm.order:
        i = idx[v]
        x = pm.intercepts[i] + pm.noise_sd[i] * rng.standard_normal(n)
        for s, c in pm.parents(v):
            x = x + c * data[:, idx[s]]
        data[:, i] = x
    return Sample(data, pm.variables)
