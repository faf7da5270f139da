"""Run configuration: strict TOML parsing, serialization, and defaults.

The file is a single TOML document (key-value pairs with nested tables).
Unknown keys are fatal, every seed must be explicit, and parsing returns a
RunConfig with all defaults materialized.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Any, Mapping

from .distributions import GaussianModel, PathModel
from .exceptions import ValidationError
from .model_fit import CandidateSpec

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass(frozen=True)
class Seeds:
    data: int
    nmds: int
    projection: int


@dataclass(frozen=True)
class NmdsSettings:
    dim: int = 2
    restarts: int = 8
    max_iter: int = 500
    tol: float = 1e-10


@dataclass(frozen=True)
class EntropySettings:
    estimator: str = "kl"  # "kl" or "weighted"
    k: int = 0  # 0 = estimator default

    def __post_init__(self):
        if self.estimator not in ("weighted", "kl"):
            raise ValidationError(
                f"entropy.estimator must be 'weighted' or 'kl', got {self.estimator!r}"
            )
        if self.k < 0:
            raise ValidationError("entropy.k must be >= 0 (0 means default)")


@dataclass(frozen=True)
class RunConfig:
    generating: PathModel | GaussianModel
    candidates: tuple[CandidateSpec, ...]
    n: int
    seeds: Seeds
    nmds: NmdsSettings = field(default_factory=NmdsSettings)
    entropy: EntropySettings = field(default_factory=EntropySettings)
    out_dir: str = "out"

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError(f"n must be >= 2, got {self.n}")
        names = [c.name for c in self.candidates]
        if len(set(names)) != len(names):
            raise ValidationError("candidate names must be distinct")
        need = self.nmds.dim + 2
        if len(self.candidates) < need:
            raise ValidationError(
                f"need at least dim + 2 = {need} candidates, got {len(self.candidates)}"
            )
        variables = set(self.variables)
        for c in self.candidates:
            bad = sorted({v for e in c.edges for v in e} - variables)
            if bad:
                raise ValidationError(
                    f"candidate '{c.name}' references unknown variables {bad}"
                )

    @property
    def variables(self) -> tuple[str, ...]:
        if isinstance(self.generating, PathModel):
            return self.generating.variables
        return tuple(f"x{i + 1}" for i in range(self.generating.dim))


def parse_config(path) -> RunConfig:
    """Read and validate a TOML run configuration."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ValidationError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"config file does not parse: {exc}") from exc
    return config_from_dict(raw)


def config_from_dict(raw: Mapping[str, Any]) -> RunConfig:
    _check_keys(raw, {"n", "out_dir", "seeds", "generating", "nmds", "entropy",
                      "candidates"}, "")
    for key in ("n", "seeds", "generating", "candidates"):
        if key not in raw:
            raise ValidationError(f"config is missing required key '{key}'")

    seeds_raw = _table(raw, "seeds")
    _check_keys(seeds_raw, {"data", "nmds", "projection"}, "seeds")
    try:
        seeds = Seeds(*(int(seeds_raw[k]) for k in ("data", "nmds", "projection")))
    except KeyError as exc:
        raise ValidationError(f"seeds.{exc.args[0]} is required") from exc

    nmds_raw = _table(raw, "nmds") if "nmds" in raw else {}
    _check_keys(nmds_raw, {"dim", "restarts", "max_iter", "tol"}, "nmds")
    nmds = NmdsSettings(
        dim=int(nmds_raw.get("dim", 2)),
        restarts=int(nmds_raw.get("restarts", 8)),
        max_iter=int(nmds_raw.get("max_iter", 500)),
        tol=float(nmds_raw.get("tol", 1e-10)),
    )

    ent_raw = _table(raw, "entropy") if "entropy" in raw else {}
    _check_keys(ent_raw, {"estimator", "k"}, "entropy")
    entropy = EntropySettings(
        estimator=str(ent_raw.get("estimator", "weighted")),
        k=int(ent_raw.get("k", 0)),
    )

    generating = _parse_generating(_table(raw, "generating"))
    candidates = _parse_candidates(raw["candidates"])

    return RunConfig(
        generating=generating,
        candidates=candidates,
        n=int(raw["n"]),
        seeds=seeds,
        nmds=nmds,
        entropy=entropy,
        out_dir=str(raw.get("out_dir", "out")),
    )


def _parse_generating(table: Mapping[str, Any]) -> PathModel | GaussianModel:
    kind = table.get("type")
    if kind == "path":
        _check_keys(table, {"type", "variables", "edges", "noise_sd", "intercepts"},
                    "generating")
        edges = [_edge3(e) for e in table.get("edges", [])]
        return PathModel(
            tuple(str(v) for v in table.get("variables", ())),
            tuple(edges),
            table.get("noise_sd", 1.0),
            table.get("intercepts", 0.0),
        )
    if kind == "gaussian":
        _check_keys(table, {"type", "variables", "mean", "cov"}, "generating")
        if "mean" not in table or "cov" not in table:
            raise ValidationError("generating gaussian needs 'mean' and 'cov'")
        return GaussianModel(table["mean"], table["cov"])
    raise ValidationError(
        f"generating.type must be 'path' or 'gaussian', got {kind!r}"
    )


def _parse_candidates(items) -> tuple[CandidateSpec, ...]:
    if not isinstance(items, list):
        raise ValidationError("candidates must be an array of tables")
    out = []
    for i, item in enumerate(items):
        if not isinstance(item, Mapping):
            raise ValidationError(f"candidates[{i}] must be a table")
        _check_keys(item, {"name", "edges"}, f"candidates[{i}]")
        if "name" not in item:
            raise ValidationError(f"candidates[{i}] is missing 'name'")
        out.append(CandidateSpec(str(item["name"]),
                                 tuple(_edge2(e) for e in item.get("edges", []))))
    return tuple(out)


def _edge3(e) -> tuple[str, str, float]:
    if not isinstance(e, (list, tuple)) or len(e) != 3:
        raise ValidationError(f"path edge must be [source, target, coefficient], got {e!r}")
    return str(e[0]), str(e[1]), float(e[2])


def _edge2(e) -> tuple[str, str]:
    if not isinstance(e, (list, tuple)) or len(e) != 2:
        raise ValidationError(f"candidate edge must be [source, target], got {e!r}")
    return str(e[0]), str(e[1])


def _table(raw: Mapping[str, Any], key: str) -> Mapping[str, Any]:
    value = raw.get(key)
    if not isinstance(value, Mapping):
        raise ValidationError(f"'{key}' must be a table")
    return value


def _check_keys(table: Mapping[str, Any], allowed: set[str], prefix: str):
    unknown = sorted(set(table) - allowed)
    if unknown:
        dotted = f"{prefix}.{unknown[0]}" if prefix else unknown[0]
        raise ValidationError(f"unknown config key '{dotted}'")


def format_config(cfg: RunConfig) -> str:
    """Serialize a RunConfig back to TOML; parse(format(cfg)) == cfg."""
    lines: list[str] = []
    lines.append(f"n = {cfg.n}")
    lines.append(f"out_dir = {_toml_str(cfg.out_dir)}")
    lines.append("")
    lines.append("[seeds]")
    lines.append(f"data = {cfg.seeds.data}")
    lines.append(f"nmds = {cfg.seeds.nmds}")
    lines.append(f"projection = {cfg.seeds.projection}")
    lines.append("")
    lines.append("[generating]")
    g = cfg.generating
    if isinstance(g, PathModel):
        lines.append('type = "path"')
        lines.append(f"variables = {_toml_list([_toml_str(v) for v in g.variables])}")
        edges = [
            f"[{_toml_str(s)}, {_toml_str(t)}, {_toml_float(c)}]" for s, t, c in g.edges
        ]
        lines.append(f"edges = {_toml_list(edges)}")
        lines.append(f"noise_sd = {_per_var(g.variables, g.noise_sd)}")
        lines.append(f"intercepts = {_per_var(g.variables, g.intercepts)}")
    else:
        lines.append('type = "gaussian"')
        lines.append(f"mean = {_toml_list([_toml_float(x) for x in g.mean])}")
        rows = [_toml_list([_toml_float(x) for x in row]) for row in g.cov]
        lines.append(f"cov = {_toml_list(rows)}")
    lines.append("")
    lines.append("[nmds]")
    lines.append(f"dim = {cfg.nmds.dim}")
    lines.append(f"restarts = {cfg.nmds.restarts}")
    lines.append(f"max_iter = {cfg.nmds.max_iter}")
    lines.append(f"tol = {_toml_float(cfg.nmds.tol)}")
    lines.append("")
    lines.append("[entropy]")
    lines.append(f"estimator = {_toml_str(cfg.entropy.estimator)}")
    lines.append(f"k = {cfg.entropy.k}")
    for cand in cfg.candidates:
        lines.append("")
        lines.append("[[candidates]]")
        lines.append(f"name = {_toml_str(cand.name)}")
        edges = [f"[{_toml_str(s)}, {_toml_str(t)}]" for s, t in cand.edges]
        lines.append(f"edges = {_toml_list(edges)}")
    return "\n".join(lines) + "\n"


def _toml_str(s: str) -> str:
    import json

    return json.dumps(str(s))


def _toml_float(x: float) -> str:
    r = repr(float(x))
    return r


def _toml_list(items) -> str:
    return "[" + ", ".join(items) + "]"


def _per_var(variables, values) -> str:
    vals = tuple(values)
    if len(set(vals)) == 1:
        return _toml_float(vals[0])
    inner = ", ".join(f"{v} = {_toml_float(x)}" for v, x in zip(variables, vals))
    return "{" + inner + "}"


# ---------------------------------------------------------------------------
# Shipped configurations
# ---------------------------------------------------------------------------

_VARIABLES = ("position", "age", "severity", "cover", "hetero", "richness")

_TRUE_EDGES = (
    ("position", "age", 0.6),
    ("age", "severity", 0.55),
    ("severity", "cover", -0.5),
    ("position", "hetero", 0.45),
    ("hetero", "richness", 0.35),
    ("cover", "richness", -0.4),
)

# Extra forward edges (with respect to the variable order) that the true
# process does not use; prefixes of this list build the overfitted side.
_SPURIOUS_EDGES = (
    ("position", "severity"),
    ("position", "cover"),
    ("age", "cover"),
    ("age", "hetero"),
    ("severity", "hetero"),
    ("age", "richness"),
    ("severity", "richness"),
    ("position", "richness"),
    ("cover", "hetero"),
)

# Wrong-structure variants: one true edge replaced by a plausible substitute.
_SWAPS = (
    (("cover", "richness"), ("age", "richness")),
    (("hetero", "richness"), ("position", "richness")),
    (("age", "severity"), ("position", "severity")),
    (("severity", "cover"), ("position", "cover")),
)


def default_generating_process() -> PathModel:
    return PathModel(_VARIABLES, _TRUE_EDGES, 1.0, 0.0)


def default_candidates() -> tuple[CandidateSpec, ...]:
    """20 candidates: an underfit-to-overfit lattice around the true structure.

    m01..m07 are nested prefixes of the true edges (m07 is the truth),
    m08..m16 add spurious edges on top, m17..m20 swap one true edge for a
    wrong one.
    """
    true2 = tuple((s, t) for s, t, _ in _TRUE_EDGES)
    specs = []
    for i in range(len(true2) + 1):
        specs.append(CandidateSpec(f"m{i + 1:02d}", true2[:i]))
    for j in range(1, len(_SPURIOUS_EDGES) + 1):
        specs.append(CandidateSpec(f"m{len(true2) + 1 + j:02d}",
                                   true2 + _SPURIOUS_EDGES[:j]))
    base = len(true2) + 1 + len(_SPURIOUS_EDGES)
    for j, (drop, add) in enumerate(_SWAPS):
        edges = tuple(e for e in true2 if e != drop) + (add,)
        specs.append(CandidateSpec(f"m{base + 1 + j:02d}", edges))
    return tuple(specs)


def consistency_candidates() -> tuple[CandidateSpec, ...]:
    """The default set minus strict supersets of the true structure.

    With supersets present, which fitted model sits closest to the
    generating process is an O(1/n) coin flip; without them the true
    structure wins by a fixed margin, which is what a consistency check
    needs.
    """
    supersets = {f"m{i:02d}" for i in range(8, 17)}
    return tuple(c for c in default_candidates() if c.name not in supersets)


def default_run_config() -> RunConfig:
    return RunConfig(
        generating=default_generating_process(),
        candidates=default_candidates(),
        n=450,
        seeds=Seeds(data=101, nmds=202, projection=303),
        nmds=NmdsSettings(),
        entropy=EntropySettings(),
        out_dir="out",
    )


def consistency_run_config(n: int = 100_000) -> RunConfig:
    from dataclasses import replace

    return replace(default_run_config(), candidates=consistency_candidates(), n=n)
