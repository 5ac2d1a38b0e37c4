"""Problem configuration: one JSON document describing domain, density,
cost, iteration settings and experiment parameters."""

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .energy import cost_from_spec
from .errors import ConfigError, InadmissibleCost, InvalidDomain
from .geometry import Domain, GeneratorSet, validate_domain
from .lloyd import LloydConfig
from .measures import (
    AnalyticDensity,
    ConstantDensity,
    load_raster,
    total_mass,
)

__all__ = ["ProblemConfig", "PRESETS", "load_config", "config_from_dict"]

PRESETS = {
    # block-copolymer style: perimeter-like cost on the unit square
    "copolymer": {
        "domain": [[0, 0], [1, 0], [1, 1], [0, 1]],
        "density": {"kind": "constant", "value": 1.0},
        "cost": {"f": "sqrt", "lambda": 0.005},
        "lloyd": {"mode": "generalized"},
        "n_generators": 40,
        "multistart": {"k": 50},
    },
    # facility location: pay a fixed opening cost per site
    "location": {
        "domain": [[0, 0], [1, 0], [1, 1], [0, 1]],
        "density": {"kind": "constant", "value": 1.0},
        "cost": {"f": "affine", "a": 0.0, "b": 0.002},
        "lloyd": {"mode": "generalized"},
        "n_generators": 30,
        "multistart": {"k": 50},
    },
    # classical Lloyd: zero cost, weights pinned at 0
    "cvt": {
        "domain": [[0, 0], [1, 0], [1, 1], [0, 1]],
        "density": {"kind": "constant", "value": 1.0},
        "cost": {"f": "zero"},
        "lloyd": {"mode": "cvt"},
        "n_generators": 16,
        "multistart": {"k": 1},
    },
}

_ANALYTIC_DENSITIES = {
    "linear_x": lambda x, y: x,
    "linear_y": lambda x, y: y,
    "gaussian": lambda x, y: np.exp(-8.0 * ((x - 0.5) ** 2 + (y - 0.5) ** 2)),
}


@dataclass(frozen=True)
class ProblemConfig:
    domain: Domain
    density: object
    cost: object
    lloyd: LloydConfig
    n_generators: int = 20
    generators: GeneratorSet = None  # explicit initial/plot state, optional
    multistart_k: int = 1
    round_length: int = 50
    survival: float = 0.5
    weight_scale: float = 0.0
    lambdas: tuple = ()  # for sweeps
    n_values: tuple = ()  # for rate studies
    raw: dict = field(default_factory=dict)

    def with_seed(self, seed):
        return replace(self, lloyd=replace(self.lloyd, seed=seed))


def _make_density(spec):
    kind = spec.get("kind")
    if kind == "constant":
        return ConstantDensity(float(spec.get("value", 1.0)))
    if kind == "analytic":
        name = spec.get("name")
        if name not in _ANALYTIC_DENSITIES:
            raise ConfigError(f"unknown analytic density {name!r}")
        return AnalyticDensity(_ANALYTIC_DENSITIES[name], name=name)
    if kind == "raster":
        return load_raster(spec["path"])
    raise ConfigError(f"unknown density kind {kind!r}")


def config_from_dict(doc):
    """Validate and resolve a config dict (possibly naming a preset)."""
    if "preset" in doc:
        name = doc["preset"]
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}")
        merged = dict(PRESETS[name])
        merged.update({k: v for k, v in doc.items() if k != "preset"})
        doc = merged
    try:
        dom_vertices = np.asarray(doc["domain"], dtype=float)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad or missing domain: {exc}") from None
    report = validate_domain(dom_vertices)
    if not report.valid:
        raise ConfigError("invalid domain: " + "; ".join(report.problems))
    try:
        domain = Domain(dom_vertices)
        density = _make_density(doc.get("density", {"kind": "constant"}))
        mtot = total_mass(domain, density)
        cost = cost_from_spec(doc.get("cost", {"f": "zero"}), mass_scale=mtot)
    except (InvalidDomain, InadmissibleCost, FileNotFoundError) as exc:
        raise ConfigError(str(exc)) from None
    lloyd_doc = dict(doc.get("lloyd", {}))
    try:
        lloyd = LloydConfig(**lloyd_doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad lloyd settings: {exc}") from None
    gens = None
    if "generators" in doc:
        g = doc["generators"]
        pos = np.asarray(g["positions"], dtype=float)
        wts = np.asarray(g.get("weights", np.zeros(len(pos))), dtype=float)
        gens = GeneratorSet(pos, wts)
        if not np.all(domain.contains(pos)):
            raise ConfigError("explicit generators must lie inside the domain")
    ms = doc.get("multistart", {})
    return ProblemConfig(
        domain=domain,
        density=density,
        cost=cost,
        lloyd=lloyd,
        n_generators=int(doc.get("n_generators", 20)),
        generators=gens,
        multistart_k=int(ms.get("k", 1)),
        round_length=int(ms.get("round_length", 50)),
        survival=float(ms.get("survival", 0.5)),
        weight_scale=float(doc.get("weight_scale", 0.0)),
        lambdas=tuple(doc.get("lambdas", ())),
        n_values=tuple(doc.get("n_values", ())),
        raw=doc,
    )


def load_config(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return config_from_dict(doc)
