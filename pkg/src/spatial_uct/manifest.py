"""Declarative experiment manifests (YAML) and method presets.

Schema (all keys optional unless noted; unknown keys are rejected)::

    graphs:                      # required, exactly one of kh / files
      kh: {n: 25, count: 10, seed: 0, alpha: 10.0, beta: 0.001}
      files: [path/a.gml, path/b.txt]
    objective: efficiency        # or robustness, or {name: robustness, sims: 7, exact: false}
    tau: 0.1
    rho: 1.0                     # default 1 for kh graphs, 2 for files
    seeds: [0, 1, 2]             # or an integer count (seeds 0..count-1); default 10
    sims_multiplier: 20          # simulations per move = multiplier * |V|
    workers: 1
    methods:                     # required, >= 1 entry
      - UCT                      # preset name
      - baseline: MinCost
      - name: my-sg-uct
        planner:
          c_p: 0.05
          btm: true
          cp_standardization: true
          n_sims_per_move: null
          default_policy: {kind: cost_biased, beta: 25}
          reduction: {statistic: AECS, q: 40}
    output: results/run1         # directory for CSV/JSON output
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from .baselines import BASELINES, canonical_baseline, check_applicable
from .errors import ConfigError, DataError
from .mcts import COST_BIASED, DefaultPolicy, PlannerConfig, Reduction
from .objectives import EFFICIENCY, ROBUSTNESS, ObjectiveKind

# Exploration constants and biases for KH-25 graphs from the published
# hyperparameter table; ablation variants inherit the UCT values.
PRESET_CP = {
    "UCT": {EFFICIENCY: 0.1, ROBUSTNESS: 0.1},
    "SG-UCT": {EFFICIENCY: 0.05, ROBUSTNESS: 0.25},
    "SG-UCT_MINCOST": {EFFICIENCY: 0.1, ROBUSTNESS: 0.1},
}
PRESET_BETA = 25.0
ABLATION_STATISTICS = ("DEG", "INVDEG", "NC", "BE", "BECS", "AE", "AECS")


@dataclass(frozen=True)
class MethodSpec:
    name: str
    baseline: str | None = None
    planner: PlannerConfig | None = None

    @property
    def is_baseline(self) -> bool:
        return self.baseline is not None

    def describe(self) -> dict:
        if self.baseline is not None:
            return {"name": self.name, "baseline": self.baseline}
        cfg = asdict(self.planner)
        return {"name": self.name, "planner": cfg}


@dataclass(frozen=True)
class GraphSource:
    kh: dict | None = None
    files: tuple[str, ...] = ()

    @property
    def synthetic(self) -> bool:
        return self.kh is not None


@dataclass
class ExperimentManifest:
    graphs: GraphSource
    objective: ObjectiveKind
    methods: list[MethodSpec]
    tau: float = 0.1
    rho: float | None = None
    seeds: list[int] = field(default_factory=lambda: list(range(10)))
    sims_multiplier: int = 20
    workers: int = 1
    output: str | None = None
    base_dir: str = "."

    def __post_init__(self):
        if not 0 < self.tau <= 1:
            raise ConfigError(f"tau must be in (0, 1], got {self.tau}")
        if self.rho is None:
            self.rho = 1.0 if self.graphs.synthetic else 2.0
        if self.rho < 1:
            raise ConfigError(f"rho must be >= 1, got {self.rho}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if not self.methods:
            raise ConfigError("at least one method is required")
        if self.sims_multiplier < 1:
            raise ConfigError("sims_multiplier must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        names = [m.name for m in self.methods]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate method names in {names}")
        for m in self.methods:
            if m.baseline:
                check_applicable(m.baseline, self.objective.tag)

    def to_dict(self) -> dict:
        g = {"kh": dict(self.graphs.kh)} if self.graphs.kh is not None else {"files": list(self.graphs.files)}
        obj = {"name": self.objective.tag}
        if self.objective.tag == ROBUSTNESS:
            obj.update(sims=self.objective.robustness_sims, exact=self.objective.exact, adaptive=self.objective.adaptive)
        return {
            "graphs": g,
            "objective": obj,
            "tau": self.tau,
            "rho": self.rho,
            "seeds": list(self.seeds),
            "sims_multiplier": self.sims_multiplier,
            "methods": [m.describe() for m in self.methods],
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()

    def with_methods(self, methods: list[MethodSpec]) -> "ExperimentManifest":
        return ExperimentManifest(
            graphs=self.graphs,
            objective=self.objective,
            methods=methods,
            tau=self.tau,
            rho=self.rho,
            seeds=list(self.seeds),
            sims_multiplier=self.sims_multiplier,
            workers=self.workers,
            output=self.output,
            base_dir=self.base_dir,
        )


def _check_keys(d: dict, allowed: set, where: str) -> None:
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(d).__name__}")
    extra = set(d) - allowed
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {sorted(extra)}; allowed: {sorted(allowed)}")


def parse_objective(spec) -> ObjectiveKind:
    if isinstance(spec, str):
        name, opts = spec, {}
    else:
        _check_keys(spec, {"name", "sims", "exact", "adaptive"}, "objective")
        opts = dict(spec)
        name = opts.pop("name", None)
        if name is None:
            raise ConfigError("objective: 'name' is required")
    name = name.lower()
    if name not in (EFFICIENCY, ROBUSTNESS):
        raise ConfigError(f"objective: unknown name {name!r}")
    if name == EFFICIENCY:
        if opts.get("sims") or opts.get("exact") or opts.get("adaptive"):
            raise ConfigError("objective: sims/exact/adaptive only apply to robustness")
        return ObjectiveKind.efficiency()
    return ObjectiveKind(ROBUSTNESS, opts.get("sims"), bool(opts.get("exact", False)), bool(opts.get("adaptive", False)))


def parse_planner(d: dict, sims_multiplier: int) -> PlannerConfig:
    _check_keys(d, {"c_p", "btm", "cp_standardization", "n_sims_per_move", "default_policy", "reduction"}, "planner")
    dp = DefaultPolicy()
    if d.get("default_policy") is not None:
        pd = d["default_policy"]
        _check_keys(pd, {"kind", "beta"}, "planner.default_policy")
        dp = DefaultPolicy(pd.get("kind", COST_BIASED), float(pd.get("beta", 0.0)))
    red = None
    if d.get("reduction") is not None:
        rd = d["reduction"]
        _check_keys(rd, {"statistic", "q"}, "planner.reduction")
        red = Reduction(rd["statistic"], float(rd["q"]))
    return PlannerConfig(
        c_p=float(d.get("c_p", 0.1)),
        n_sims_per_move=d.get("n_sims_per_move"),
        sims_multiplier=sims_multiplier,
        default_policy=dp,
        reduction=red,
        btm=bool(d.get("btm", False)),
        cp_standardization=bool(d.get("cp_standardization", True)),
    )


_VARIANT = re.compile(r"^SG-UCT_(RAND|DEG|INVDEG|ID|NC|BE|BECS|AE|AECS)-(\d+(?:\.\d+)?)$", re.IGNORECASE)


def preset(name: str, objective: str, sims_multiplier: int = 20, **overrides) -> MethodSpec:
    """Named method configurations.

    ``UCT``, ``SG-UCT``, ``SG-UCT_BTM``, ``SG-UCT_MINCOST``, ``SG-UCT_<STAT>-<q>``
    and every baseline name. ``overrides`` replace PlannerConfig fields.
    """
    key = name.upper()
    try:
        return MethodSpec(name, baseline=canonical_baseline(name))
    except ConfigError:
        pass
    uct_cp = PRESET_CP["UCT"][objective]
    if key == "UCT":
        cfg = PlannerConfig(c_p=uct_cp, sims_multiplier=sims_multiplier)
    elif key == "SG-UCT":
        cfg = PlannerConfig.sg_uct(c_p=PRESET_CP["SG-UCT"][objective], beta=PRESET_BETA, sims_multiplier=sims_multiplier)
    elif key == "SG-UCT_BTM":
        cfg = PlannerConfig(c_p=uct_cp, btm=True, sims_multiplier=sims_multiplier)
    elif key == "SG-UCT_MINCOST":
        cfg = PlannerConfig(
            c_p=PRESET_CP["SG-UCT_MINCOST"][objective],
            default_policy=DefaultPolicy.cost_biased(PRESET_BETA),
            sims_multiplier=sims_multiplier,
        )
    else:
        m = _VARIANT.match(name)
        if not m:
            raise ConfigError(f"unknown method preset {name!r}")
        cfg = PlannerConfig(c_p=uct_cp, reduction=Reduction(m.group(1), float(m.group(2))), sims_multiplier=sims_multiplier)
    if overrides:
        fields = asdict(cfg)
        fields.update(overrides)
        fields["default_policy"] = overrides.get("default_policy", cfg.default_policy)
        fields["reduction"] = overrides.get("reduction", cfg.reduction)
        cfg = PlannerConfig(**fields)
    return MethodSpec(name, planner=cfg)


def ablation_methods(objective: str, sims_multiplier: int = 20) -> list[MethodSpec]:
    """The 13-row component ablation grid: UCT and 12 single-component variants."""
    names = ["UCT", "SG-UCT_BTM", "SG-UCT_MINCOST", "SG-UCT_RAND-80", "SG-UCT_RAND-60", "SG-UCT_RAND-40"]
    names += [f"SG-UCT_{s}-40" for s in ABLATION_STATISTICS]
    return [preset(n, objective, sims_multiplier) for n in names]


def parse_method(entry, objective: str, sims_multiplier: int) -> MethodSpec:
    if isinstance(entry, str):
        return preset(entry, objective, sims_multiplier)
    _check_keys(entry, {"name", "baseline", "planner", "preset"}, "methods[]")
    if sum(k in entry for k in ("baseline", "planner", "preset")) != 1:
        raise ConfigError("methods[]: give exactly one of 'baseline', 'planner', 'preset'")
    if "baseline" in entry:
        b = canonical_baseline(entry["baseline"])
        return MethodSpec(entry.get("name", b), baseline=b)
    if "preset" in entry:
        spec = preset(entry["preset"], objective, sims_multiplier)
        return MethodSpec(entry.get("name", spec.name), spec.baseline, spec.planner)
    if "name" not in entry:
        raise ConfigError("methods[]: planner entries need a 'name'")
    return MethodSpec(entry["name"], planner=parse_planner(entry["planner"] or {}, sims_multiplier))


def manifest_from_dict(d: dict, base_dir: str = ".") -> ExperimentManifest:
    _check_keys(d, {"graphs", "objective", "tau", "rho", "seeds", "sims_multiplier", "workers", "methods", "output"}, "manifest")
    if "graphs" not in d or "methods" not in d:
        raise ConfigError("manifest: 'graphs' and 'methods' are required")
    g = d["graphs"]
    _check_keys(g, {"kh", "files"}, "graphs")
    if ("kh" in g) == ("files" in g):
        raise ConfigError("graphs: give exactly one of 'kh' or 'files'")
    if "kh" in g:
        _check_keys(g["kh"], {"n", "count", "seed", "alpha", "beta", "max_rejects"}, "graphs.kh")
        if "n" not in g["kh"]:
            raise ConfigError("graphs.kh: 'n' is required")
        kh = {"count": 10, "seed": 0, **g["kh"]}
        source = GraphSource(kh=kh)
    else:
        files = g["files"]
        if isinstance(files, str):
            files = [files]
        if not files:
            raise ConfigError("graphs.files: at least one path is required")
        source = GraphSource(files=tuple(str(f) for f in files))
    objective = parse_objective(d.get("objective", EFFICIENCY))
    seeds = d.get("seeds", 10)
    if isinstance(seeds, int):
        seeds = list(range(seeds))
    sims_multiplier = int(d.get("sims_multiplier", 20))
    methods = [parse_method(m, objective.tag, sims_multiplier) for m in (d["methods"] or [])]
    return ExperimentManifest(
        graphs=source,
        objective=objective,
        methods=methods,
        tau=float(d.get("tau", 0.1)),
        rho=None if d.get("rho") is None else float(d["rho"]),
        seeds=[int(s) for s in seeds],
        sims_multiplier=sims_multiplier,
        workers=int(d.get("workers", 1)),
        output=d.get("output"),
        base_dir=base_dir,
    )


def load_manifest(path) -> ExperimentManifest:
    p = Path(path)
    try:
        data = yaml.safe_load(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read manifest {p}: {exc}") from exc
    except yaml.YAMLError as exc:
        line = getattr(getattr(exc, "problem_mark", None), "line", None)
        raise DataError(f"manifest {p} is not valid YAML: {exc}", None if line is None else line + 1) from exc
    if not isinstance(data, dict):
        raise ConfigError(f"manifest {p}: top level must be a mapping")
    return manifest_from_dict(data, base_dir=str(p.parent))


__all__ = [
    "BASELINES",
    "ExperimentManifest",
    "GraphSource",
    "MethodSpec",
    "ablation_methods",
    "load_manifest",
    "manifest_from_dict",
    "preset",
]
