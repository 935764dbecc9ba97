"""Experiment configuration: strict line-oriented parser and canonical printer.

Format: ``[section]`` headers, ``key = value`` lines, ``#`` comment lines,
blank lines.  Unknown sections or keys are errors (nothing is silently
ignored), duplicate keys are errors, and a seed is mandatory so no run is
ever silently nondeterministic.  ``canonical_text`` renders the effective
configuration (defaults filled) in a fixed section/key order; feeding that
text back through the parser reproduces it byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import ParseError
from .families import SPEC_FAMILIES
from .functionals import FUNCTIONAL_CATALOG
from .sde import MODEL_REGISTRY

__all__ = ["ExperimentConfig", "parse_config", "EXPERIMENT_KINDS", "DEFAULTS"]

EXPERIMENT_KINDS = ("functional-gamma", "sde-gamma", "oracle-compare", "density-scan")

DEFAULTS = {
    "horizon": 1.0,
    "paths": 100,
    "fd_step": 1e-5,
    "rel_tol": 1e-6,
    "out": "out",
    "figures": True,
    "workers": 1,
}

_EXPERIMENT_KEYS = (
    "kind",
    "horizon",
    "paths",
    "seed",
    "fd_step",
    "rel_tol",
    "out",
    "figures",
    "workers",
)
_SPEC_KEYS = (
    "family",
    "rate",
    "mark_low",
    "mark_high",
    "mark_gap",
    "compensated",
    "beta",
    "cut",
    "dim",
    "symmetric",
    "beta2",
    "cut2",
)
_FUNCTIONAL_KEYS = ("name", "phi", "phi_a", "phi_b", "aux_drift", "z1", "z2", "z3")
_MODEL_KEYS = (
    "name",
    "a",
    "x0",
    "a11",
    "a12",
    "a21",
    "a22",
    "x0_1",
    "x0_2",
    "z1",
    "z2",
    "z3",
)

_SECTIONS = {
    "experiment": _EXPERIMENT_KEYS,
    "spec": _SPEC_KEYS,
    "functional": _FUNCTIONAL_KEYS,
    "model": _MODEL_KEYS,
}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seed: int
    spec_family: str
    spec_params: dict = field(default_factory=dict)
    functional: str | None = None
    functional_params: dict = field(default_factory=dict)
    model: str | None = None
    model_params: dict = field(default_factory=dict)
    horizon: float = DEFAULTS["horizon"]
    paths: int = DEFAULTS["paths"]
    fd_step: float = DEFAULTS["fd_step"]
    rel_tol: float = DEFAULTS["rel_tol"]
    out: str = DEFAULTS["out"]
    figures: bool = DEFAULTS["figures"]
    workers: int = DEFAULTS["workers"]

    def override(self, **kwargs) -> "ExperimentConfig":
        updates = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **updates) if updates else self

    def canonical_text(self) -> str:
        def render(v) -> str:
            if isinstance(v, bool):
                return "true" if v else "false"
            if isinstance(v, float):
                return f"{v:.17g}"
            return str(v)

        lines = ["[experiment]"]
        lines.append(f"kind = {self.kind}")
        lines.append(f"horizon = {render(self.horizon)}")
        lines.append(f"paths = {self.paths}")
        lines.append(f"seed = {self.seed}")
        lines.append(f"fd_step = {render(self.fd_step)}")
        lines.append(f"rel_tol = {render(self.rel_tol)}")
        lines.append(f"out = {self.out}")
        lines.append(f"figures = {render(self.figures)}")
        lines.append(f"workers = {self.workers}")
        lines.append("")
        lines.append("[spec]")
        lines.append(f"family = {self.spec_family}")
        for key in _SPEC_KEYS[1:]:
            if key in self.spec_params:
                lines.append(f"{key} = {render(self.spec_params[key])}")
        if self.functional is not None:
            lines.append("")
            lines.append("[functional]")
            lines.append(f"name = {self.functional}")
            for key in _FUNCTIONAL_KEYS[1:]:
                if key in self.functional_params:
                    lines.append(f"{key} = {render(self.functional_params[key])}")
        if self.model is not None:
            lines.append("")
            lines.append("[model]")
            lines.append(f"name = {self.model}")
            for key in _MODEL_KEYS[1:]:
                if key in self.model_params:
                    lines.append(f"{key} = {render(self.model_params[key])}")
        return "\n".join(lines) + "\n"


def _typed(raw: str):
    text = raw.strip()
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def _raw_parse(text: str) -> dict:
    """Sections -> {key: (value, lineno)} with strict syntax checking."""
    sections: dict = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError("malformed section header", lineno)
            name = line[1:-1].strip()
            if name not in _SECTIONS:
                raise ParseError(
                    f"unknown section '{name}' (expected one of {sorted(_SECTIONS)})", lineno
                )
            if name in sections:
                raise ParseError(f"duplicate section '{name}'", lineno)
            sections[name] = {}
            current = name
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", lineno)
        if current is None:
            raise ParseError("key outside any [section]", lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ParseError("empty key", lineno)
        if key not in _SECTIONS[current]:
            raise ParseError(f"unknown key '{key}' in section [{current}]", lineno)
        if key in sections[current]:
            raise ParseError(f"duplicate key '{key}' in section [{current}]", lineno)
        if value == "":
            raise ParseError(f"empty value for key '{key}'", lineno)
        sections[current][key] = (_typed(value), lineno)
    return sections


def _values(section: dict) -> dict:
    return {k: v for k, (v, _) in section.items()}


def _require_number(params: dict, key: str, kinds=(int, float)) -> None:
    if key in params and not isinstance(params[key], kinds):
        raise ParseError(f"field '{key}' must be numeric, got '{params[key]}'")


def parse_config(text: str) -> ExperimentConfig:
    """Parse and semantically validate an experiment configuration."""
    sections = _raw_parse(text)
    if "experiment" not in sections:
        raise ParseError("missing [experiment] section")
    if "spec" not in sections:
        raise ParseError("missing [spec] section")
    exp = _values(sections["experiment"])
    if "kind" not in exp:
        raise ParseError("field 'kind' is required in [experiment]")
    if exp["kind"] not in EXPERIMENT_KINDS:
        raise ParseError(f"unknown experiment kind '{exp['kind']}' (use {EXPERIMENT_KINDS})")
    if "seed" not in exp:
        raise ParseError("seed required: every experiment must fix its master seed")
    if not isinstance(exp["seed"], int) or isinstance(exp["seed"], bool):
        raise ParseError(f"field 'seed' must be an integer, got '{exp['seed']}'")
    spec = _values(sections["spec"])
    if "family" not in spec:
        raise ParseError("field 'family' is required in [spec]")
    family = spec.pop("family")
    if family not in SPEC_FAMILIES:
        raise ParseError(f"unknown spec family '{family}' (use {sorted(SPEC_FAMILIES)})")
    allowed = SPEC_FAMILIES[family][1]
    unknown = set(spec) - allowed
    if unknown:
        raise ParseError(
            f"spec family '{family}' does not accept field(s) {sorted(unknown)}"
        )

    functional = None
    functional_params: dict = {}
    if "functional" in sections:
        fun = _values(sections["functional"])
        if "name" not in fun:
            raise ParseError("field 'name' is required in [functional]")
        functional = fun.pop("name")
        if functional not in FUNCTIONAL_CATALOG:
            raise ParseError(
                f"unknown functional '{functional}' (use {sorted(FUNCTIONAL_CATALOG)})"
            )
        extra = set(fun) - FUNCTIONAL_CATALOG[functional][2]
        if extra:
            raise ParseError(
                f"functional '{functional}' does not accept field(s) {sorted(extra)}"
            )
        functional_params = fun

    model = None
    model_params: dict = {}
    if "model" in sections:
        mod = _values(sections["model"])
        if "name" not in mod:
            raise ParseError("field 'name' is required in [model]")
        model = mod.pop("name")
        if model not in MODEL_REGISTRY:
            raise ParseError(f"unknown model '{model}' (use {sorted(MODEL_REGISTRY)})")
        extra = set(mod) - MODEL_REGISTRY[model][2]
        if extra:
            raise ParseError(f"model '{model}' does not accept field(s) {sorted(extra)}")
        model_params = mod

    cfg = ExperimentConfig(
        kind=exp["kind"],
        seed=int(exp["seed"]),
        spec_family=family,
        spec_params=spec,
        functional=functional,
        functional_params=functional_params,
        model=model,
        model_params=model_params,
        horizon=float(exp.get("horizon", DEFAULTS["horizon"])),
        paths=int(exp.get("paths", DEFAULTS["paths"])),
        fd_step=float(exp.get("fd_step", DEFAULTS["fd_step"])),
        rel_tol=float(exp.get("rel_tol", DEFAULTS["rel_tol"])),
        out=str(exp.get("out", DEFAULTS["out"])),
        figures=bool(exp.get("figures", DEFAULTS["figures"])),
        workers=int(exp.get("workers", DEFAULTS["workers"])),
    )
    validate_semantics(cfg)
    return cfg


def validate_semantics(cfg: ExperimentConfig) -> None:
    """Cross-field checks; all failures are config errors naming the field."""
    if cfg.paths < 1:
        raise ParseError(f"field 'paths' must be >= 1, got {cfg.paths}")
    if cfg.horizon <= 0:
        raise ParseError(f"field 'horizon' must be positive, got {cfg.horizon}")
    if cfg.fd_step <= 0:
        raise ParseError(f"field 'fd_step' must be positive, got {cfg.fd_step}")
    if cfg.rel_tol <= 0:
        raise ParseError(f"field 'rel_tol' must be positive, got {cfg.rel_tol}")
    if cfg.workers < 1:
        raise ParseError(f"field 'workers' must be >= 1, got {cfg.workers}")
    for key in ("beta", "beta2"):
        if key in cfg.spec_params:
            _require_number(cfg.spec_params, key)
            beta = float(cfg.spec_params[key])
            if not (0.0 < beta < 2.0):
                raise ParseError(f"field '{key}' must lie in (0, 2), got {beta}")
    for key in ("cut", "cut2"):
        if key in cfg.spec_params:
            _require_number(cfg.spec_params, key)
            cut = float(cfg.spec_params[key])
            if not (0.0 < cut < 1.0):
                raise ParseError(f"field '{key}' must lie in (0, 1), got {cut}")
    if "rate" in cfg.spec_params:
        _require_number(cfg.spec_params, "rate")
        if float(cfg.spec_params["rate"]) < 0:
            raise ParseError("field 'rate' must be nonnegative")
    if cfg.kind in ("functional-gamma", "density-scan") and cfg.functional is None:
        raise ParseError(f"experiment kind '{cfg.kind}' needs a [functional] section")
    if cfg.kind == "sde-gamma" and cfg.model is None:
        raise ParseError("experiment kind 'sde-gamma' needs a [model] section")
    if cfg.kind == "oracle-compare" and (cfg.functional is None) == (cfg.model is None):
        raise ParseError(
            "experiment kind 'oracle-compare' needs exactly one of [functional] or [model]"
        )
    spec_dim = 2 if int(cfg.spec_params.get("dim", 1)) == 2 else 1
    if cfg.functional is not None:
        needed = FUNCTIONAL_CATALOG[cfg.functional][1]
        if needed != spec_dim:
            raise ParseError(
                f"functional '{cfg.functional}' needs mark dimension {needed}, "
                f"spec family provides {spec_dim} (field 'dim')"
            )
    if cfg.model is not None:
        needed = MODEL_REGISTRY[cfg.model][1]
        if needed != spec_dim:
            raise ParseError(
                f"model '{cfg.model}' needs mark dimension {needed}, "
                f"spec family provides {spec_dim} (field 'dim')"
            )
