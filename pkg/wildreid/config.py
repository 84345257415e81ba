"""
PipelineConfig: YAML + environment + command-line overrides.

Precedence (lowest first): dataclass defaults, wildreid/config.yaml (or a
preset), WILDREID_* environment variables, CLI flags / ``--set key=value``.
"""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from datetime import date
from pathlib import Path
from typing import Any

import yaml

from wildreid.core.errors import ConfigError
from wildreid.features.extractor import FeatureParams
from wildreid.synth.generator import SynthConfig, SynthError
from wildreid.verify.verifier import VerifyParams

ROOT = Path(__file__).parent.parent
DEFAULT_YAML = Path(__file__).parent / "config.yaml"
PRESETS_DIR = (ROOT / "presets").resolve()

SPLIT_POLICIES = ("time_proportion", "time_cutoff", "time_cutoff_yearly", "random_matched")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


@dataclass
class CatalogSource:
    kind: str = "synth"             # synth | manifest
    manifest: str = ""
    span_start: str = ""            # optional declared date span for manifests
    span_end: str = ""

    def declared_span(self) -> tuple[date, date] | None:
        if not self.span_start and not self.span_end:
            return None
        return as_date(self.span_start, "catalog.span_start"), as_date(self.span_end, "catalog.span_end")


@dataclass
class SplitSpec:
    name: str
    policy: str
    p: float = 0.5
    cutoff: str = ""
    window: str | int = "year"      # "year" | "all" | days
    template: str = ""
    seed: int | None = None         # None: the pipeline seed


@dataclass
class GraphParams:
    max_hops: int | None = None


@dataclass
class BlockingParams:
    k: int = 0                      # 0 = verify all pairs


@dataclass
class EvaluationParams:
    time_gap_orientation: str = ""
    comparisons: list[list[str]] = field(default_factory=list)   # [[split_a, split_b], ...]


_SECTIONS = {
    "catalog": CatalogSource,
    "synth": SynthConfig,
    "features": FeatureParams,
    "verify": VerifyParams,
    "graph": GraphParams,
    "blocking": BlockingParams,
    "evaluation": EvaluationParams,
}


def as_date(value: Any, key: str) -> date:
    if isinstance(value, date):
        return value
    try:
        return date.fromisoformat(str(value))
    except ValueError as exc:
        raise ConfigError(f"{key}: '{value}' is not an ISO date") from exc


def _coerce(current: Any, value: Any, key: str) -> Any:
    if isinstance(current, date):
        return as_date(value, key)
    if isinstance(current, bool):
        return bool(value)
    if isinstance(current, float) and isinstance(value, int):
        return float(value)
    if isinstance(current, list) and isinstance(value, str):
        return [value]
    if isinstance(current, tuple) and isinstance(value, list):
        return tuple(value)
    return value


def _update(obj: Any, values: dict[str, Any], section: str) -> Any:
    """Return ``obj`` with ``values`` applied; frozen dataclasses are replaced, not mutated."""
    names = {f.name for f in fields(obj)}
    unknown = sorted(set(values) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) in '{section}': {', '.join(unknown)}")
    coerced = {k: _coerce(getattr(obj, k), v, f"{section}.{k}") for k, v in values.items()}
    return replace(obj, **coerced)


def _split_spec(data: Any, index: int) -> SplitSpec:
    if not isinstance(data, dict):
        raise ConfigError(f"splits[{index}] must be a mapping")
    try:
        return SplitSpec(**data)
    except TypeError as exc:
        raise ConfigError(f"splits[{index}]: {exc}") from exc


@dataclass
class PipelineConfig:
    out_dir: str = "runs/default"
    cache_dir: str = ""             # empty: <out_dir>
    workers: int = 1                # 0: one per physical core
    seed: int = 2023
    log_level: str = "INFO"

    catalog: CatalogSource = field(default_factory=CatalogSource)
    synth: SynthConfig = field(default_factory=SynthConfig)
    splits: list[SplitSpec] = field(default_factory=list)
    features: FeatureParams = field(default_factory=FeatureParams)
    verify: VerifyParams = field(default_factory=VerifyParams)
    graph: GraphParams = field(default_factory=GraphParams)
    blocking: BlockingParams = field(default_factory=BlockingParams)
    evaluation: EvaluationParams = field(default_factory=EvaluationParams)

    description: str = ""
    source: str = ""                # YAML file the config came from

    @classmethod
    def load(cls, yaml_path: str | Path | None = None) -> "PipelineConfig":
        """Load config from YAML file + environment variable overrides."""
        cfg = cls()
        yaml_path = Path(yaml_path) if yaml_path is not None else DEFAULT_YAML
        if yaml_path.exists():
            try:
                with yaml_path.open(encoding="utf-8") as f:
                    data: dict[str, Any] = yaml.safe_load(f) or {}
            except yaml.YAMLError as exc:
                raise ConfigError(f"{yaml_path}: {exc}") from exc
            if not isinstance(data, dict):
                raise ConfigError(f"{yaml_path}: top level must be a mapping")
            cfg._apply_yaml(data)
            cfg.source = str(yaml_path)
        elif yaml_path != DEFAULT_YAML:
            raise ConfigError(f"config file not found: {yaml_path}")

        # ENV overrides (always win over YAML)
        cfg._apply_env()
        return cfg

    def _apply_yaml(self, data: dict[str, Any]) -> None:
        for key, val in data.items():
            if key in _SECTIONS:
                if not isinstance(val, dict):
                    raise ConfigError(f"'{key}' must be a mapping")
                setattr(self, key, _update(getattr(self, key), val, key))
            elif key == "splits":
                if not isinstance(val, list):
                    raise ConfigError("'splits' must be a list")
                self.splits = [_split_spec(s, i) for i, s in enumerate(val)]
            elif key in ("out_dir", "cache_dir", "workers", "seed", "log_level", "description"):
                setattr(self, key, val)
            else:
                raise ConfigError(f"unknown config key '{key}'")

    def _apply_env(self) -> None:
        env_map = {
            "WILDREID_OUTPUT_DIR": ("out_dir", str),
            "WILDREID_CACHE_DIR":  ("cache_dir", str),
            "WILDREID_WORKERS":    ("workers", int),
            "WILDREID_LOG_LEVEL":  ("log_level", str),
        }
        for env_key, (attr, cast) in env_map.items():
            val = os.environ.get(env_key, "")
            if not val:
                continue
            try:
                setattr(self, attr, cast(val))
            except ValueError as exc:
                raise ConfigError(f"{env_key}={val!r}: {exc}") from exc

    def apply_overrides(self, assignments: list[str]) -> None:
        """Apply ``dotted.key=value`` strings; values are parsed as YAML scalars."""
        for item in assignments:
            key, sep, raw = item.partition("=")
            if not sep or not key.strip():
                raise ConfigError(f"override '{item}' is not of the form key=value")
            try:
                value = yaml.safe_load(raw) if raw.strip() else ""
            except yaml.YAMLError as exc:
                raise ConfigError(f"override '{item}': {exc}") from exc
            self.set_value(key.strip(), value)

    def set_value(self, dotted: str, value: Any) -> None:
        parts = dotted.split(".")
        head = parts[0]
        if len(parts) == 1 and head in ("out_dir", "cache_dir", "workers", "seed", "log_level"):
            setattr(self, head, value)
        elif len(parts) == 2 and head in _SECTIONS:
            setattr(self, head, _update(getattr(self, head), {parts[1]: value}, head))
        elif len(parts) == 3 and head == "splits":
            spec = next((s for s in self.splits if s.name == parts[1]), None)
            if spec is None and parts[1].isdigit() and int(parts[1]) < len(self.splits):
                spec = self.splits[int(parts[1])]
            if spec is None:
                raise ConfigError(f"no split named '{parts[1]}'")
            if not hasattr(spec, parts[2]):
                raise ConfigError(f"unknown split field '{parts[2]}'")
            setattr(spec, parts[2], value)
        else:
            raise ConfigError(f"unknown config key '{dotted}'")

    # ── Derived paths ────────────────────────────────────────────────────
    @property
    def out_path(self) -> Path:
        return Path(self.out_dir)

    @property
    def cache_root(self) -> Path:
        return Path(self.cache_dir) if self.cache_dir else self.out_path

    @property
    def log_dir(self) -> Path:
        return self.out_path / "logs"

    def split_seed(self, spec: SplitSpec) -> int:
        return self.seed if spec.seed is None else int(spec.seed)

    # ── Validation ───────────────────────────────────────────────────────
    def validate(self) -> None:
        if not self.splits:
            raise ConfigError("at least one split spec is required")
        if str(self.log_level).upper() not in LOG_LEVELS:
            raise ConfigError(f"log_level must be one of {', '.join(LOG_LEVELS)}")
        if not isinstance(self.workers, int) or self.workers < 0:
            raise ConfigError("workers must be a nonnegative integer")

        if self.catalog.kind == "manifest":
            if not self.catalog.manifest:
                raise ConfigError("catalog.manifest is required when catalog.kind is 'manifest'")
            if not Path(self.catalog.manifest).is_file():
                raise ConfigError(f"manifest not found: {self.catalog.manifest}")
            self.catalog.declared_span()
        elif self.catalog.kind == "synth":
            try:
                self.synth.validate()
            except SynthError as exc:
                raise ConfigError(f"synth: {exc}") from exc
        else:
            raise ConfigError(f"catalog.kind must be 'synth' or 'manifest', got '{self.catalog.kind}'")

        seen: dict[str, SplitSpec] = {}
        for spec in self.splits:
            if not spec.name:
                raise ConfigError("every split spec needs a name")
            if spec.name in seen:
                raise ConfigError(f"duplicate split name '{spec.name}'")
            if spec.policy not in SPLIT_POLICIES:
                raise ConfigError(f"split '{spec.name}': policy must be one of {', '.join(SPLIT_POLICIES)}")
            if spec.policy == "time_proportion" and not 0.0 < float(spec.p) < 1.0:
                raise ConfigError(f"split '{spec.name}': p must lie in (0, 1)")
            if spec.policy == "time_cutoff":
                as_date(spec.cutoff, f"splits.{spec.name}.cutoff")
            if spec.policy in ("time_cutoff", "time_cutoff_yearly"):
                w = spec.window
                if not (w in ("year", "all") or (isinstance(w, int) and not isinstance(w, bool) and w > 0)):
                    raise ConfigError(f"split '{spec.name}': window must be 'year', 'all' or a positive day count")
            if spec.policy == "random_matched":
                if spec.template not in seen:
                    raise ConfigError(
                        f"split '{spec.name}': template '{spec.template}' must name an earlier split")
                if seen[spec.template].policy == "random_matched":
                    raise ConfigError(f"split '{spec.name}': template must be a time-aware split")
            seen[spec.name] = spec

        for pair in self.evaluation.comparisons:
            if len(pair) != 2 or any(n not in seen for n in pair):
                raise ConfigError(f"comparison {pair} must name two configured splits")

        if self.verify.kappa_T_max <= 1 or self.verify.kappa_T_tilde_max <= 1:
            raise ConfigError("condition-number gates must be greater than 1")
        if self.verify.top_k < 4:
            raise ConfigError("verify.top_k must be at least 4")
        if self.verify.selection not in ("greedy", "mutual"):
            raise ConfigError("verify.selection must be 'greedy' or 'mutual'")
        if self.verify.min_separation < 0:
            raise ConfigError("verify.min_separation must be nonnegative")
        if self.verify.residual_max is not None and not self.verify.residual_max > 0:
            raise ConfigError("verify.residual_max must be positive or null")
        if self.features.max_keypoints < 0:
            raise ConfigError("features.max_keypoints must be nonnegative")
        if self.graph.max_hops is not None and self.graph.max_hops < 1:
            raise ConfigError("graph.max_hops must be at least 1 or null")
        if self.blocking.k < 0:
            raise ConfigError("blocking.k must be nonnegative")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in fields(self):
            val = getattr(self, f.name)
            if f.name == "synth":
                out[f.name] = val.to_dict()
            elif is_dataclass(val):
                out[f.name] = asdict(val)
            elif f.name == "splits":
                out[f.name] = [asdict(s) for s in val]
            elif f.name not in ("source", "description"):
                out[f.name] = val
        return out

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


def list_presets() -> list[Path]:
    return sorted(PRESETS_DIR.glob("*.yaml")) if PRESETS_DIR.is_dir() else []


def preset_path(name: str) -> Path:
    path = PRESETS_DIR / (name if name.endswith(".yaml") else f"{name}.yaml")
    if not path.is_file():
        known = ", ".join(p.stem for p in list_presets()) or "none"
        raise ConfigError(f"unknown preset '{name}' (available: {known})")
    return path


# Module-level singleton
_config: PipelineConfig | None = None


def get_config() -> PipelineConfig:
    global _config
    if _config is None:
        _config = PipelineConfig.load()
    return _config


def reload_config(yaml_path: str | Path | None = None) -> PipelineConfig:
    global _config
    _config = PipelineConfig.load(yaml_path)
    return _config
