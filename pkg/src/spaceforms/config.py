"""Experiment configuration: flat dotted-key text files, strictly validated.

Config files hold one `section.key = value` pair per line, with `#` comments
and blank lines ignored.  Unknown keys are rejected rather than silently
dropped, and every tolerance must be positive.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .errors import ConfigError

_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


@dataclass
class ExperimentConfig:
    """All knobs of one experiment run."""

    manifold_n: int = 2
    manifold_p: int = 2
    metric_kind: str = "round"
    metric_alpha: float = 0.0
    sampling_grid: int = 64
    search_seeds: int = 20
    search_rng_seed: int = 0
    search_N: int = 256
    search_tol_geo: float = 1e-8
    search_max_iters: int = 5000
    search_class_power: int = 1
    analysis_poincare: bool = True
    analysis_index_oracle: bool = True
    analysis_simplicity: bool = True
    bounds_delta: float | None = None
    bounds_rho: float | None = None
    output_dir: str = "."
    output_format: str = "json"

    def validate(self) -> "ExperimentConfig":
        if self.manifold_n < 2:
            raise ConfigError("manifold.n must be >= 2")
        if self.manifold_p < 2:
            raise ConfigError("manifold.p must be >= 2")
        if self.metric_kind not in ("round", "randers"):
            raise ConfigError("metric.kind must be 'round' or 'randers'")
        if not 0.0 <= self.metric_alpha < 1.0:
            raise ConfigError("metric.alpha must lie in [0, 1)")
        if self.search_tol_geo <= 0.0:
            raise ConfigError("search.tol_geo must be positive")
        if self.search_N < 16:
            raise ConfigError("search.N must be >= 16")
        if self.search_seeds < 1 or self.search_max_iters < 1:
            raise ConfigError("search.seeds and search.max_iters must be >= 1")
        if not 1 <= self.search_class_power <= self.manifold_p - 1:
            raise ConfigError("search.class_power must lie in {1, ..., p-1}")
        if self.sampling_grid < 8:
            raise ConfigError("sampling.grid must be >= 8")
        if self.bounds_delta is not None and not 0.0 < self.bounds_delta <= 1.0:
            raise ConfigError("bounds.delta must lie in (0, 1]")
        if self.output_format not in ("json", "csv", "svg"):
            raise ConfigError("output.format must be json, csv or svg")
        return self


_KEY_MAP = {f.name.replace("_", ".", 1): f for f in fields(ExperimentConfig)}


def _convert(raw: str, typ: str, key: str):
    raw = raw.strip()
    try:
        if typ == "int":
            return int(raw)
        if typ == "float" or typ == "float | None":
            return float(raw)
        if typ == "bool":
            if raw.lower() not in _BOOL:
                raise ValueError(raw)
            return _BOOL[raw.lower()]
        return raw.strip("\"'")
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def parse_config_text(text: str) -> ExperimentConfig:
    cfg = ExperimentConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _KEY_MAP:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        f = _KEY_MAP[key]
        setattr(cfg, f.name, _convert(raw, str(f.type), key))
    return cfg.validate()


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)
