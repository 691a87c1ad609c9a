"""
Run settings for the qgdual command line.
- Nested sections mirror config/config.json: run, numeric, sim, output, log
- Precedence: command-line flags > JSON config file > model defaults
- Unknown keys and out-of-range values raise ConfigError
"""
from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from utils.errors import ConfigError

ROOT = Path(__file__).resolve().parents[1]
DEFAULT_CONFIG = ROOT / "config" / "config.json"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True)


class RunSection(_Section):
    alg: Literal["A2", "C2"] = "A2"
    L: int = Field(2, ge=1, le=12)
    ring: Literal["exact", "float"] = "exact"
    variant: Optional[Literal["A2_self", "C2_self", "C2_to_ASEP"]] = None


class NumericSection(_Section):
    q: float = Field(0.5, gt=0.0)
    q_samples: List[float] = Field(default_factory=lambda: [0.3, 0.5, 0.9])
    eps: Fraction = Fraction(0)

    @field_validator("eps", mode="before")
    @classmethod
    def _parse_eps(cls, v: Any) -> Fraction:
        try:
            out = Fraction(str(v))
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"eps must be a rational like 1/10, got {v!r}") from None
        if out < 0:
            raise ValueError("eps must be nonnegative")
        return out

    @field_validator("q_samples")
    @classmethod
    def _positive_samples(cls, v: List[float]) -> List[float]:
        if not v or any(x <= 0 for x in v):
            raise ValueError("q_samples must be a nonempty list of positive numbers")
        return v


class SimSection(_Section):
    seed: int = Field(42, ge=0, lt=2 ** 64)
    traj: int = Field(1000, ge=1)
    t: float = Field(1.0, ge=0.0)
    jobs: int = Field(1, ge=1)
    mode: Literal["trajectory", "duality_mc", "moment_demo"] = "trajectory"


class OutputSection(_Section):
    out: Optional[str] = None
    dir: str = "outputs"


class LogSection(_Section):
    level: Literal["error", "info", "debug"] = "error"


class Settings(_Section):
    run: RunSection = Field(default_factory=RunSection)
    numeric: NumericSection = Field(default_factory=NumericSection)
    sim: SimSection = Field(default_factory=SimSection)
    output: OutputSection = Field(default_factory=OutputSection)
    log: LogSection = Field(default_factory=LogSection)

    def flat(self) -> Dict[str, Any]:
        """Flag-name view used in manifests."""
        out: Dict[str, Any] = {}
        for section in (self.run, self.numeric, self.sim, self.output, self.log):
            for k, v in section.model_dump().items():
                out[k] = str(v) if isinstance(v, Fraction) else v
        return out


# flag name -> section holding it
FLAG_SECTIONS: Dict[str, str] = {
    name: section
    for section, model in (("run", RunSection), ("numeric", NumericSection), ("sim", SimSection),
                           ("output", OutputSection))
    for name in model.model_fields
}
FLAG_SECTIONS["log_level"] = "log"


def _describe(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(x) for x in err["loc"])
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def read_config_file(path: Optional[Path]) -> Dict[str, Any]:
    if path is None:
        path = DEFAULT_CONFIG
        if not path.exists():
            return {}
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a JSON object")
    return data


def load_settings(config_path: Optional[Path] = None, overrides: Optional[Mapping[str, Any]] = None) -> Settings:
    """Merge JSON file and flag overrides (None values are ignored) into a validated Settings."""
    data = read_config_file(config_path)
    merged: Dict[str, Dict[str, Any]] = {k: dict(v) if isinstance(v, dict) else v for k, v in data.items()}
    for name, value in (overrides or {}).items():
        if value is None:
            continue
        section = FLAG_SECTIONS.get(name)
        if section is None:
            raise ConfigError(f"unknown setting {name!r}")
        key = "level" if name == "log_level" else name
        merged.setdefault(section, {})[key] = value
    try:
        return Settings.model_validate(merged)
    except ValidationError as exc:
        raise ConfigError(_describe(exc)) from None
