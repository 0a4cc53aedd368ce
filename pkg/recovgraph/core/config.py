import configparser
import json
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, get_origin

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from recovgraph.models.schemas import Proposal

DEFAULT_RIDGE_LADDER = [1e-10, 1e-8, 1e-6, 1e-4]


class RunConfig(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="RECOVGRAPH_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    manifest_path: Optional[Path] = None
    output_dir: Path = Path("recovgraph_out")

    n_samples: int = Field(default=50_000, ge=1)
    proposal: Proposal = Proposal.uniform
    seed: int = Field(default=0, ge=0, lt=2**64)
    taus: List[float] = Field(default_factory=lambda: [0.2])
    scale_hellinger: float = Field(default=1e15, gt=0)
    scale_kl: float = Field(default=1e25, gt=0)
    ridge_ladder: List[float] = Field(default_factory=lambda: list(DEFAULT_RIDGE_LADDER))
    cond_limit: float = Field(default=1e12, gt=1)
    n_joints: int = Field(default=20, ge=2)
    u_bound: float = Field(default=1.0, gt=0)

    threads: int = Field(default=4, ge=1)
    direct_sampling: bool = False
    all_pairs: bool = False
    dump_correlation: bool = False
    save_samples: bool = False
    mrs_origin: Literal["zero", "half_first_step"] = "zero"
    log_level: str = "INFO"

    @field_validator("taus")
    @classmethod
    def _taus_in_unit_interval(cls, taus: List[float]) -> List[float]:
        bad = [t for t in taus if not 0.0 <= t <= 1.0]
        if bad:
            raise ValueError(f"tau values must lie in [0, 1], got {bad}")
        return taus

    @field_validator("ridge_ladder")
    @classmethod
    def _ladder_increasing(cls, ladder: List[float]) -> List[float]:
        if not ladder or any(lam <= 0 for lam in ladder):
            raise ValueError("ridge ladder must be a non-empty list of positive values")
        if any(b <= a for a, b in zip(ladder, ladder[1:])):
            raise ValueError(f"ridge ladder must be strictly increasing, got {ladder}")
        return ladder


def _read_config_file(path: Path) -> Dict[str, Any]:
    if path.suffix.lower() == ".toml":
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        # keys may sit at top level or under a [recovgraph] table
        return dict(data.get("recovgraph", data))

    parser = configparser.ConfigParser()
    parser.read(path, encoding="utf-8")
    if not parser.has_section("recovgraph"):
        raise ValueError(f"Config file {path} has no [recovgraph] section")

    values: Dict[str, Any] = {}
    for key, raw in parser.items("recovgraph"):
        field = RunConfig.model_fields.get(key)
        if field is not None and get_origin(field.annotation) is list:
            raw = raw.strip()
            values[key] = json.loads(raw) if raw.startswith("[") else [
                float(v) for v in raw.split(",") if v.strip()
            ]
        else:
            values[key] = raw
    return values


def load_config(config_file: Optional[Path] = None, **overrides: Any) -> RunConfig:
    """Build a RunConfig: CLI overrides > config file > environment > defaults."""
    values: Dict[str, Any] = {}
    if config_file is not None:
        values.update(_read_config_file(Path(config_file)))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)
