"""Configuration models for numerical settings and CLI run configuration"""

from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Dict, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

PairName = Literal[
    "cor5.2",
    "thm4.4",
    "br",
    "Pk-P0",
    "Pk-Pk-1r",
    "cor6.4",
    "thm6.6",
    "lemma6.7",
    "cor6.8",
]

LocalSpaceName = Literal["VR", "MF", "VDIV", "VH68"]


class Subcommand(str, Enum):
    """CLI subcommands"""

    REFINE = "refine"
    LOCAL_DIV = "local-div"
    BUBBLES = "bubbles"
    INFSUP = "infsup"
    EQUIVALENCE = "equivalence"
    BOOTSTRAP = "bootstrap"
    SOLVE = "solve"
    CONVERGENCE = "convergence"
    UNISOLVENCE = "unisolvence"
    SURJECTIVITY = "surjectivity"
    DIMENSIONS = "dimensions"


class Settings(BaseSettings):
    """Numerical settings loaded from environment variables"""

    log_level: str = Field(default="INFO", alias="LOG_LEVEL")

    # Exact rational coefficient arithmetic for the local divergence pipeline
    rational: bool = Field(default=False, alias="ALFELD_RATIONAL")

    # Shape regularity
    shape_warn_threshold: float = Field(default=50.0, alias="ALFELD_SHAPE_WARN")
    random_shape_limit: float = Field(default=20.0, alias="ALFELD_RANDOM_SHAPE_LIMIT")

    # Caps
    degree_cap: int = Field(default=6, alias="ALFELD_DEGREE_CAP")
    quadrature_cap: int = Field(default=20, alias="ALFELD_QUADRATURE_CAP")
    dense_limit: int = Field(default=4000, alias="ALFELD_DENSE_LIMIT")

    # Tolerances
    exactness_tol: float = Field(default=1e-10, alias="ALFELD_EXACTNESS_TOL")
    sampling_tol: float = Field(default=1e-11, alias="ALFELD_SAMPLING_TOL")
    stable_threshold: float = Field(default=1e-8, alias="ALFELD_STABLE_THRESHOLD")

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
        populate_by_name=True,
    )


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Return the process-wide settings (call ``get_settings.cache_clear()`` after env changes)"""
    return Settings()


class RunConfig(BaseModel):
    """Validated configuration of one CLI run"""

    subcommand: Subcommand
    mesh: Optional[str] = None
    mesh_path: Optional[Path] = None
    split_rule: Literal["barycenter", "explicit"] = "barycenter"
    split_points_path: Optional[Path] = None
    pair: Optional[PairName] = None
    space: Optional[LocalSpaceName] = None
    k: int = Field(default=1, ge=1)
    d: int = Field(default=2, ge=2)
    levels: int = Field(default=1, ge=1)
    trials: int = Field(default=10, ge=1)
    seed: int = Field(default=0, ge=0)
    jobs: int = Field(default=1, ge=1)
    random_geometry: bool = False
    case: Literal["zero", "stream", "stream-shifted"] = "stream"
    pressure_shift: float = 0.0
    output_dir: Path = Path("results")
    export_ops: Optional[Path] = None
    sample_lattice: int = Field(default=0, ge=0)
    dump: bool = False
    metrics_file: Optional[Path] = None
    tolerances: Dict[str, float] = Field(default_factory=dict)

    model_config = ConfigDict(frozen=True)

    @field_validator("tolerances")
    @classmethod
    def _known_tolerances(cls, value: Dict[str, float]) -> Dict[str, float]:
        known = {"exactness_tol", "sampling_tol", "stable_threshold"}
        unknown = set(value) - known
        if unknown:
            raise ValueError(f"unknown tolerance keys: {sorted(unknown)}")
        return value

    @model_validator(mode="after")
    def _subcommand_requirements(self) -> "RunConfig":
        needs_pair = {
            Subcommand.INFSUP,
            Subcommand.SOLVE,
            Subcommand.CONVERGENCE,
            Subcommand.BOOTSTRAP,
        }
        if self.subcommand in needs_pair and self.pair is None:
            raise ValueError(f"{self.subcommand.value} requires --pair")
        if self.subcommand == Subcommand.UNISOLVENCE and self.space is None:
            raise ValueError("unisolvence requires --space")
        if self.subcommand == Subcommand.REFINE and self.mesh is None and self.mesh_path is None:
            raise ValueError("refine requires --mesh or --mesh-file")
        if self.split_rule == "explicit" and self.split_points_path is None:
            raise ValueError("explicit split rule requires --split-points")
        if self.subcommand == Subcommand.CONVERGENCE and self.levels < 3:
            raise ValueError("convergence requires --levels >= 3")
        return self

    def tolerance(self, name: str, settings: Settings) -> float:
        """Tolerance override from the run, falling back to settings"""
        return self.tolerances.get(name, getattr(settings, name))
