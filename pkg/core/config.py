import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Type, TypeVar

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic_settings import BaseSettings

from core.yard import StationKind, YardLayout, YardSize, load_layout


class Settings(BaseSettings):
    """Application configuration settings"""

    # Logging
    log_level: str = Field(default="INFO")
    log_dir: str = Field(default="logs")
    log_to_file: bool = Field(default=True)

    # Outputs
    output_dir: str = Field(default="./results")

    # Experiment matrix
    default_replications: int = Field(default=30)
    default_workers: int = Field(default=1)
    default_seed: int = Field(default=20250701)

    # Simulation
    window_hours: float = Field(default=5.0)
    max_sim_hours: float = Field(default=24.0)
    inspection_fail_rate: float = Field(default=0.005)
    speed_kmh: float = Field(default=16.1)
    dwell_margin_ticks: int = Field(default=1)

    # Trust score range sampled at entrance
    trust_min: float = Field(default=0.0)
    trust_max: float = Field(default=10.0)

    class Config:
        env_prefix = "YARD_"
        env_file = ".env"
        env_file_encoding = "utf-8"


settings = Settings()

Controller = Literal["orchestrated", "isolated"]


class ServiceDistribution(BaseModel):
    """Normal service-time distribution in seconds"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    mean_s: float = Field(ge=0)
    sd_s: float = Field(ge=0)


# Station task completion distributions (mean, sd)
DEFAULT_SERVICE_TIMES: Dict[StationKind, ServiceDistribution] = {
    StationKind.CHARGING: ServiceDistribution(mean_s=60 * 60, sd_s=30 * 60),
    StationKind.CLEANING: ServiceDistribution(mean_s=20 * 60, sd_s=2 * 60),
    StationKind.INSPECTION: ServiceDistribution(mean_s=10 * 60, sd_s=2 * 60),
    StationKind.LOADING: ServiceDistribution(mean_s=20 * 60, sd_s=2 * 60),
    StationKind.PARKING: ServiceDistribution(mean_s=2 * 60, sd_s=2 * 60),
}

DEFAULT_DEMANDS: Dict[str, List[int]] = {
    YardSize.SMALL.value: [60, 80, 100],
    YardSize.MEDIUM.value: [80, 160, 225],
    YardSize.LARGE.value: [160, 225, 340],
}


class ScoreWeights(BaseModel):
    """Coefficients of the charge, circuit, lateness and trust terms"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    charge: float = Field(default=60.0, ge=0)
    circuit: float = Field(default=20.0, ge=0)
    lateness: float = Field(default=5.0, ge=0)
    trust: float = Field(default=1.0, ge=0)


class SimConfig(BaseModel):
    """Everything one simulation run needs; identical config means identical outcome"""

    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True)

    layout: YardLayout
    controller: Controller = "orchestrated"
    demand: float = Field(default=60.0, ge=0)
    window_seconds: float = Field(default_factory=lambda: settings.window_hours * 3600, gt=0)
    seed: int = Field(default_factory=lambda: settings.default_seed, ge=0, lt=2**64)
    service_distributions: Dict[StationKind, ServiceDistribution] = Field(
        default_factory=lambda: dict(DEFAULT_SERVICE_TIMES)
    )
    inspection_fail_rate: float = Field(
        default_factory=lambda: settings.inspection_fail_rate, ge=0, le=1
    )
    speed_kmh: float = Field(default_factory=lambda: settings.speed_kmh, gt=0)
    max_sim_seconds: float = Field(default_factory=lambda: settings.max_sim_hours * 3600, gt=0)
    trust_range: Tuple[float, float] = Field(
        default_factory=lambda: (settings.trust_min, settings.trust_max)
    )
    score_weights: ScoreWeights = Field(default_factory=ScoreWeights)
    dwell_margin_ticks: int = Field(default_factory=lambda: settings.dwell_margin_ticks, ge=0)
    service_floor_seconds: float = Field(default=60.0, ge=0)
    charging_ceiling_seconds: float = Field(default=2 * 3600.0, gt=0)

    # Scripted scenarios
    arrival_times: Optional[List[float]] = None
    prefilled_berths: Dict[StationKind, int] = Field(default_factory=dict)
    record_trajectories: bool = False

    @field_validator("layout", mode="before")
    @classmethod
    def resolve_layout(cls, value: Any) -> Any:
        if isinstance(value, str):
            return load_layout(value)
        return value

    @field_validator("service_distributions", mode="after")
    @classmethod
    def fill_distributions(
        cls, value: Dict[StationKind, ServiceDistribution]
    ) -> Dict[StationKind, ServiceDistribution]:
        merged = dict(DEFAULT_SERVICE_TIMES)
        merged.update(value)
        return merged

    @field_validator("arrival_times", mode="after")
    @classmethod
    def check_arrival_times(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is not None:
            if any(t < 0 for t in value):
                raise ValueError("arrival times must be nonnegative")
            value = sorted(value)
        return value

    @model_validator(mode="after")
    def check_consistency(self) -> "SimConfig":
        low, high = self.trust_range
        if low > high:
            raise ValueError(f"trust_range lower bound {low} exceeds upper bound {high}")
        for kind, count in self.prefilled_berths.items():
            berths = self.layout.station(kind).berth_count
            if not 0 <= count <= berths:
                raise ValueError(f"prefilled {kind.value} berths {count} outside [0, {berths}]")
        return self

    @property
    def tick_seconds(self) -> float:
        """One cell traversal at the fixed speed"""
        return self.layout.cell_size / (self.speed_kmh * 1000.0 / 3600.0)


class ScenarioMatrix(BaseModel):
    """Yard size x demand x controller x replication grid"""

    model_config = ConfigDict(extra="forbid")

    sizes: List[str] = Field(default_factory=lambda: [s.value for s in YardSize])
    demands: Dict[str, List[int]] = Field(default_factory=lambda: dict(DEFAULT_DEMANDS))
    controllers: List[Controller] = Field(default_factory=lambda: ["orchestrated", "isolated"])
    replications: int = Field(default_factory=lambda: settings.default_replications, ge=1)
    base_seed: int = Field(default_factory=lambda: settings.default_seed, ge=0, lt=2**64)
    window_hours: float = Field(default_factory=lambda: settings.window_hours, gt=0)
    workers: int = Field(default_factory=lambda: settings.default_workers, ge=1)
    layouts: Dict[str, str] = Field(default_factory=dict)
    sim: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def check_cells(self) -> "ScenarioMatrix":
        for size in self.sizes:
            if size not in self.demands:
                raise ValueError(f"no demand levels configured for yard size {size}")
            if any(d < 0 for d in self.demands[size]):
                raise ValueError(f"negative demand for yard size {size}")
        reserved = {"layout", "controller", "demand", "seed", "window_seconds"}
        clash = reserved.intersection(self.sim)
        if clash:
            raise ValueError(f"sim overrides may not set {sorted(clash)}")
        unknown = set(self.sim) - set(SimConfig.model_fields)
        if unknown:
            raise ValueError(f"unknown sim override keys {sorted(unknown)}")
        return self

    def layout_ref(self, size: str) -> str:
        return self.layouts.get(size, size)

    @property
    def run_count(self) -> int:
        cells = sum(len(self.demands[size]) for size in self.sizes)
        return cells * len(self.controllers) * self.replications


ModelT = TypeVar("ModelT", bound=BaseModel)


def load_json_config(path: str, model: Type[ModelT]) -> ModelT:
    """Read a JSON scenario/config file into a model; unknown keys are errors"""
    text = Path(path).read_text(encoding="utf-8")
    return model.model_validate(json.loads(text))
