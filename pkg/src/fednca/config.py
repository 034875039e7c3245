"""Experiment configuration: YAML file -> validated pydantic model -> core types.

Every knob of the simulator lives here. Validation happens before any
computation, and errors carry the offending field path (e.g.
"training.k_percent"). The same models serve as the request schemas of the
HTTP service.
"""

from pathlib import Path
from typing import List, Literal, Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .data import BaselineSpec, DatasetSpec
from .errors import ConfigError
from .fl.experiment import ExperimentSettings
from .fl.protocol import AggregationMode, TrainConfig
from .he.params import DEFAULT_COEFF_MODULUS, DEFAULT_RING_DEGREE, HeParams, find_ntt_primes
from .nca import ModelConfig
from .netsim import LinkProfile


class ModelSection(BaseModel):
    model_config = ConfigDict(extra="forbid")
    channels: int = Field(16, ge=3)
    c_in: int = Field(1, ge=1)
    c_out: int = Field(2, ge=1)
    hidden_units: int = Field(64, ge=1)
    t0: int = Field(20, ge=0)
    t1: int = Field(40, ge=0)
    fire_rate: float = Field(0.5, ge=0.0, le=1.0)
    downscale_factor: int = Field(4, ge=1)
    eta: float = Field(1e-3, gt=0.0)
    step_grad_mean: bool = False

    def to_core(self) -> ModelConfig:
        return ModelConfig(**self.model_dump())


class TrainingSection(BaseModel):
    model_config = ConfigDict(extra="forbid")
    local_epochs: int = Field(1, ge=0)
    batch_size: int = Field(1, ge=0)
    k_percent: float = Field(10.0, gt=0.0, le=100.0)
    quantize_per_segment: bool = True
    sum_only: bool = False
    weighted: bool = False

    def to_core(self) -> TrainConfig:
        return TrainConfig(**self.model_dump())


class HeSection(BaseModel):
    model_config = ConfigDict(extra="forbid")
    ring_degree: int = Field(DEFAULT_RING_DEGREE, ge=8)
    coeff_modulus: Optional[List[int]] = None
    scale_bits: int = Field(30, ge=2, le=50)
    value_bound: float = Field(64.0, gt=0.0)
    noise_sigma: float = Field(3.2, gt=0.0)
    security_grade: Literal["toy", "hardened"] = "toy"

    def to_core(self) -> HeParams:
        moduli = self.coeff_modulus
        if moduli is None:
            if self.ring_degree == DEFAULT_RING_DEGREE:
                moduli = list(DEFAULT_COEFF_MODULUS)
            else:
                moduli = list(find_ntt_primes(50, self.ring_degree, 2))
        return HeParams(
            ring_degree=self.ring_degree,
            coeff_modulus=tuple(moduli),
            scale=float(2**self.scale_bits),
            value_bound=self.value_bound,
            noise_sigma=self.noise_sigma,
            security_grade=self.security_grade,
        )


class DatasetSection(BaseModel):
    model_config = ConfigDict(extra="forbid")
    height: int = Field(64, ge=8)
    width: int = Field(64, ge=8)
    n_samples: int = Field(40, ge=1)
    bg_level: float = Field(0.25, ge=0.0, le=1.0)
    fg_level: float = Field(0.75, ge=0.0, le=1.0)
    noise_std: float = Field(0.05, ge=0.0)
    area_min: float = Field(0.04, gt=0.0, lt=1.0)
    area_max: float = Field(0.35, gt=0.0, lt=1.0)
    n_groups: int = Field(1, ge=1)
    group_shift: float = Field(0.0, ge=0.0)

    def to_core(self) -> DatasetSpec:
        return DatasetSpec(**self.model_dump())


class PartitionSection(BaseModel):
    model_config = ConfigDict(extra="forbid")
    strategy: Literal["uniform", "noniid"] = "uniform"
    test_fraction: float = Field(0.25, ge=0.0, lt=1.0)


class NetsimSection(BaseModel):
    model_config = ConfigDict(extra="forbid")
    bandwidth_up: float = Field(1_000_000.0, gt=0.0)
    bandwidth_down: float = Field(4_000_000.0, gt=0.0)
    latency: float = Field(0.05, ge=0.0)
    seconds_per_sample: float = Field(0.0, ge=0.0)

    def to_core(self) -> LinkProfile:
        return LinkProfile(self.bandwidth_up, self.bandwidth_down, self.latency)


class BaselineSection(BaseModel):
    model_config = ConfigDict(extra="forbid")
    name: str
    param_count: int = Field(..., gt=0)
    bytes_per_param: int = Field(4, gt=0)

    def to_core(self) -> BaselineSpec:
        return BaselineSpec(self.name, self.param_count, self.bytes_per_param)


class BenchSection(BaseModel):
    model_config = ConfigDict(extra="forbid")
    repeats: int = Field(10, ge=1)


def _default_baselines() -> List[BaselineSection]:
    return [
        BaselineSection(name="unet", param_count=31_000_000),
        BaselineSection(name="transunet", param_count=105_000_000),
    ]


class ExperimentConfig(BaseModel):
    """Top-level config; see configs/ for annotated examples."""

    model_config = ConfigDict(extra="forbid")
    mode: Literal["plain", "encrypted", "quantized", "sparse"] = "plain"
    seed: int = Field(0, ge=0)
    rounds: int = Field(10, ge=0)
    clients: int = Field(5, ge=1)
    eval_batch: int = Field(8, ge=1)
    model: ModelSection = ModelSection()
    training: TrainingSection = TrainingSection()
    he: HeSection = HeSection()
    dataset: DatasetSection = DatasetSection()
    partition: PartitionSection = PartitionSection()
    netsim: NetsimSection = NetsimSection()
    baselines: List[BaselineSection] = Field(default_factory=_default_baselines)
    bench: BenchSection = BenchSection()

    @model_validator(mode="after")
    def _cross_checks(self):
        f = self.model.downscale_factor
        if self.dataset.height % f or self.dataset.width % f:
            raise ValueError(
                f"dataset.height/width ({self.dataset.height}x{self.dataset.width}) "
                f"must be divisible by model.downscale_factor ({f})"
            )
        if self.dataset.fg_level <= self.dataset.bg_level:
            raise ValueError("dataset.fg_level must exceed dataset.bg_level")
        return self

    def to_settings(self) -> ExperimentSettings:
        he = self.he.to_core() if self.mode == "encrypted" else None
        return ExperimentSettings(
            model=self.model.to_core(),
            dataset=self.dataset.to_core(),
            mode=AggregationMode(self.mode),
            train=self.training.to_core(),
            rounds=self.rounds,
            n_clients=self.clients,
            seed=self.seed,
            partition_strategy=self.partition.strategy,
            test_fraction=self.partition.test_fraction,
            link=self.netsim.to_core(),
            seconds_per_sample=self.netsim.seconds_per_sample,
            he=he,
            eval_batch=self.eval_batch,
        )


def format_validation_error(err: ValidationError) -> str:
    lines = []
    for item in err.errors():
        path = ".".join(str(p) for p in item["loc"]) or "<root>"
        lines.append(f"{path}: {item['msg']}")
    return "; ".join(lines)


def parse_config(raw: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(raw or {})
    except ValidationError as err:
        raise ConfigError(format_validation_error(err)) from err


def load_config(path) -> ExperimentConfig:
    """Read and validate a YAML experiment config file."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        raw = yaml.safe_load(p.read_text())
    except yaml.YAMLError as err:
        raise ConfigError(f"config file is not valid YAML: {err}") from err
    if raw is not None and not isinstance(raw, dict):
        raise ConfigError("config file must contain a YAML mapping")
    return parse_config(raw)
