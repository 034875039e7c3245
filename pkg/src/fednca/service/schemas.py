"""Request/response models of the HTTP service (and CLI summaries)."""

from typing import Dict, List, Optional

from pydantic import BaseModel, Field

from ..config import ExperimentConfig


class HealthResponse(BaseModel):
    status: str
    version: str


class TrainRequest(BaseModel):
    config: ExperimentConfig = ExperimentConfig()
    out_dir: str


class TrainSummary(BaseModel):
    mode: str
    rounds: int
    clients: int
    final_dice: float
    final_loss_mean: float
    param_count: int
    dense_payload_bytes: int
    total_up_mib: float
    total_down_mib: float
    mib_per_round: float
    total_wall_seconds: float
    rounds_csv: str
    ledger_csv: str
    checkpoint: str
    summary_json: str


class BenchRequest(BaseModel):
    config: ExperimentConfig = ExperimentConfig()


class BenchHeRow(BaseModel):
    name: str
    vector_length: int
    ciphertext_count: int
    encrypt_ms: float
    decrypt_ms: float
    bytes: int
    count_ratio_vs_model: float
    time_ratio_vs_model: float


class BenchHeResponse(BaseModel):
    repeats: int
    slot_count: int
    rows: List[BenchHeRow]


class BenchCompressionRow(BaseModel):
    name: str
    codec: str
    vector_length: int
    bytes: int
    mib: float
    max_roundtrip_error: float
    ratio_vs_model_dense: float


class BenchCompressionResponse(BaseModel):
    k_percent: float
    rows: List[BenchCompressionRow]


class ReportRequest(BaseModel):
    csv_paths: List[str] = Field(min_length=1)


class ReportSummary(BaseModel):
    rounds: int
    final_dice: Optional[float] = None
    final_loss_mean: Optional[float] = None
    total_up_mib: Optional[float] = None
    total_down_mib: Optional[float] = None
    mib_per_round: Optional[float] = None
    down_up_ratio: Optional[float] = None
    sources: Dict[str, str] = Field(default_factory=dict)
