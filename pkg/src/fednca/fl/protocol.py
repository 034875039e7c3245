"""Client local training and server aggregation.

One round: the server broadcasts the current global weights (dense, or
ciphertexts in encrypted mode), every client decodes them, trains locally
with backpropagation through time, and returns its weights in the mode's
encoding. The server averages with uniform 1/n weights in fixed client-id
order. In encrypted mode the server state holds no key material and the
aggregation path never decrypts anything.
"""

import enum
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from ..errors import ConfigError, DataError
from ..compression import (
    QuantizedPayload,
    SparsePayload,
    apply_sparse_update,
    dequantize,
    quantize_4bit,
    topk_sparsify,
)
from ..he import HeParams, KeyPair, chunk_decrypt, chunk_encrypt, ct_add, ct_mul_plain
from ..nca import (
    ModelConfig,
    TwoStageModel,
    backward_bptt,
    cross_entropy_loss,
    flatten_model,
    forward,
    sgd_step,
    unflatten_model,
)
from ..data.synthetic import SegSample
from .payloads import DensePayload, EncryptedPayload, Payload, payload_tag, TAG_DENSE


class AggregationMode(str, enum.Enum):
    PLAIN = "plain"
    ENCRYPTED = "encrypted"
    QUANTIZED = "quantized"
    SPARSE = "sparse"


@dataclass
class TrainConfig:
    """Local-work schedule and codec knobs shared by all clients."""

    local_epochs: int = 1
    batch_size: int = 1  # 0 means one full-shard batch per epoch
    k_percent: float = 10.0
    quantize_per_segment: bool = True
    sum_only: bool = False  # encrypted mode: server sums, clients divide
    weighted: bool = False  # shard-size-weighted mean instead of uniform

    def __post_init__(self):
        if self.local_epochs < 0:
            raise ConfigError("local_epochs must be >= 0")
        if self.batch_size < 0:
            raise ConfigError("batch_size must be >= 0")
        if not 0.0 < self.k_percent <= 100.0:
            raise ConfigError("k_percent must lie in (0, 100]")


@dataclass
class ClientState:
    """One simulated participant: shard, model, and the last global model."""

    client_id: int
    shard: List[SegSample]
    model: TwoStageModel
    last_global: np.ndarray
    train: TrainConfig
    mode: AggregationMode
    seed: int
    n_clients: int = 1
    keys: Optional[KeyPair] = None
    he_params: Optional[HeParams] = None
    round_number: int = 0
    last_loss: float = float("nan")

    def __post_init__(self):
        if self.last_global.size != flatten_model(self.model).size:
            raise ConfigError("last_global length does not match the model")
        if self.mode == AggregationMode.ENCRYPTED and self.keys is None:
            raise ConfigError("encrypted mode requires client key material")


def weight_segments(config: ModelConfig) -> tuple:
    """Per-tensor segment lengths of the flattened model (both stages)."""
    h, p, c = config.hidden_units, config.perception_channels, config.channels
    per_stage = (h * p, h, c * h, c)
    return per_stage * 2


def _decode_incoming(state: ClientState, incoming: Payload) -> np.ndarray:
    if isinstance(incoming, DensePayload):
        vec = np.asarray(incoming.values, np.float32)
    elif isinstance(incoming, EncryptedPayload):
        if state.mode != AggregationMode.ENCRYPTED:
            raise ConfigError("encrypted payload outside encrypted mode")
        vec = chunk_decrypt(incoming.ciphertexts, state.keys, incoming.original_length)
        if state.train.sum_only and state.round_number > 0:
            vec = (vec / state.n_clients).astype(np.float32)
    else:
        raise ConfigError(
            f"client cannot decode downstream payload tag {payload_tag(incoming)}"
        )
    expected = flatten_model(state.model).size
    if vec.size != expected:
        raise DataError(f"incoming weight count {vec.size} != {expected}")
    return vec


def _train_locally(state: ClientState, model: TwoStageModel) -> float:
    cfg = model.config
    shard = state.shard
    if not shard or state.train.local_epochs == 0:
        return float("nan")
    batch = state.train.batch_size or len(shard)
    losses = []
    step_seed = np.random.default_rng(
        [state.seed, state.round_number]
    ).integers(0, 2**31)
    update = 0
    for _ in range(state.train.local_epochs):
        for start in range(0, len(shard), batch):
            group = shard[start : start + batch]
            images = np.stack([s.image for s in group]).astype(np.float32)
            targets = np.stack([s.mask for s in group]).astype(np.int64)
            logits, tape = forward(model, images, rng_seed=int(step_seed) + update)
            loss, dlogits = cross_entropy_loss(logits, targets)
            grad_theta, grad_omega = backward_bptt(model, tape, dlogits)
            model = TwoStageModel(
                sgd_step(model.theta, grad_theta, cfg.eta),
                sgd_step(model.omega, grad_omega, cfg.eta),
                cfg,
            )
            losses.append(loss)
            update += 1
    state.model = model
    return float(np.mean(losses))


def _encode_outgoing(state: ClientState, current: np.ndarray) -> Payload:
    mode = state.mode
    if mode == AggregationMode.PLAIN:
        return DensePayload(current)
    if mode == AggregationMode.QUANTIZED:
        segments = (
            weight_segments(state.model.config)
            if state.train.quantize_per_segment
            else None
        )
        return quantize_4bit(current, segments)
    if mode == AggregationMode.SPARSE:
        return topk_sparsify(
            current, state.last_global, state.train.k_percent, state.round_number
        )
    if mode == AggregationMode.ENCRYPTED:
        rng = np.random.default_rng(
            [state.seed, 0xE2C, state.round_number, state.client_id]
        )
        cts = chunk_encrypt(current, state.keys, rng)
        return EncryptedPayload(cts, current.size)
    raise ConfigError(f"unknown aggregation mode {mode}")


def client_update(state: ClientState, incoming: Payload) -> Payload:
    """Decode the broadcast weights, train locally, return the encoded update.

    Updates state.model, state.last_global, state.last_loss and advances
    the round counter.
    """
    vec = _decode_incoming(state, incoming)
    state.last_global = vec.copy()
    model = unflatten_model(vec, state.model.config)
    state.model = model
    state.last_loss = _train_locally(state, model)
    current = flatten_model(state.model).astype(np.float32)
    outgoing = _encode_outgoing(state, current)
    state.round_number += 1
    return outgoing


def _mean_fixed_order(vectors: Sequence[np.ndarray], weights=None) -> np.ndarray:
    """Sequential float64 sum in list order, then divide; cast to float32."""
    acc = np.zeros(vectors[0].size, np.float64)
    if weights is None:
        for v in vectors:
            acc += v.astype(np.float64)
        acc /= len(vectors)
    else:
        total = float(sum(weights))
        for v, w in zip(vectors, weights):
            acc += (w / total) * v.astype(np.float64)
    return acc.astype(np.float32)


def server_update(
    updates: List[Payload],
    mode: AggregationMode,
    last_global: np.ndarray = None,
    sum_only: bool = False,
    expected_count: int = None,
    weights: Sequence[float] = None,
) -> Payload:
    """Aggregate client updates into the next downstream payload.

    Plain/quantized/sparse updates are densified then averaged in fixed
    client-id order; encrypted updates are summed chunkwise with ct_add and
    scaled by 1/n via ct_mul_plain (unless sum_only). Never decrypts.
    """
    if not updates:
        raise DataError("server_update needs at least one update")
    if expected_count is not None and len(updates) != expected_count:
        raise DataError(
            f"round incomplete: got {len(updates)} updates, expected {expected_count}"
        )
    tags = {payload_tag(u) for u in updates}
    if len(tags) > 1:
        raise DataError(f"heterogeneous update tags in one round: {sorted(tags)}")

    if mode == AggregationMode.PLAIN:
        vecs = [np.asarray(u.values, np.float32) for u in updates]
        return DensePayload(_mean_fixed_order(vecs, weights))

    if mode == AggregationMode.QUANTIZED:
        vecs = [dequantize(u).astype(np.float32) for u in updates]
        return DensePayload(_mean_fixed_order(vecs, weights))

    if mode == AggregationMode.SPARSE:
        if last_global is None:
            raise ConfigError("sparse aggregation needs the last global model")
        vecs = [apply_sparse_update(last_global, u) for u in updates]
        return DensePayload(_mean_fixed_order(vecs, weights))

    if mode == AggregationMode.ENCRYPTED:
        first = updates[0]
        n_chunks = len(first.ciphertexts)
        if any(len(u.ciphertexts) != n_chunks for u in updates):
            raise DataError("encrypted updates disagree on chunk count")
        summed = list(first.ciphertexts)
        for update in updates[1:]:
            summed = [ct_add(a, b) for a, b in zip(summed, update.ciphertexts)]
        if not sum_only:
            summed = [ct_mul_plain(ct, 1.0 / len(updates)) for ct in summed]
        return EncryptedPayload(summed, first.original_length)

    raise ConfigError(f"unknown aggregation mode {mode}")


@dataclass
class ServerState:
    """Aggregation-side state; holds no decryption capability by design."""

    mode: AggregationMode
    n_clients: int
    global_payload: Payload
    last_global: Optional[np.ndarray] = None
    he_params: Optional[HeParams] = None
    sum_only: bool = False
    weighted: bool = False
    round_number: int = 0
    pending: List[Payload] = field(default_factory=list)

    def aggregate(self, updates: List[Payload], shard_sizes: Sequence[int] = None) -> Payload:
        weights = shard_sizes if self.weighted else None
        result = server_update(
            updates,
            self.mode,
            last_global=self.last_global,
            sum_only=self.sum_only,
            expected_count=self.n_clients,
            weights=weights,
        )
        self.global_payload = result
        if isinstance(result, DensePayload):
            self.last_global = np.asarray(result.values, np.float32)
        self.round_number += 1
        return result
