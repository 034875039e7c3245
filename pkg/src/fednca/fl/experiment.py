"""Round driver: broadcast, parallel client training, aggregation, metrics.

Every payload crosses the simulated link as real serialized bytes (clients
and server decode what they receive), so the ledger sizes are the sizes.
Model quality is scored by the experiment harness, which in encrypted mode
holds the shared client key; the server state never does.
"""

import io
import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from ..errors import ConfigError
from ..data import DatasetSpec, generate_dataset, mean_foreground_dice, partition
from ..he import HeParams, chunk_decrypt, keygen
from ..nca import ModelConfig, TwoStageModel, flatten_model, init_model, predict, unflatten_model
from ..netsim import (
    DIRECTION_DOWN,
    DIRECTION_UP,
    LinkProfile,
    RoundMessage,
    TransferLedger,
    round_cost,
    transfer,
)
from .payloads import DensePayload, EncryptedPayload, Payload, decode_payload, encode_payload, payload_tag
from .protocol import AggregationMode, ClientState, ServerState, TrainConfig, client_update

ROUNDS_SCHEMA = "fednca.rounds.v1"


@dataclass(frozen=True)
class ExperimentSettings:
    """Everything a federated run needs, resolved to core types."""

    model: ModelConfig
    dataset: DatasetSpec
    mode: AggregationMode = AggregationMode.PLAIN
    train: TrainConfig = TrainConfig()
    rounds: int = 10
    n_clients: int = 5
    seed: int = 0
    partition_strategy: str = "uniform"
    test_fraction: float = 0.25
    link: LinkProfile = LinkProfile()
    seconds_per_sample: float = 0.0
    he: Optional[HeParams] = None
    eval_batch: int = 8

    def __post_init__(self):
        if self.rounds < 0:
            raise ConfigError("rounds must be >= 0")
        if self.n_clients < 1:
            raise ConfigError("need at least one client")
        f = self.model.downscale_factor
        if self.dataset.height % f or self.dataset.width % f:
            raise ConfigError(
                f"dataset dims {self.dataset.height}x{self.dataset.width} must be "
                f"divisible by the model downscale factor {f}"
            )
        if self.mode == AggregationMode.ENCRYPTED and self.he is None:
            raise ConfigError("encrypted mode requires HeParams")


@dataclass
class RoundReport:
    """Per-round record: losses, global Dice, bytes, simulated timings."""

    round_number: int
    dice: float
    client_losses: List[float]
    up_bytes: List[int]
    down_bytes: List[int]
    up_mib: float
    down_mib: float
    down_seconds: float
    compute_seconds: float
    up_seconds: float
    wall_seconds: float

    @property
    def loss_mean(self) -> float:
        vals = [x for x in self.client_losses if x == x]
        return float(np.mean(vals)) if vals else float("nan")


@dataclass
class ExperimentResult:
    settings: ExperimentSettings
    reports: List[RoundReport]
    ledger: TransferLedger
    final_model: TwoStageModel
    test_dice: float
    shard_sizes: List[int] = field(default_factory=list)


def n_workers() -> int:
    """Client-update parallelism, capped by FEDNCA_THREADS (default serial)."""
    raw = os.environ.get("FEDNCA_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"FEDNCA_THREADS must be an integer, got {raw!r}")


def make_evaluator(
    settings: ExperimentSettings, test_set, keys
) -> Callable[[Payload], float]:
    """Scores a global payload on the held-out test set (harness-side)."""
    cfg = settings.model
    if not test_set:
        return lambda payload: float("nan")
    images = np.stack([s.image for s in test_set]).astype(np.float32)
    masks = np.stack([s.mask for s in test_set])

    def payload_to_vec(payload: Payload) -> np.ndarray:
        if isinstance(payload, DensePayload):
            return np.asarray(payload.values, np.float32)
        if isinstance(payload, EncryptedPayload):
            vec = chunk_decrypt(payload.ciphertexts, keys, payload.original_length)
            if settings.train.sum_only:
                vec = (vec / settings.n_clients).astype(np.float32)
            return vec
        raise ConfigError(f"cannot evaluate payload tag {payload_tag(payload)}")

    def evaluate(payload: Payload) -> float:
        model = unflatten_model(payload_to_vec(payload), cfg)
        scores = []
        for start in range(0, images.shape[0], settings.eval_batch):
            batch = images[start : start + settings.eval_batch]
            pred = predict(model, batch)
            for row in range(batch.shape[0]):
                scores.append(
                    mean_foreground_dice(pred[row], masks[start + row], cfg.c_out)
                )
        return float(np.mean(scores))

    evaluate.payload_to_vec = payload_to_vec
    return evaluate


def run_round(
    server: ServerState,
    clients: List[ClientState],
    link: LinkProfile,
    ledger: TransferLedger,
    evaluator: Callable[[Payload], float],
    seconds_per_sample: float = 0.0,
    max_workers: int = 1,
) -> RoundReport:
    """One synchronous federated round over the simulated star topology."""
    round_number = server.round_number
    he_params = server.he_params
    broadcast = encode_payload(server.global_payload)

    down_bytes, down_seconds = [], []
    for client in clients:
        msg = RoundMessage(
            round_number, DIRECTION_DOWN, client.client_id,
            payload_tag(server.global_payload), len(broadcast),
        )
        rec = transfer(msg, link, ledger)
        down_bytes.append(rec.num_bytes)
        down_seconds.append(rec.seconds)

    def work(client: ClientState) -> bytes:
        incoming = decode_payload(broadcast, he_params)
        outgoing = client_update(client, incoming)
        return encode_payload(outgoing)

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            up_blobs = list(pool.map(work, clients))
    else:
        up_blobs = [work(c) for c in clients]

    up_bytes, up_seconds = [], []
    for client, blob in zip(clients, up_blobs):
        compute = seconds_per_sample * len(client.shard) * client.train.local_epochs
        ledger.log_compute(round_number, client.client_id, compute)
        # tag byte is the first wire byte; no need to re-decode
        msg = RoundMessage(round_number, DIRECTION_UP, client.client_id, blob[0], len(blob))
        rec = transfer(msg, link, ledger)
        up_bytes.append(rec.num_bytes)
        up_seconds.append(rec.seconds)

    vec_len = None if server.last_global is None else server.last_global.size
    updates = [
        decode_payload(
            blob, he_params, original_length=vec_len, reference_round=round_number
        )
        for blob in up_blobs
    ]
    server.aggregate(updates, shard_sizes=[len(c.shard) for c in clients])

    dice = evaluator(server.global_payload)
    up_mib, down_mib, wall = round_cost(ledger, round_number)
    computes = [
        ledger.compute_seconds[(round_number, c.client_id)] for c in clients
    ]
    return RoundReport(
        round_number=round_number,
        dice=dice,
        client_losses=[c.last_loss for c in clients],
        up_bytes=up_bytes,
        down_bytes=down_bytes,
        up_mib=up_mib,
        down_mib=down_mib,
        down_seconds=max(down_seconds),
        compute_seconds=max(computes),
        up_seconds=max(up_seconds),
        wall_seconds=wall,
    )


def run_experiment(settings: ExperimentSettings) -> ExperimentResult:
    """Deterministic end-to-end federated run from one seed."""
    dataset = generate_dataset(settings.dataset, settings.seed)
    shards, test_set = partition(
        dataset,
        settings.n_clients,
        settings.partition_strategy,
        settings.seed,
        settings.test_fraction,
        n_groups=settings.dataset.n_groups if settings.dataset.n_groups > 1 else None,
    )

    init = init_model(settings.model, settings.seed)
    global_vec = flatten_model(init).astype(np.float32)

    keys = None
    if settings.mode == AggregationMode.ENCRYPTED:
        # one shared keypair, distributed out-of-band before round 0
        keys = keygen(settings.he, settings.seed)

    server = ServerState(
        mode=settings.mode,
        n_clients=settings.n_clients,
        # round-0 broadcast is the seeded initialization; it contains no
        # private data, so it goes out dense even in encrypted mode
        global_payload=DensePayload(global_vec),
        last_global=global_vec.copy(),
        he_params=settings.he,
        sum_only=settings.train.sum_only,
        weighted=settings.train.weighted,
    )

    clients = []
    for cid in range(settings.n_clients):
        client_seed = int(np.random.default_rng([settings.seed, cid]).integers(0, 2**31))
        clients.append(
            ClientState(
                client_id=cid,
                shard=shards[cid],
                model=unflatten_model(global_vec.copy(), settings.model),
                last_global=global_vec.copy(),
                train=settings.train,
                mode=settings.mode,
                seed=client_seed,
                n_clients=settings.n_clients,
                keys=keys,
                he_params=settings.he,
            )
        )

    evaluator = make_evaluator(settings, test_set, keys)
    ledger = TransferLedger()
    reports = []
    workers = min(n_workers(), settings.n_clients)
    for _ in range(settings.rounds):
        reports.append(
            run_round(
                server, clients, settings.link, ledger, evaluator,
                settings.seconds_per_sample, workers,
            )
        )

    final_vec = (
        evaluator.payload_to_vec(server.global_payload)
        if hasattr(evaluator, "payload_to_vec")
        else np.asarray(server.global_payload.values, np.float32)
    )
    final_model = unflatten_model(final_vec, settings.model)
    test_dice = reports[-1].dice if reports else evaluator(server.global_payload)
    return ExperimentResult(
        settings=settings,
        reports=reports,
        ledger=ledger,
        final_model=final_model,
        test_dice=test_dice,
        shard_sizes=[len(s) for s in shards],
    )


def reports_to_csv(reports: List[RoundReport], n_clients: int, stream) -> None:
    stream.write(f"# schema={ROUNDS_SCHEMA}\n")
    writer = csv.writer(stream, lineterminator="\n")
    header = ["round", "dice", "loss_mean"]
    for c in range(n_clients):
        header += [f"loss_c{c}", f"up_bytes_c{c}", f"down_bytes_c{c}"]
    header += ["down_seconds", "compute_seconds", "up_seconds", "wall_seconds"]
    writer.writerow(header)
    for r in reports:
        row = [r.round_number, repr(r.dice), repr(r.loss_mean)]
        for c in range(n_clients):
            row += [repr(r.client_losses[c]), r.up_bytes[c], r.down_bytes[c]]
        row += [
            repr(r.down_seconds), repr(r.compute_seconds),
            repr(r.up_seconds), repr(r.wall_seconds),
        ]
        writer.writerow(row)


def reports_csv_text(reports: List[RoundReport], n_clients: int) -> str:
    buf = io.StringIO()
    reports_to_csv(reports, n_clients, buf)
    return buf.getvalue()
