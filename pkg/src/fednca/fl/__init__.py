"""Federated protocol: payload wire formats, client/server updates, rounds."""

from .payloads import (
    DensePayload,
    EncryptedPayload,
    decode_payload,
    encode_payload,
    payload_num_bytes,
    payload_tag,
)
from .protocol import AggregationMode, ClientState, ServerState, client_update, server_update
from .experiment import ExperimentResult, RoundReport, run_experiment, run_round

__all__ = [
    "AggregationMode",
    "ClientState",
    "DensePayload",
    "EncryptedPayload",
    "ExperimentResult",
    "RoundReport",
    "ServerState",
    "client_update",
    "decode_payload",
    "encode_payload",
    "payload_num_bytes",
    "payload_tag",
    "run_experiment",
    "run_round",
    "server_update",
]
