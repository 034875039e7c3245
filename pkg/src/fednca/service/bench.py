"""Micro-benchmarks: encryption/decryption scaling and codec costs.

Long vectors are processed in windows of whole ciphertext chunks so the
benchmark never materializes gigabytes of ciphertext; the chunk count still
equals ceil(length / slot_count) exactly.
"""

import time
from statistics import median
from typing import List

import numpy as np

from ..compression import dequantize, quantize_4bit, topk_sparsify
from ..config import ExperimentConfig
from ..fl import DensePayload
from ..fl.payloads import encode_payload
from ..he import chunk_decrypt, chunk_encrypt, ciphertext_num_bytes, keygen
from ..nca import flatten_model, init_model, param_count
from ..fl.protocol import weight_segments
from .schemas import (
    BenchCompressionResponse,
    BenchCompressionRow,
    BenchHeResponse,
    BenchHeRow,
)

WINDOW_CHUNKS = 512


def _he_roundtrip_seconds(length: int, keys, seed: int):
    """One timed encrypt+decrypt pass over a random vector of this length."""
    params = keys.params
    slots = params.slot_count
    window = WINDOW_CHUNKS * slots
    rng_vals = np.random.default_rng([seed, length])
    enc = dec = 0.0
    chunks = 0
    pos = 0
    while pos < length:
        n = min(window, length - pos)
        vals = rng_vals.uniform(-1.0, 1.0, n).astype(np.float32)
        enc_rng = np.random.default_rng([seed, length, pos])
        t0 = time.perf_counter()
        cts = chunk_encrypt(vals, keys, enc_rng)
        t1 = time.perf_counter()
        back = chunk_decrypt(cts, keys, n)
        t2 = time.perf_counter()
        if np.max(np.abs(back - vals)) > 1e-3:
            raise AssertionError("benchmark round trip exceeded tolerance")
        enc += t1 - t0
        dec += t2 - t1
        chunks += len(cts)
        pos += n
    return enc, dec, chunks


def bench_he_run(cfg: ExperimentConfig) -> BenchHeResponse:
    """Encrypt/decrypt timings at the model size and each baseline size."""
    params = cfg.he.to_core()
    keys = keygen(params, seed=cfg.seed)
    model_params = param_count(cfg.model.to_core())
    sizes = [("model", model_params)] + [
        (b.name, b.param_count) for b in cfg.baselines
    ]
    repeats = cfg.bench.repeats

    raw = []
    for name, length in sizes:
        encs, decs = [], []
        chunks = None
        for rep in range(repeats):
            enc, dec, n_chunks = _he_roundtrip_seconds(length, keys, cfg.seed + rep)
            encs.append(enc)
            decs.append(dec)
            chunks = n_chunks
        raw.append((name, length, chunks, median(encs), median(decs)))

    _, _, base_chunks, base_enc, base_dec = raw[0]
    base_total = base_enc + base_dec
    rows = [
        BenchHeRow(
            name=name,
            vector_length=length,
            ciphertext_count=chunks,
            encrypt_ms=enc * 1e3,
            decrypt_ms=dec * 1e3,
            bytes=chunks * ciphertext_num_bytes(params),
            count_ratio_vs_model=chunks / base_chunks,
            time_ratio_vs_model=(enc + dec) / base_total if base_total else float("inf"),
        )
        for name, length, chunks, enc, dec in raw
    ]
    return BenchHeResponse(repeats=repeats, slot_count=params.slot_count, rows=rows)


def bench_compression_run(cfg: ExperimentConfig) -> BenchCompressionResponse:
    """Payload sizes and round-trip errors per codec at each size."""
    model_cfg = cfg.model.to_core()
    model_vec = flatten_model(init_model(model_cfg, cfg.seed)).astype(np.float32)
    k = cfg.training.k_percent

    subjects = [("model", model_vec, weight_segments(model_cfg))]
    for b in cfg.baselines:
        blob = np.random.default_rng([cfg.seed, b.param_count]).standard_normal(
            b.param_count
        ).astype(np.float32)
        subjects.append((b.name, blob, None))

    model_dense_bytes = len(encode_payload(DensePayload(model_vec)))
    rows: List[BenchCompressionRow] = []
    for name, vec, segments in subjects:
        ref = np.zeros_like(vec)

        dense_bytes = len(encode_payload(DensePayload(vec)))
        rows.append(
            BenchCompressionRow(
                name=name, codec="dense", vector_length=vec.size,
                bytes=dense_bytes, mib=dense_bytes / 2**20,
                max_roundtrip_error=0.0,
                ratio_vs_model_dense=dense_bytes / model_dense_bytes,
            )
        )

        q = quantize_4bit(vec, segments)
        q_bytes = len(encode_payload(q))
        q_err = float(np.max(np.abs(dequantize(q) - vec))) if vec.size else 0.0
        rows.append(
            BenchCompressionRow(
                name=name, codec="4bit", vector_length=vec.size,
                bytes=q_bytes, mib=q_bytes / 2**20,
                max_roundtrip_error=q_err,
                ratio_vs_model_dense=q_bytes / model_dense_bytes,
            )
        )

        s = topk_sparsify(vec, ref, k)
        s_bytes = len(encode_payload(s))
        dense_rec = ref.copy()
        dense_rec[s.indices] = s.values
        s_err = float(np.max(np.abs(dense_rec - vec))) if vec.size else 0.0
        rows.append(
            BenchCompressionRow(
                name=name, codec="topk", vector_length=vec.size,
                bytes=s_bytes, mib=s_bytes / 2**20,
                max_roundtrip_error=s_err,
                ratio_vs_model_dense=s_bytes / model_dense_bytes,
            )
        )
    return BenchCompressionResponse(k_percent=k, rows=rows)
