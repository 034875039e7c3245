"""Encode/encrypt/aggregate operations over the negacyclic ring.

Values are packed via the canonical embedding: a real vector of length
slot_count (= ring_degree/2) becomes the evaluations of a real polynomial
at the odd powers of a primitive 2N-th complex root of unity. Integer
polynomials are held in RNS form, one uint64 residue row per coefficient
modulus, in coefficient (not NTT) order.

Implemented scheme subset: encryption, decryption, ciphertext addition,
and plaintext-scalar multiplication with one rescale. Nothing else —
no relinearization, rotations, or bootstrapping.
"""

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from ..errors import ConfigError, DataError
from .params import NTT_MIN_DEGREE, HeParams, warn_toy_security
from . import ntt


@dataclass
class Plaintext:
    """RNS-encoded polynomial carrying scaled slot values."""

    rns: np.ndarray  # (n_moduli, N) uint64, coefficient domain
    scale: float
    params: HeParams


@dataclass
class Ciphertext:
    """Pair of RNS polynomials; level counts the remaining rescales."""

    c0: np.ndarray  # (level + 1, N) uint64
    c1: np.ndarray
    scale: float
    level: int
    params: HeParams

    @property
    def slot_count(self) -> int:
        return self.params.slot_count

    def moduli(self) -> Sequence[int]:
        return self.params.coeff_modulus[: self.level + 1]


@dataclass
class KeyPair:
    """Ternary secret and the matching ring-LWE public key.

    NTT-domain copies of the key polynomials are cached per modulus so
    encryption and decryption only transform the fresh randomness.
    """

    secret: np.ndarray  # (N,) int8 in {-1, 0, 1}
    secret_rns: np.ndarray  # (n_moduli, N) uint64
    pk0: np.ndarray
    pk1: np.ndarray
    params: HeParams
    secret_ntt: np.ndarray = None  # (n_moduli, N) or None for schoolbook rings
    pk0_ntt: np.ndarray = None
    pk1_ntt: np.ndarray = None


def _signed_to_rns(coeffs: np.ndarray, moduli) -> np.ndarray:
    """Signed integer coefficients (..., N) to residues (..., M, N)."""
    out = np.empty(coeffs.shape[:-1] + (len(moduli), coeffs.shape[-1]), np.uint64)
    for i, q in enumerate(moduli):
        out[..., i, :] = np.mod(coeffs, q).astype(np.uint64)
    return out


def _embedding_root_powers(params: HeParams):
    n = params.ring_degree
    j = np.arange(n)
    zeta = np.exp(1j * np.pi * j / n)  # powers of the primitive 2N-th root
    return zeta, np.conj(zeta)


def encode_batch(values: np.ndarray, params: HeParams) -> np.ndarray:
    """Vectors (B, <= slot_count) -> signed coefficient matrix (B, N)."""
    n = params.ring_degree
    slots = params.slot_count
    vals = np.atleast_2d(np.asarray(values, np.float64))
    if vals.shape[1] > slots:
        raise DataError(f"vector length {vals.shape[1]} exceeds slot count {slots}")
    if vals.size and np.max(np.abs(vals)) > params.value_bound:
        raise DataError(
            f"encoded magnitude exceeds value_bound {params.value_bound}"
        )
    if vals.shape[1] < slots:
        vals = np.pad(vals, ((0, 0), (0, slots - vals.shape[1])))
    evals = np.empty((vals.shape[0], n), np.complex128)
    evals[:, :slots] = vals
    evals[:, slots:] = np.conj(vals[:, ::-1])
    _, zeta_inv = _embedding_root_powers(params)
    t = np.fft.fft(evals, axis=1) / n
    coeffs = np.real(t * zeta_inv) * params.scale
    return np.rint(coeffs).astype(np.int64)


def decode_batch(coeffs: np.ndarray, params: HeParams, scale: float) -> np.ndarray:
    """Signed coefficient matrix (B, N) -> slot values (B, slot_count)."""
    n = params.ring_degree
    zeta, _ = _embedding_root_powers(params)
    t = coeffs.astype(np.float64) * zeta
    evals = np.fft.ifft(t, axis=1) * n
    return np.real(evals[:, : params.slot_count]) / scale


def _rns_to_signed_f64(rns: np.ndarray, moduli) -> np.ndarray:
    """Centered CRT lift (..., M, N) -> float64 (..., N).

    Exact for valid ciphertext payloads (|value| < q0); garbage inputs
    (e.g. a wrong secret key) come back as large garbage, as they should.
    """
    q0 = moduli[0]
    x0 = rns[..., 0, :]
    if len(moduli) == 1:
        signed = x0.astype(np.float64)
        return np.where(x0 > q0 // 2, signed - float(q0), signed)
    if len(moduli) != 2:
        raise ConfigError("only one- and two-modulus decode paths are supported")
    q1 = moduli[1]
    inv_q0 = pow(q0 % q1, q1 - 2, q1)
    u = ntt.mulmod_vec(ntt.submod_vec(rns[..., 1, :], np.mod(x0, q1), q1), inv_q0, q1)
    u_c = u.astype(np.float64)
    u_c = np.where(u > q1 // 2, u_c - float(q1), u_c)
    return x0.astype(np.float64) + float(q0) * u_c


def encode(values, params: HeParams) -> Plaintext:
    """Pack a real vector (length <= slot_count) into a plaintext."""
    coeffs = encode_batch(np.asarray(values, np.float64)[None], params)[0]
    return Plaintext(_signed_to_rns(coeffs, params.coeff_modulus), params.scale, params)


def decode(pt: Plaintext) -> np.ndarray:
    """Recover all slot values of a plaintext."""
    moduli = pt.params.coeff_modulus[: pt.rns.shape[0]]
    signed = _rns_to_signed_f64(pt.rns[None], moduli)
    return decode_batch(signed, pt.params, pt.scale)[0]


def _ring_mul_coeff(a: np.ndarray, b: np.ndarray, q: int) -> np.ndarray:
    return ntt.negacyclic_mul(a, b, q)


def keygen(params: HeParams, seed: int) -> KeyPair:
    """Ternary secret, uniform public randomness, Gaussian noise."""
    warn_toy_security()
    rng = np.random.default_rng(seed)
    n = params.ring_degree
    moduli = params.coeff_modulus
    secret = rng.integers(-1, 2, n, dtype=np.int64)
    noise = np.rint(rng.normal(0.0, params.noise_sigma, n)).astype(np.int64)

    m = len(moduli)
    s_rns = _signed_to_rns(secret, moduli)
    pk0 = np.empty((m, n), np.uint64)
    pk1 = np.empty((m, n), np.uint64)
    for i, q in enumerate(moduli):
        a = rng.integers(0, q, n, dtype=np.uint64)
        a_s = _ring_mul_coeff(a, s_rns[i], q)
        pk0[i] = ntt.submod_vec(np.mod(noise, q).astype(np.uint64), a_s, q)
        pk1[i] = a

    kp = KeyPair(secret.astype(np.int8), s_rns, pk0, pk1, params)
    if n >= NTT_MIN_DEGREE:
        kp.secret_ntt = np.stack(
            [ntt.get_plan(q, n).to_eval(s_rns[i]) for i, q in enumerate(moduli)]
        )
        kp.pk0_ntt = np.stack(
            [ntt.get_plan(q, n).to_eval(pk0[i]) for i, q in enumerate(moduli)]
        )
        kp.pk1_ntt = np.stack(
            [ntt.get_plan(q, n).to_eval(pk1[i]) for i, q in enumerate(moduli)]
        )
    return kp


def encrypt_batch(
    coeffs: np.ndarray, keys: KeyPair, rng: np.random.Generator
) -> List[Ciphertext]:
    """Encrypt a batch of signed coefficient matrices (B, N) at full level."""
    params = keys.params
    n = params.ring_degree
    moduli = params.coeff_modulus
    m = len(moduli)
    b = coeffs.shape[0]

    v = rng.integers(-1, 2, (b, n), dtype=np.int64)
    e0 = np.rint(rng.normal(0.0, params.noise_sigma, (b, n))).astype(np.int64)
    e1 = np.rint(rng.normal(0.0, params.noise_sigma, (b, n))).astype(np.int64)

    c0 = np.empty((b, m, n), np.uint64)
    c1 = np.empty((b, m, n), np.uint64)
    for i, q in enumerate(moduli):
        m_i = np.mod(coeffs, q).astype(np.uint64)
        e0_i = np.mod(e0, q).astype(np.uint64)
        e1_i = np.mod(e1, q).astype(np.uint64)
        if n >= NTT_MIN_DEGREE:
            plan = ntt.get_plan(q, n)
            v_hat = np.mod(v, q).astype(np.uint64)
            plan.forward(v_hat)
            vp0 = plan.pointwise(v_hat, keys.pk0_ntt[i])
            vp1 = plan.pointwise(v_hat, keys.pk1_ntt[i])
            plan.inverse(vp0)
            plan.inverse(vp1)
        else:
            v_i = np.mod(v, q).astype(np.uint64)
            vp0 = np.stack([ntt.negacyclic_mul_schoolbook(row, keys.pk0[i], q) for row in v_i])
            vp1 = np.stack([ntt.negacyclic_mul_schoolbook(row, keys.pk1[i], q) for row in v_i])
        c0[:, i] = ntt.addmod_vec(ntt.addmod_vec(vp0, m_i, q), e0_i, q)
        c1[:, i] = ntt.addmod_vec(vp1, e1_i, q)

    return [
        Ciphertext(c0[j].copy(), c1[j].copy(), params.scale, m - 1, params)
        for j in range(b)
    ]


def _decrypt_rns(cts: List[Ciphertext], keys: KeyPair) -> np.ndarray:
    """c0 + c1 * s per remaining modulus, as residues (B, M, N)."""
    params = keys.params
    if any(ct.params != params for ct in cts):
        raise ConfigError("ciphertext parameters do not match the key")
    level = cts[0].level
    if any(ct.level != level for ct in cts):
        raise ConfigError("mixed ciphertext levels in one batch")
    n = params.ring_degree
    moduli = params.coeff_modulus[: level + 1]
    b = len(cts)

    msg = np.empty((b, len(moduli), n), np.uint64)
    c1 = np.stack([ct.c1 for ct in cts])
    c0 = np.stack([ct.c0 for ct in cts])
    for i, q in enumerate(moduli):
        if n >= NTT_MIN_DEGREE:
            plan = ntt.get_plan(q, n)
            c1_hat = c1[:, i].copy()
            plan.forward(c1_hat)
            prod = plan.pointwise(c1_hat, keys.secret_ntt[i])
            plan.inverse(prod)
        else:
            prod = np.stack(
                [ntt.negacyclic_mul_schoolbook(row, keys.secret_rns[i], q) for row in c1[:, i]]
            )
        msg[:, i] = ntt.addmod_vec(c0[:, i], prod, q)
    return msg


def decrypt_batch(cts: List[Ciphertext], keys: KeyPair) -> np.ndarray:
    """Decrypt same-level ciphertexts to signed coefficient rows (B, N)."""
    level = cts[0].level
    moduli = keys.params.coeff_modulus[: level + 1]
    return _rns_to_signed_f64(_decrypt_rns(cts, keys), moduli)


def encrypt(pt: Plaintext, keys: KeyPair, rng: np.random.Generator) -> Ciphertext:
    """Public-key encryption with fresh randomness from ``rng``."""
    if pt.params != keys.params:
        raise ConfigError("plaintext parameters do not match the key")
    moduli = pt.params.coeff_modulus
    signed = _rns_to_signed_f64(pt.rns[None], moduli)[0]
    return encrypt_batch(np.rint(signed).astype(np.int64)[None], keys, rng)[0]


def decrypt(ct: Ciphertext, keys: KeyPair) -> Plaintext:
    return Plaintext(_decrypt_rns([ct], keys)[0], ct.scale, ct.params)


def ct_add(a: Ciphertext, b: Ciphertext) -> Ciphertext:
    """Slotwise sum; requires equal scale and level."""
    if a.params != b.params:
        raise ConfigError("ciphertext parameter mismatch")
    if a.level != b.level:
        raise ConfigError(f"level mismatch: {a.level} != {b.level}")
    if a.scale != b.scale:
        raise ConfigError(f"scale mismatch: {a.scale} != {b.scale}")
    moduli = a.moduli()
    c0 = np.empty_like(a.c0)
    c1 = np.empty_like(a.c1)
    for i, q in enumerate(moduli):
        c0[i] = ntt.addmod_vec(a.c0[i], b.c0[i], q)
        c1[i] = ntt.addmod_vec(a.c1[i], b.c1[i], q)
    return Ciphertext(c0, c1, a.scale, a.level, a.params)


def ct_mul_plain(ct: Ciphertext, scalar: float) -> Ciphertext:
    """Multiply the packed vector by a plaintext scalar.

    The scalar is encoded as a constant polynomial at the scale of the
    last prime in the modulus chain, and that prime is dropped by an exact
    RNS rescale — so the output scale equals the input scale.
    """
    if abs(scalar) > ct.params.value_bound:
        raise DataError(f"|scalar| exceeds value_bound {ct.params.value_bound}")
    if ct.level < 1:
        raise ConfigError("ciphertext level exhausted; no prime left to rescale by")
    moduli = list(ct.moduli())
    q_last = moduli[-1]
    sc = round(scalar * q_last)

    scaled0 = np.empty_like(ct.c0)
    scaled1 = np.empty_like(ct.c1)
    for i, q in enumerate(moduli):
        sc_i = np.uint64(sc % q)
        scaled0[i] = ntt.mulmod_vec(ct.c0[i], sc_i, q)
        scaled1[i] = ntt.mulmod_vec(ct.c1[i], sc_i, q)

    # rescale: divide by q_last with centered rounding, drop the last prime
    keep = moduli[:-1]
    half = q_last // 2
    new0 = np.empty((len(keep), ct.c0.shape[1]), np.uint64)
    new1 = np.empty_like(new0)
    for poly_in, poly_out in ((scaled0, new0), (scaled1, new1)):
        t = poly_in[-1]
        t_signed = t.astype(np.int64)
        t_signed = np.where(t > half, t_signed - q_last, t_signed)
        for i, q in enumerate(keep):
            inv = pow(q_last % q, q - 2, q)
            diff = np.mod(poly_in[i].astype(np.int64) - t_signed, q).astype(np.uint64)
            poly_out[i] = ntt.mulmod_vec(diff, inv, q)
    return Ciphertext(new0, new1, ct.scale, ct.level - 1, ct.params)


def chunk_count(length: int, params: HeParams) -> int:
    return max(1, -(-length // params.slot_count)) if length else 0


def chunk_encrypt(
    vec: np.ndarray, keys: KeyPair, rng: np.random.Generator
) -> List[Ciphertext]:
    """Encrypt a long vector as ceil(len / slot_count) ciphertexts."""
    params = keys.params
    slots = params.slot_count
    v = np.asarray(vec, np.float64).ravel()
    n_chunks = chunk_count(v.size, params)
    padded = np.zeros(n_chunks * slots, np.float64)
    padded[: v.size] = v
    coeffs = encode_batch(padded.reshape(n_chunks, slots), params)
    return encrypt_batch(coeffs, keys, rng)


def chunk_decrypt(
    cts: List[Ciphertext], keys: KeyPair, original_length: int
) -> np.ndarray:
    """Inverse of chunk_encrypt (plus any homomorphic ops in between)."""
    if not cts:
        if original_length:
            raise DataError("no ciphertexts for a non-empty vector")
        return np.zeros(0, np.float32)
    slots = keys.params.slot_count
    if original_length > len(cts) * slots:
        raise DataError(
            f"original_length {original_length} exceeds {len(cts)} chunks"
        )
    if original_length <= (len(cts) - 1) * slots:
        raise DataError(f"too many ciphertexts for original_length {original_length}")
    signed = decrypt_batch(cts, keys)
    values = decode_batch(signed, keys.params, cts[0].scale)
    return values.ravel()[:original_length].astype(np.float32)
