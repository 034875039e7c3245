"""Approximate additively homomorphic encryption over real vectors.

The scheme packs real values into the slots of a negacyclic polynomial
ring (canonical embedding), encrypts with ring-LWE noise, and supports
exactly what encrypted federated averaging needs: ciphertext addition and
multiplication by a plaintext scalar with one rescale.

The default parameters are DESK-SCALE ONLY and carry no security claim;
see ToySecurityWarning.
"""

from .params import HeParams, ToySecurityWarning, find_ntt_primes
from .ckks import (
    Ciphertext,
    KeyPair,
    Plaintext,
    chunk_count,
    chunk_decrypt,
    chunk_encrypt,
    ct_add,
    ct_mul_plain,
    decode,
    decrypt,
    encode,
    encrypt,
    keygen,
)
from .wire import ciphertext_num_bytes, deserialize, serialize

__all__ = [
    "Ciphertext",
    "HeParams",
    "KeyPair",
    "Plaintext",
    "ToySecurityWarning",
    "chunk_count",
    "chunk_decrypt",
    "chunk_encrypt",
    "ciphertext_num_bytes",
    "ct_add",
    "ct_mul_plain",
    "decode",
    "decrypt",
    "deserialize",
    "encode",
    "encrypt",
    "find_ntt_primes",
    "keygen",
    "serialize",
]
