"""Ciphertext wire format: round trips, exact sizes, corruption handling."""

import warnings

import numpy as np
import pytest

from fednca.errors import FormatError
from fednca.he import (
    HeParams,
    ToySecurityWarning,
    ciphertext_num_bytes,
    ct_mul_plain,
    deserialize,
    encode,
    encrypt,
    keygen,
    serialize,
)
from fednca.he.wire import HEADER_BYTES


@pytest.fixture(scope="module")
def params():
    return HeParams()


@pytest.fixture(scope="module")
def keys(params):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ToySecurityWarning)
        return keygen(params, seed=3)


def fresh_ct(params, keys, seed=0):
    vals = np.random.default_rng(seed).uniform(-1, 1, 16)
    return encrypt(encode(vals, params), keys, np.random.default_rng(seed + 1))


def test_round_trip_identity(params, keys):
    ct = fresh_ct(params, keys)
    blob = serialize(ct)
    back = deserialize(blob, params)
    assert serialize(back) == blob
    np.testing.assert_array_equal(back.c0, ct.c0)
    np.testing.assert_array_equal(back.c1, ct.c1)
    assert back.scale == ct.scale and back.level == ct.level


def test_size_formula(params, keys):
    ct = fresh_ct(params, keys)
    moduli_count = ct.level + 1
    assert len(serialize(ct)) == 2 * params.ring_degree * moduli_count * 8 + HEADER_BYTES
    assert len(serialize(ct)) == ciphertext_num_bytes(params, ct.level)
    dropped = ct_mul_plain(ct, 0.5)
    assert len(serialize(dropped)) == ciphertext_num_bytes(params, ct.level - 1)


def test_size_deterministic_across_ciphertexts(params, keys):
    sizes = {len(serialize(fresh_ct(params, keys, seed=s))) for s in range(4)}
    assert len(sizes) == 1


def test_truncated_buffer_rejected(params, keys):
    blob = serialize(fresh_ct(params, keys))
    with pytest.raises(FormatError):
        deserialize(blob[:-1], params)
    with pytest.raises(FormatError):
        deserialize(blob[:10], params)


def test_bad_magic_rejected(params, keys):
    blob = bytearray(serialize(fresh_ct(params, keys)))
    blob[:4] = b"XXXX"
    with pytest.raises(FormatError):
        deserialize(bytes(blob), params)


def test_out_of_range_residue_rejected(params, keys):
    blob = bytearray(serialize(fresh_ct(params, keys)))
    blob[HEADER_BYTES : HEADER_BYTES + 8] = b"\xff" * 8
    with pytest.raises(FormatError):
        deserialize(bytes(blob), params)
