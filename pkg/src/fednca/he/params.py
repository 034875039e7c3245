"""Scheme parameters and prime generation for the polynomial ring."""

import warnings
from dataclasses import dataclass, field
from typing import Tuple

from ..errors import ConfigError

# below this ring degree polynomial products use the exact schoolbook path
NTT_MIN_DEGREE = 512

# 50-bit primes p ≡ 1 (mod 2*4096), found descending from 2^50
DEFAULT_RING_DEGREE = 4096
DEFAULT_COEFF_MODULUS = (1125899906826241, 1125899906629633)
DEFAULT_SCALE = float(2**30)


class ToySecurityWarning(UserWarning):
    """Raised once at keygen: these parameters protect nothing."""


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
    for p in small:
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    # deterministic Miller-Rabin bases, valid for n < 3.3e24
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def find_ntt_primes(bits: int, ring_degree: int, count: int) -> Tuple[int, ...]:
    """Largest ``count`` primes of the given bit length that are ≡ 1 modulo
    2*ring_degree (so the negacyclic transform exists)."""
    m = 2 * ring_degree
    out = []
    p = (1 << bits) // m * m + 1
    while len(out) < count and p > (1 << (bits - 1)):
        if p.bit_length() == bits and _is_prime(p):
            out.append(p)
        p -= m
    if len(out) < count:
        raise ConfigError(f"could not find {count} {bits}-bit primes for ring {ring_degree}")
    return tuple(out)


@dataclass(frozen=True)
class HeParams:
    """Ring degree, RNS coefficient modulus, and encoding scale.

    slot_count = ring_degree / 2 real values per ciphertext. The scale must
    stay below every coefficient modulus so one rescale is always possible.
    """

    ring_degree: int = DEFAULT_RING_DEGREE
    coeff_modulus: Tuple[int, ...] = DEFAULT_COEFF_MODULUS
    scale: float = DEFAULT_SCALE
    value_bound: float = 64.0
    noise_sigma: float = 3.2
    security_grade: str = "toy"

    def __post_init__(self):
        n = self.ring_degree
        if n < 8 or n & (n - 1):
            raise ConfigError("ring_degree must be a power of two >= 8")
        if not self.coeff_modulus:
            raise ConfigError("coeff_modulus must list at least one prime")
        if len(set(self.coeff_modulus)) != len(self.coeff_modulus):
            raise ConfigError("coefficient moduli must be distinct")
        for q in self.coeff_modulus:
            if q >= 1 << 52:
                raise ConfigError("coefficient moduli above 52 bits are unsupported")
            if not _is_prime(q):
                raise ConfigError(f"coefficient modulus {q} is not prime")
            if n >= NTT_MIN_DEGREE and (q - 1) % (2 * n):
                raise ConfigError(
                    f"modulus {q} is not ≡ 1 mod 2*{n}; use find_ntt_primes()"
                )
        if not self.scale >= 2.0:
            raise ConfigError("scale must be >= 2")
        if self.scale >= min(self.coeff_modulus):
            raise ConfigError("scale must be smaller than every coefficient modulus")
        if self.value_bound <= 0:
            raise ConfigError("value_bound must be positive")
        if self.security_grade not in ("toy", "hardened"):
            raise ConfigError("security_grade must be 'toy' or 'hardened'")
        if self.security_grade == "hardened":
            raise ConfigError(
                "hardened parameter sets are not provided by this library; "
                "it implements the aggregation protocol, not vetted cryptography"
            )

    @property
    def slot_count(self) -> int:
        return self.ring_degree // 2

    @property
    def max_level(self) -> int:
        return len(self.coeff_modulus) - 1


def warn_toy_security():
    warnings.warn(
        "homomorphic-encryption parameters are desk-scale and NOT secure; "
        "do not protect real data with them",
        ToySecurityWarning,
        stacklevel=3,
    )
