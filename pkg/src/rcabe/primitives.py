"""Deterministic randomness, hash oracles, authenticated encryption, attestation.

Everything random in the library flows through `SeededRng`; a fixed seed
makes every downstream artifact byte-reproducible.  The two hash oracles
(`to_scalar`, `to_symkey`) are domain-separated SHA-256 constructions.
"""

from __future__ import annotations

import hashlib
import struct

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

SYM_KEY_BYTES = 32
_NONCE_BYTES = 12


class IntegrityError(Exception):
    """Authenticated decryption failed (wrong key or tampered ciphertext)."""


class AttestationError(Exception):
    """Certificate attestation did not verify."""


class SeededRng:
    """SHA-256 counter-mode byte stream.

    Child streams (`child(tag)`) are independent of the parent and of each
    other, so concurrent subsystems can draw without interleaving hazards.
    """

    def __init__(self, seed: bytes, tag: bytes = b"root") -> None:
        if not seed:
            raise ValueError("seed must be nonempty")
        self._key = hashlib.sha256(b"rcabe-rng\x00" + tag + b"\x00" + seed).digest()
        self._counter = 0
        self._buf = b""

    def child(self, tag: str) -> "SeededRng":
        return SeededRng(self._key, tag=b"child:" + tag.encode())

    def take(self, n: int) -> bytes:
        while len(self._buf) < n:
            block = hashlib.sha256(self._key + struct.pack(">Q", self._counter)).digest()
            self._counter += 1
            self._buf += block
        out, self._buf = self._buf[:n], self._buf[n:]
        return out

    def int_below(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection sampling."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        nbytes = (bound.bit_length() + 7) // 8 + 1
        limit = (1 << (8 * nbytes)) - ((1 << (8 * nbytes)) % bound)
        while True:
            x = int.from_bytes(self.take(nbytes), "big")
            if x < limit:
                return x % bound

    def scalar(self, order: int) -> int:
        """Uniform nonzero scalar in [1, order)."""
        return 1 + self.int_below(order - 1)

    def uniform(self, lo: float, hi: float) -> float:
        frac = int.from_bytes(self.take(8), "big") / float(1 << 64)
        return lo + (hi - lo) * frac


class HashSuite:
    """The two hash oracles of the system, bound to a scalar-group order.

    `to_scalar` never returns zero: outputs are rejection-sampled into
    [1, order), which keeps every hash value usable as a divisor.
    """

    def __init__(self, order: int) -> None:
        self.order = order

    def to_scalar(self, data: bytes, tag: str = "H") -> int:
        prefix = b"rcabe-hash\x00" + tag.encode() + b"\x00"
        ctr = 0
        while True:
            digest = hashlib.sha256(prefix + struct.pack(">I", ctr) + data).digest()
            x = int.from_bytes(digest + hashlib.sha256(b"x" + digest).digest(), "big")
            x %= self.order
            if x != 0:
                return x
            ctr += 1

    def to_symkey(self, data: bytes) -> bytes:
        return hashlib.sha256(b"rcabe-hash\x00H1\x00" + data).digest()[:SYM_KEY_BYTES]


def digest(data: bytes, tag: str = "generic") -> bytes:
    return hashlib.sha256(b"rcabe-digest\x00" + tag.encode() + b"\x00" + data).digest()


def sym_encrypt(key: bytes, plaintext: bytes, rng: SeededRng) -> bytes:
    """AES-GCM encrypt; output is nonce || ciphertext || tag."""
    if len(key) != SYM_KEY_BYTES:
        raise ValueError("symmetric key must be %d bytes" % SYM_KEY_BYTES)
    nonce = rng.take(_NONCE_BYTES)
    return nonce + AESGCM(key).encrypt(nonce, plaintext, None)


def sym_decrypt(key: bytes, blob: bytes) -> bytes:
    if len(key) != SYM_KEY_BYTES:
        raise ValueError("symmetric key must be %d bytes" % SYM_KEY_BYTES)
    if len(blob) < _NONCE_BYTES + 16:
        raise IntegrityError("ciphertext too short")
    try:
        return AESGCM(key).decrypt(blob[:_NONCE_BYTES], blob[_NONCE_BYTES:], None)
    except InvalidTag as exc:
        raise IntegrityError("authenticated decryption failed") from exc


class AttestationKey:
    """Ed25519 signing identity for the trusted authority."""

    def __init__(self, seed32: bytes) -> None:
        self._priv = Ed25519PrivateKey.from_private_bytes(seed32)
        self.public_bytes = self._priv.public_key().public_bytes_raw()

    @classmethod
    def from_rng(cls, rng: SeededRng) -> "AttestationKey":
        return cls(rng.take(32))

    def sign(self, message: bytes) -> bytes:
        return self._priv.sign(message)


def verify_attestation(public_bytes: bytes, message: bytes, signature: bytes) -> None:
    try:
        Ed25519PublicKey.from_public_bytes(public_bytes).verify(signature, message)
    except (InvalidSignature, ValueError) as exc:
        raise AttestationError("attestation signature invalid") from exc
