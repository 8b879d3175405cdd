"""Cryptographic primitives for the AKA laboratory.

Two families live here:

- ECIES "Profile A" identity concealment: X25519 key agreement (RFC 7748),
  ANSI X9.63 key expansion with SHA-256, AES-128-CTR encryption and an
  HMAC-SHA-256 integrity tag.
- The keyed authentication functions f1/f2/f5/f1*/f5* plus RES*/HXRES*
  derivation.  Each f-function is a domain-tagged HMAC-SHA-256 keyed by the
  subscriber key K and truncated to the TS 33.501 field width, which keeps
  every member of the family an independent keyed PRF.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
from dataclasses import dataclass
from random import Random

from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric.x25519 import (
    X25519PrivateKey,
    X25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from cryptography.hazmat.primitives.kdf.x963kdf import X963KDF

KEY_LEN = 16            # long-term subscriber key K
CURVE_KEY_LEN = 32      # X25519 scalar / point
SHARED_SECRET_LEN = 32
RAND_LEN = 16
SQN_LEN = 6
AMF_LEN = 2
MAC_LEN = 8
AK_LEN = 6
RES_LEN = 8
RES_STAR_LEN = 16
HXRES_STAR_LEN = 16
ECIES_TAG_LEN = 32
MAX_PLAINTEXT_LEN = 256
MAX_KDF_LEN = 1024

# X9.63 output split: AES-128-CTR key followed by the HMAC-SHA-256 key.
_ECIES_ENC_KEY_LEN = 16
_ECIES_MAC_KEY_LEN = 32
_ECIES_KEY_MATERIAL_LEN = _ECIES_ENC_KEY_LEN + _ECIES_MAC_KEY_LEN

# Fresh AES key per envelope, so the zero initial counter block is safe.
_CTR_ZERO_IV = b"\x00" * 16


class CryptoError(Exception):
    """Base class for failures inside the crypto suite."""


class DegenerateKeyError(CryptoError):
    """Diffie-Hellman produced the all-zero shared secret."""


class IntegrityError(CryptoError):
    """Envelope tag verification failed; no plaintext is released."""


@dataclass(frozen=True)
class KeyPair:
    """X25519 key pair; ``public`` is the base-point multiple of ``secret``."""

    secret: bytes
    public: bytes


@dataclass(frozen=True)
class EciesEnvelope:
    """Sealed payload: ephemeral public key, CTR ciphertext, HMAC tag."""

    ephemeral_public: bytes
    ciphertext: bytes
    tag: bytes

    def __post_init__(self) -> None:
        _check_len("ephemeral_public", self.ephemeral_public, CURVE_KEY_LEN)
        _check_len("tag", self.tag, ECIES_TAG_LEN)


def _check_len(name: str, value: bytes, expected: int) -> None:
    if not isinstance(value, (bytes, bytearray)):
        raise ValueError(f"{name} must be bytes, got {type(value).__name__}")
    if len(value) != expected:
        raise ValueError(f"{name} must be {expected} bytes, got {len(value)}")


def xor_bytes(a: bytes, b: bytes) -> bytes:
    if len(a) != len(b):
        raise ValueError(f"xor operands differ in length: {len(a)} vs {len(b)}")
    return bytes(x ^ y for x, y in zip(a, b))


def generate_keypair(rng: Random | None = None) -> KeyPair:
    """Generate an X25519 key pair, optionally from a seeded RNG.

    Passing ``rng`` makes key generation reproducible for scenario replay;
    the default draws from the OS CSPRNG.
    """
    secret = rng.randbytes(CURVE_KEY_LEN) if rng is not None else secrets.token_bytes(CURVE_KEY_LEN)
    public = X25519PrivateKey.from_private_bytes(secret).public_key().public_bytes_raw()
    return KeyPair(secret=secret, public=public)


def derive_shared_secret(my_secret: bytes, their_public: bytes) -> bytes:
    """X25519 Diffie-Hellman: both sides derive the same 32-byte secret."""
    _check_len("my_secret", my_secret, CURVE_KEY_LEN)
    _check_len("their_public", their_public, CURVE_KEY_LEN)
    try:
        shared = X25519PrivateKey.from_private_bytes(my_secret).exchange(
            X25519PublicKey.from_public_bytes(their_public)
        )
    except ValueError as exc:
        raise DegenerateKeyError(f"degenerate Diffie-Hellman result: {exc}") from exc
    if shared == b"\x00" * SHARED_SECRET_LEN:
        raise DegenerateKeyError("all-zero Diffie-Hellman output")
    return shared


def kdf_expand(z: bytes, shared_info: bytes, out_len: int) -> bytes:
    """ANSI X9.63 counter-mode expansion of a shared secret with SHA-256."""
    _check_len("z", z, SHARED_SECRET_LEN)
    if not 1 <= out_len <= MAX_KDF_LEN:
        raise ValueError(f"out_len must be in 1..{MAX_KDF_LEN}, got {out_len}")
    return X963KDF(algorithm=hashes.SHA256(), length=out_len, sharedinfo=shared_info).derive(z)


def _ecies_keys(z: bytes, ephemeral_public: bytes) -> tuple[bytes, bytes]:
    material = kdf_expand(z, ephemeral_public, _ECIES_KEY_MATERIAL_LEN)
    return material[:_ECIES_ENC_KEY_LEN], material[_ECIES_ENC_KEY_LEN:]


def _aes_ctr(key: bytes, data: bytes) -> bytes:
    cipher = Cipher(algorithms.AES(key), modes.CTR(_CTR_ZERO_IV)).encryptor()
    return cipher.update(data) + cipher.finalize()


def ecies_conceal(plaintext: bytes, recipient_public: bytes, rng: Random | None = None) -> EciesEnvelope:
    """Seal ``plaintext`` to ``recipient_public`` under a fresh ephemeral key.

    The ciphertext is exactly as long as the plaintext (counter mode); the
    tag covers the ciphertext under the derived HMAC key.
    """
    if len(plaintext) > MAX_PLAINTEXT_LEN:
        raise ValueError(f"plaintext exceeds {MAX_PLAINTEXT_LEN} bytes: {len(plaintext)}")
    ephemeral = generate_keypair(rng)
    z = derive_shared_secret(ephemeral.secret, recipient_public)
    enc_key, mac_key = _ecies_keys(z, ephemeral.public)
    ciphertext = _aes_ctr(enc_key, plaintext)
    tag = hmac.new(mac_key, ciphertext, hashlib.sha256).digest()
    return EciesEnvelope(ephemeral_public=ephemeral.public, ciphertext=ciphertext, tag=tag)


def ecies_reveal(envelope: EciesEnvelope, recipient_secret: bytes) -> bytes:
    """Open an envelope; the tag must verify before any plaintext is released."""
    z = derive_shared_secret(recipient_secret, envelope.ephemeral_public)
    enc_key, mac_key = _ecies_keys(z, envelope.ephemeral_public)
    expected = hmac.new(mac_key, envelope.ciphertext, hashlib.sha256).digest()
    if not hmac.compare_digest(expected, envelope.tag):
        raise IntegrityError("envelope tag mismatch")
    return _aes_ctr(enc_key, envelope.ciphertext)


def tagged_prf(key: bytes, tag: bytes, message: bytes, out_len: int) -> bytes:
    """HMAC-SHA-256 over an ASCII domain tag and a message, truncated.

    This is the shared core of the f-family; distinct tags keep the members
    mutually independent even on identical inputs.
    """
    _check_len("key", key, KEY_LEN)
    return hmac.new(key, tag + message, hashlib.sha256).digest()[:out_len]


def f1(k: bytes, sqn: bytes, rand: bytes, amf: bytes) -> bytes:
    """Network authentication code over (SQN, RAND, AMF): 8 bytes."""
    _check_len("sqn", sqn, SQN_LEN)
    _check_len("rand", rand, RAND_LEN)
    _check_len("amf", amf, AMF_LEN)
    return tagged_prf(k, b"f1", sqn + rand + amf, MAC_LEN)


def f2(k: bytes, rand: bytes) -> bytes:
    """Challenge response RES: 8 bytes."""
    _check_len("rand", rand, RAND_LEN)
    return tagged_prf(k, b"f2", rand, RES_LEN)


def f5(k: bytes, rand: bytes) -> bytes:
    """Anonymity key AK used to mask the sequence counter: 6 bytes."""
    _check_len("rand", rand, RAND_LEN)
    return tagged_prf(k, b"f5", rand, AK_LEN)


def f1_star(k: bytes, sqn: bytes, rand: bytes) -> bytes:
    """Resynchronisation authentication code MAC-S: 8 bytes."""
    _check_len("sqn", sqn, SQN_LEN)
    _check_len("rand", rand, RAND_LEN)
    return tagged_prf(k, b"f1s", sqn + rand, MAC_LEN)


def f5_star(k: bytes, rand: bytes) -> bytes:
    """Resynchronisation anonymity key AK*: 6 bytes."""
    _check_len("rand", rand, RAND_LEN)
    return tagged_prf(k, b"f5s", rand, AK_LEN)


def derive_res_star(k: bytes, res: bytes, rand: bytes, sn_name: str) -> bytes:
    """Extended response RES* binding RES, RAND and the serving network name."""
    _check_len("res", res, RES_LEN)
    _check_len("rand", rand, RAND_LEN)
    if not sn_name:
        raise ValueError("sn_name must be non-empty")
    return tagged_prf(k, b"res*", res + rand + sn_name.encode("utf-8"), RES_STAR_LEN)


def hash_res_star(rand: bytes, res_star: bytes) -> bytes:
    """HXRES*: leftmost 16 bytes of SHA-256(RAND || RES*)."""
    _check_len("rand", rand, RAND_LEN)
    _check_len("res_star", res_star, RES_STAR_LEN)
    return hashlib.sha256(rand + res_star).digest()[:HXRES_STAR_LEN]
