"""The configurable protocol variants layered over the baseline AKA flow.

Besides the baseline, five mitigation modes are supported:

- ``enc-failure``: the UE seals authentication failures to the home network
  key so the cause value never travels in the clear.
- ``enc-response``: sealed success responses of a fixed uniform length;
  failed challenges draw the canonical constant reject so that no two
  rejection events are distinguishable, even byte-wise.
- ``sqn-in-suci``: the UE ships its current counter inside the concealed
  registration payload and the home network re-bases on it.
- ``nonce-in-suci``: a fresh UE nonce replaces the counter entirely; the home
  network keeps a per-subscriber replay cache of seen nonces.
- ``nonce-in-auts``: resynchronisation masks the reported counter with a key
  derived from a fresh UE nonce instead of the (replayable) challenge RAND.
"""

from __future__ import annotations

import logging
from collections import OrderedDict
from enum import Enum
from random import Random
from typing import TYPE_CHECKING

from . import crypto, wire
from .crypto import EciesEnvelope
from .messages import (
    Auts,
    FailureCause,
    ProtocolMessage,
    UniformEnvelope,
    sqn_to_bytes,
)

if TYPE_CHECKING:  # pragma: no cover
    from .actors import Ue

logger = logging.getLogger(__name__)

UE_NONCE_LEN = 16
NONCE_SURROGATE_LEN = 6  # leading nonce bytes carried in the AUTN counter slot
PAD_LEN = 128            # canonical uniform-envelope plaintext length
DEFAULT_NONCE_CACHE_CAPACITY = 1024

MSIN_PAYLOAD_LEN = 5
SQN_PAYLOAD_LEN = MSIN_PAYLOAD_LEN + 6
NONCE_PAYLOAD_LEN = MSIN_PAYLOAD_LEN + UE_NONCE_LEN


class VariantMode(Enum):
    BASELINE = "baseline"
    ENC_FAILURE = "enc-failure"
    ENC_RESPONSE = "enc-response"
    SQN_IN_SUCI = "sqn-in-suci"
    NONCE_IN_SUCI = "nonce-in-suci"
    NONCE_IN_AUTS = "nonce-in-auts"

    @classmethod
    def from_string(cls, name: str) -> "VariantMode":
        for mode in cls:
            if mode.value == name:
                return mode
        valid = ", ".join(m.value for m in cls)
        raise ValueError(f"unknown variant {name!r}; expected one of: {valid}")

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


class PaddingError(ValueError):
    """Uniform-envelope padding is malformed or the message does not fit."""


def build_suci_payload(ue: "Ue") -> bytes:
    """Assemble the plaintext sealed into the registration envelope.

    Baseline and the encrypting variants carry only the MSIN; sqn-in-suci
    appends the UE counter and nonce-in-suci appends a fresh nonce, which is
    remembered on the UE for the later challenge-binding check.
    """
    msin = ue.supi.msin
    if ue.variant is VariantMode.SQN_IN_SUCI:
        return msin + sqn_to_bytes(ue.sqn_ue)
    if ue.variant is VariantMode.NONCE_IN_SUCI:
        nonce = ue.rng.randbytes(UE_NONCE_LEN)
        ue.pending_nonce = nonce
        return msin + nonce
    return msin


def parse_suci_payload(mode: VariantMode, payload: bytes) -> tuple[bytes, bytes]:
    """Split a revealed registration payload into (msin, variant extra)."""
    expected = {
        VariantMode.SQN_IN_SUCI: SQN_PAYLOAD_LEN,
        VariantMode.NONCE_IN_SUCI: NONCE_PAYLOAD_LEN,
    }.get(mode, MSIN_PAYLOAD_LEN)
    if len(payload) != expected:
        raise ValueError(
            f"suci payload for {mode.value} must be {expected} bytes, got {len(payload)}"
        )
    return payload[:MSIN_PAYLOAD_LEN], payload[MSIN_PAYLOAD_LEN:]


class NonceCache:
    """Per-subscriber record of recently seen UE nonces, oldest evicted first."""

    def __init__(self, capacity: int = DEFAULT_NONCE_CACHE_CAPACITY):
        if capacity < 1:
            raise ValueError(f"capacity must be positive, got {capacity}")
        self.capacity = capacity
        self._seen: dict[bytes, OrderedDict[bytes, None]] = {}

    def check(self, subscriber: bytes, nonce: bytes) -> bool:
        """Record ``nonce`` and return True, or return False on a replay.

        Replays leave the cache untouched so repeated probing cannot refresh
        an entry's position.
        """
        entries = self._seen.setdefault(subscriber, OrderedDict())
        if nonce in entries:
            return False
        entries[nonce] = None
        while len(entries) > self.capacity:
            entries.popitem(last=False)
        return True

    def __len__(self) -> int:
        return sum(len(entries) for entries in self._seen.values())


def encrypt_uniform(
    msg: ProtocolMessage,
    hn_public: bytes,
    pad_to: int = PAD_LEN,
    rng: Random | None = None,
) -> UniformEnvelope:
    """Seal a message into a fixed-length envelope addressed to the home network.

    The plaintext is the encoded frame, a 0x80 marker, then zeros up to
    ``pad_to``, so every sealed reply has identical ciphertext length no
    matter which message is inside.
    """
    encoded = wire.encode_message(msg)
    if len(encoded) + 1 > pad_to:
        raise PaddingError(f"message of {len(encoded)} bytes does not fit in {pad_to}")
    padded = encoded + b"\x80" + b"\x00" * (pad_to - len(encoded) - 1)
    return UniformEnvelope(envelope=crypto.ecies_conceal(padded, hn_public, rng))


def decrypt_uniform(msg: UniformEnvelope, hn_secret: bytes) -> ProtocolMessage:
    """Open a uniform envelope, strip its padding, and decode the inner frame."""
    padded = crypto.ecies_reveal(msg.envelope, hn_secret)
    stripped = padded.rstrip(b"\x00")
    if not stripped or stripped[-1] != 0x80:
        raise PaddingError("padding marker missing")
    return wire.decode_message(stripped[:-1])


# The canonical reject is a constant, not a fresh encryption: rejections must
# be byte-identical across causes, subscribers, and time, or they would
# re-introduce the very distinguisher the variants remove.
UNIFORM_REJECT = UniformEnvelope(
    envelope=EciesEnvelope(
        ephemeral_public=b"\x00" * 32,
        ciphertext=b"\x00" * PAD_LEN,
        tag=b"\x00" * 32,
    )
)


def uniform_reject(cause: FailureCause | None = None) -> UniformEnvelope:
    """Return the canonical reject message; the cause is only logged locally."""
    if cause is not None:
        logger.debug("uniform reject issued (internal cause: %s)", cause.name)
    return UNIFORM_REJECT


def is_uniform_reject(msg: ProtocolMessage) -> bool:
    return msg == UNIFORM_REJECT


def challenge_freshness_mac(k: bytes, ue_nonce: bytes, rand: bytes, amf: bytes) -> bytes:
    """Challenge MAC for nonce-in-suci: binds the full UE nonce.

    The leading nonce bytes stand in for the counter slot and the whole nonce
    is appended to the MAC input, so a challenge verifies only against the
    exact nonce the UE sealed into its registration.
    """
    crypto._check_len("ue_nonce", ue_nonce, UE_NONCE_LEN)
    surrogate = ue_nonce[:NONCE_SURROGATE_LEN]
    return crypto.tagged_prf(k, b"f1", surrogate + rand + amf + ue_nonce, crypto.MAC_LEN)


def build_auts_with_nonce(ue: "Ue") -> Auts:
    """Resynchronisation token masked by a key from a fresh UE nonce.

    Unlike the baseline token, identical replayed challenges yield
    differently-masked counters because the mask no longer depends on the
    (attacker-controlled) challenge RAND.
    """
    nonce = ue.rng.randbytes(UE_NONCE_LEN)
    sqn = sqn_to_bytes(ue.sqn_ue)
    conc = crypto.xor_bytes(sqn, crypto.f5_star(ue.k, nonce))
    mac_s = crypto.f1_star(ue.k, sqn, nonce)
    return Auts(conc=conc, mac_s=mac_s, nonce_ue=nonce)
