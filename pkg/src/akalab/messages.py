"""Protocol message and identity types shared by all actors.

The wire protocol has four AKA messages plus a variant-specific uniform
envelope; see :mod:`akalab.wire` for the byte layout.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Union

from .crypto import (
    AK_LEN,
    AMF_LEN,
    EciesEnvelope,
    HXRES_STAR_LEN,
    KEY_LEN,
    MAC_LEN,
    RAND_LEN,
    RES_STAR_LEN,
    SQN_LEN,
    _check_len,
)

MSIN_DIGITS = 10
MSIN_LEN = 5  # 10 decimal digits, packed BCD
SQN_MAX = (1 << 48) - 1


def pack_msin(digits: str) -> bytes:
    """Pack 10 decimal digits into 5 BCD bytes, high nibble first."""
    if len(digits) != MSIN_DIGITS or not digits.isdigit():
        raise ValueError(f"msin must be {MSIN_DIGITS} decimal digits, got {digits!r}")
    return bytes(int(digits[i]) << 4 | int(digits[i + 1]) for i in range(0, MSIN_DIGITS, 2))


def unpack_msin(packed: bytes) -> str:
    _check_len("msin", packed, MSIN_LEN)
    digits = []
    for byte in packed:
        hi, lo = byte >> 4, byte & 0x0F
        if hi > 9 or lo > 9:
            raise ValueError(f"invalid BCD nibble in msin: {packed.hex()}")
        digits.append(f"{hi}{lo}")
    return "".join(digits)


def sqn_to_bytes(sqn: int) -> bytes:
    if not 0 <= sqn <= SQN_MAX:
        raise ValueError(f"sqn out of 48-bit range: {sqn}")
    return sqn.to_bytes(SQN_LEN, "big")


def sqn_from_bytes(data: bytes) -> int:
    _check_len("sqn", data, SQN_LEN)
    return int.from_bytes(data, "big")


@dataclass(frozen=True)
class SupiIdentity:
    """Permanent subscriber identity: country code, network code, packed MSIN."""

    mcc: str
    mnc: str
    msin: bytes

    def __post_init__(self) -> None:
        if len(self.mcc) != 3 or not self.mcc.isdigit():
            raise ValueError(f"mcc must be 3 digits, got {self.mcc!r}")
        if len(self.mnc) not in (2, 3) or not self.mnc.isdigit():
            raise ValueError(f"mnc must be 2-3 digits, got {self.mnc!r}")
        unpack_msin(self.msin)  # validates length and BCD content

    @classmethod
    def from_digits(cls, mcc: str, mnc: str, msin_digits: str) -> "SupiIdentity":
        return cls(mcc=mcc, mnc=mnc, msin=pack_msin(msin_digits))

    @property
    def msin_digits(self) -> str:
        return unpack_msin(self.msin)

    @property
    def imsi(self) -> str:
        return f"{self.mcc}{self.mnc}{self.msin_digits}"


@dataclass(frozen=True)
class Suci:
    """Concealed identity: plaintext MCC/MNC plus the sealed MSIN payload."""

    mcc: str
    mnc: str
    envelope: EciesEnvelope


@dataclass(frozen=True)
class Autn:
    """Authentication token CONC || AMF || MAC (16 bytes on the wire)."""

    conc: bytes
    amf: bytes
    mac: bytes

    def __post_init__(self) -> None:
        _check_len("conc", self.conc, AK_LEN)
        _check_len("amf", self.amf, AMF_LEN)
        _check_len("mac", self.mac, MAC_LEN)


@dataclass(frozen=True)
class Auts:
    """Resynchronisation token; ``nonce_ue`` is set only by the nonce-in-AUTS variant."""

    conc: bytes
    mac_s: bytes
    nonce_ue: bytes | None = None

    def __post_init__(self) -> None:
        _check_len("conc", self.conc, AK_LEN)
        _check_len("mac_s", self.mac_s, MAC_LEN)
        if self.nonce_ue is not None:
            _check_len("nonce_ue", self.nonce_ue, RAND_LEN)


class FailureCause(IntEnum):
    MAC_FAILURE = 1
    SYNCH_FAILURE = 2


@dataclass(frozen=True)
class RegistrationRequest:
    suci: Suci


@dataclass(frozen=True)
class AuthenticationRequest:
    rand: bytes
    autn: Autn

    def __post_init__(self) -> None:
        _check_len("rand", self.rand, RAND_LEN)


@dataclass(frozen=True)
class AuthenticationResponse:
    res_star: bytes

    def __post_init__(self) -> None:
        _check_len("res_star", self.res_star, RES_STAR_LEN)


@dataclass(frozen=True)
class AuthenticationFailure:
    cause: FailureCause
    auts: Auts | None = None


@dataclass(frozen=True)
class UniformEnvelope:
    """Fixed-length sealed reply used by the encrypting and nonce variants."""

    envelope: EciesEnvelope


ProtocolMessage = Union[
    RegistrationRequest,
    AuthenticationRequest,
    AuthenticationResponse,
    AuthenticationFailure,
    UniformEnvelope,
]


class AuthOutcome(str, Enum):
    OK = "ok"
    MAC_FAILURE = "mac-failure"
    SYNCH_FAILURE = "synch-failure"
    UNIFORM_REJECT = "uniform-reject"
    SN_HASH_MISMATCH = "sn-hash-mismatch"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class AuthVector:
    """Challenge material handed from the home network to the serving network."""

    rand: bytes
    autn: Autn
    hxres_star: bytes
    supi: SupiIdentity

    def __post_init__(self) -> None:
        _check_len("rand", self.rand, RAND_LEN)
        _check_len("hxres_star", self.hxres_star, HXRES_STAR_LEN)


@dataclass
class SubscriberRecord:
    """Home-network view of one subscriber: identity, key K, counter."""

    supi: SupiIdentity
    k: bytes
    sqn_hn: int

    def __post_init__(self) -> None:
        _check_len("k", self.k, KEY_LEN)
        if not 0 <= self.sqn_hn <= SQN_MAX:
            raise ValueError(f"sqn_hn out of 48-bit range: {self.sqn_hn}")
