"""Binary framing for protocol messages.

Big-endian, one tag byte followed by fixed-width fields:

    0x01 registration   mcc 3 | mnc 3 (space padded) | eph_pub 32 | ct_len u16 | ct | tag 32
    0x02 auth request   rand 16 | conc 6 | amf 2 | mac 8
    0x03 auth response  res_star 16
    0x04 auth failure   cause u8 | auts_present u8 | conc 6 | mac_s 8 | nonce_present u8 | nonce 16
    0x05 uniform        eph_pub 32 | ct_len u16 | ct | tag 32

Absent optional fields are zero-filled behind a 0 presence flag.
"""

from __future__ import annotations

import struct

from .crypto import EciesEnvelope
from .messages import (
    AuthenticationFailure,
    AuthenticationRequest,
    AuthenticationResponse,
    Autn,
    Auts,
    FailureCause,
    ProtocolMessage,
    RegistrationRequest,
    Suci,
    UniformEnvelope,
)

TAG_REGISTRATION = 0x01
TAG_AUTH_REQUEST = 0x02
TAG_AUTH_RESPONSE = 0x03
TAG_AUTH_FAILURE = 0x04
TAG_UNIFORM = 0x05

AUTH_REQUEST_FRAME_LEN = 1 + 16 + 6 + 2 + 8
AUTH_RESPONSE_FRAME_LEN = 1 + 16
AUTH_FAILURE_FRAME_LEN = 1 + 1 + 1 + 6 + 8 + 1 + 16

_ZERO_AUTS = b"\x00" * (6 + 8)
_ZERO_NONCE = b"\x00" * 16


class DecodeError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


def _encode_envelope(env: EciesEnvelope) -> bytes:
    if len(env.ciphertext) > 0xFFFF:
        raise ValueError("ciphertext too long for u16 length prefix")
    return env.ephemeral_public + struct.pack(">H", len(env.ciphertext)) + env.ciphertext + env.tag


def encode_message(msg: ProtocolMessage) -> bytes:
    if isinstance(msg, RegistrationRequest):
        suci = msg.suci
        mnc = suci.mnc.ljust(3).encode("ascii")
        return bytes([TAG_REGISTRATION]) + suci.mcc.encode("ascii") + mnc + _encode_envelope(suci.envelope)
    if isinstance(msg, AuthenticationRequest):
        autn = msg.autn
        return bytes([TAG_AUTH_REQUEST]) + msg.rand + autn.conc + autn.amf + autn.mac
    if isinstance(msg, AuthenticationResponse):
        return bytes([TAG_AUTH_RESPONSE]) + msg.res_star
    if isinstance(msg, AuthenticationFailure):
        if msg.auts is None:
            body = bytes([0]) + _ZERO_AUTS + bytes([0]) + _ZERO_NONCE
        else:
            auts = msg.auts
            nonce = bytes([1]) + auts.nonce_ue if auts.nonce_ue is not None else bytes([0]) + _ZERO_NONCE
            body = bytes([1]) + auts.conc + auts.mac_s + nonce
        return bytes([TAG_AUTH_FAILURE, int(msg.cause)]) + body
    if isinstance(msg, UniformEnvelope):
        return bytes([TAG_UNIFORM]) + _encode_envelope(msg.envelope)
    raise ValueError(f"cannot encode {type(msg).__name__}")


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise DecodeError(f"truncated frame reading {what}", self.pos)
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self, what: str) -> int:
        return self.take(1, what)[0]

    def u16(self, what: str) -> int:
        return struct.unpack(">H", self.take(2, what))[0]

    def done(self) -> None:
        if self.pos != len(self.data):
            raise DecodeError("trailing bytes after frame", self.pos)


def _decode_envelope(r: _Reader) -> EciesEnvelope:
    eph = r.take(32, "ephemeral public key")
    ct_len = r.u16("ciphertext length")
    ct = r.take(ct_len, "ciphertext")
    tag = r.take(32, "integrity tag")
    return EciesEnvelope(ephemeral_public=eph, ciphertext=ct, tag=tag)


def decode_message(data: bytes) -> ProtocolMessage:
    r = _Reader(data)
    tag = r.u8("frame tag")
    if tag == TAG_REGISTRATION:
        mcc = r.take(3, "mcc").decode("ascii", errors="replace")
        mnc = r.take(3, "mnc").decode("ascii", errors="replace").rstrip(" ")
        if not mcc.isdigit() or not mnc.isdigit():
            raise DecodeError(f"non-digit mcc/mnc {mcc!r}/{mnc!r}", 1)
        env = _decode_envelope(r)
        r.done()
        return RegistrationRequest(suci=Suci(mcc=mcc, mnc=mnc, envelope=env))
    if tag == TAG_AUTH_REQUEST:
        rand = r.take(16, "rand")
        conc = r.take(6, "conc")
        amf = r.take(2, "amf")
        mac = r.take(8, "mac")
        r.done()
        return AuthenticationRequest(rand=rand, autn=Autn(conc=conc, amf=amf, mac=mac))
    if tag == TAG_AUTH_RESPONSE:
        res_star = r.take(16, "res_star")
        r.done()
        return AuthenticationResponse(res_star=res_star)
    if tag == TAG_AUTH_FAILURE:
        cause_raw = r.u8("failure cause")
        try:
            cause = FailureCause(cause_raw)
        except ValueError:
            raise DecodeError(f"unknown failure cause {cause_raw}", 1) from None
        auts_present = r.u8("auts presence flag")
        conc = r.take(6, "auts conc")
        mac_s = r.take(8, "auts mac_s")
        nonce_present = r.u8("nonce presence flag")
        nonce = r.take(16, "ue nonce")
        if auts_present not in (0, 1) or nonce_present not in (0, 1):
            raise DecodeError("presence flag out of range", 2)
        r.done()
        auts = None
        if auts_present:
            auts = Auts(conc=conc, mac_s=mac_s, nonce_ue=nonce if nonce_present else None)
        return AuthenticationFailure(cause=cause, auts=auts)
    if tag == TAG_UNIFORM:
        env = _decode_envelope(r)
        r.done()
        return UniformEnvelope(envelope=env)
    raise DecodeError(f"unknown frame tag 0x{tag:02x}", 0)
