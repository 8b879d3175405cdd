"""The three protocol actors: user equipment, serving network, home network.

Each actor is single-owner mutable state driven by one logical thread.
Failures (wrong key, stale counter) are protocol messages, not exceptions;
exceptions are reserved for conditions a real node would treat as faults
(unknown subscriber, bad resynchronisation token, unknown session).
"""

from __future__ import annotations

import hmac
import logging
from dataclasses import dataclass, field
from random import Random
from typing import Callable

from . import crypto, variants
from .messages import (
    AuthOutcome,
    AuthVector,
    AuthenticationFailure,
    AuthenticationRequest,
    AuthenticationResponse,
    Autn,
    Auts,
    FailureCause,
    ProtocolMessage,
    RegistrationRequest,
    SubscriberRecord,
    Suci,
    SupiIdentity,
    UniformEnvelope,
    sqn_from_bytes,
    sqn_to_bytes,
)
from .variants import VariantMode

logger = logging.getLogger(__name__)

AMF_DEFAULT = b"\x80\x00"
DEFAULT_WINDOW = 32
SESSION_HANDLE_LEN = 8


class ProtocolError(Exception):
    """Fault-level protocol condition (not an on-the-wire failure message)."""


class SubscriberNotFound(ProtocolError):
    pass


class ResyncRejected(ProtocolError):
    pass


class UnknownSession(ProtocolError):
    pass


def window_check(sqn_ue: int, sqn_prime: int, w: int) -> bool:
    """Freshness test: accept iff sqn_ue < sqn_prime <= sqn_ue + w.

    Plain unsigned comparison on 48-bit counters; a counter that would wrap
    is never accepted.
    """
    if w < 1:
        raise ValueError(f"window must be >= 1, got {w}")
    return sqn_ue < sqn_prime <= sqn_ue + w


@dataclass
class Ue:
    """User-equipment state machine.

    ``pending_nonce`` is the outstanding registration nonce in nonce-in-suci
    mode; it is consumed by the first challenge that verifies against it.
    """

    supi: SupiIdentity
    k: bytes
    sqn_ue: int
    hn_public: bytes
    sn_name: str
    rng: Random
    window_w: int = DEFAULT_WINDOW
    variant: VariantMode = VariantMode.BASELINE
    pending_nonce: bytes | None = field(default=None, repr=False)

    def build_registration(self) -> RegistrationRequest:
        """Conceal the variant payload to the home-network key and register."""
        if len(self.hn_public) != crypto.CURVE_KEY_LEN:
            raise ValueError("home network public key not provisioned")
        payload = variants.build_suci_payload(self)
        envelope = crypto.ecies_conceal(payload, self.hn_public, self.rng)
        return RegistrationRequest(suci=Suci(mcc=self.supi.mcc, mnc=self.supi.mnc, envelope=envelope))

    def handle_auth_request(self, msg: AuthenticationRequest) -> ProtocolMessage:
        """Verify a challenge and answer with a response or a failure.

        Baseline order of checks: derive AK', unmask the counter, verify the
        MAC, then test the counter against the acceptance window.  The
        counter advances only on success.  Nonce-in-suci replaces all counter
        handling with the nonce-binding check.
        """
        if self.variant is VariantMode.NONCE_IN_SUCI:
            return self._handle_nonce_bound_request(msg)

        rand, autn = msg.rand, msg.autn
        ak = crypto.f5(self.k, rand)
        sqn_prime = sqn_from_bytes(crypto.xor_bytes(autn.conc, ak))
        expected_mac = crypto.f1(self.k, sqn_to_bytes(sqn_prime), rand, autn.amf)
        if not hmac.compare_digest(expected_mac, autn.mac):
            logger.debug("%s: challenge MAC mismatch", self.supi.imsi)
            return self._shape_failure(AuthenticationFailure(cause=FailureCause.MAC_FAILURE))
        if not window_check(self.sqn_ue, sqn_prime, self.window_w):
            logger.debug(
                "%s: counter %d outside (%d, %d]",
                self.supi.imsi, sqn_prime, self.sqn_ue, self.sqn_ue + self.window_w,
            )
            if self.variant is VariantMode.NONCE_IN_AUTS:
                auts = variants.build_auts_with_nonce(self)
            else:
                auts = self.build_auts(rand)
            return self._shape_failure(
                AuthenticationFailure(cause=FailureCause.SYNCH_FAILURE, auts=auts)
            )
        self.sqn_ue = sqn_prime
        return self._shape_response(self._respond(rand))

    def build_auts(self, rand: bytes) -> Auts:
        """Baseline resynchronisation token: counter masked with f5*(K, RAND)."""
        sqn = sqn_to_bytes(self.sqn_ue)
        conc = crypto.xor_bytes(sqn, crypto.f5_star(self.k, rand))
        return Auts(conc=conc, mac_s=crypto.f1_star(self.k, sqn, rand))

    def _respond(self, rand: bytes) -> AuthenticationResponse:
        res = crypto.f2(self.k, rand)
        res_star = crypto.derive_res_star(self.k, res, rand, self.sn_name)
        return AuthenticationResponse(res_star=res_star)

    def _handle_nonce_bound_request(self, msg: AuthenticationRequest) -> ProtocolMessage:
        # Any challenge that does not bind the outstanding nonce gets the
        # canonical reject: stale, replayed, and wrong-key challenges are
        # indistinguishable by design.
        pending = self.pending_nonce
        if pending is None:
            return variants.uniform_reject(FailureCause.SYNCH_FAILURE)
        expected_mac = variants.challenge_freshness_mac(self.k, pending, msg.rand, msg.autn.amf)
        if not hmac.compare_digest(expected_mac, msg.autn.mac):
            return variants.uniform_reject(FailureCause.MAC_FAILURE)
        self.pending_nonce = None
        return self._respond(msg.rand)

    def _shape_failure(self, failure: AuthenticationFailure) -> ProtocolMessage:
        if self.variant is VariantMode.ENC_FAILURE:
            return variants.encrypt_uniform(failure, self.hn_public, rng=self.rng)
        if self.variant is VariantMode.ENC_RESPONSE:
            return variants.uniform_reject(failure.cause)
        return failure

    def _shape_response(self, response: AuthenticationResponse) -> ProtocolMessage:
        if self.variant is VariantMode.ENC_RESPONSE:
            return variants.encrypt_uniform(response, self.hn_public, rng=self.rng)
        return response


@dataclass
class SnSession:
    rand: bytes
    hxres_star: bytes


class ServingNetwork:
    """Relays challenges unchanged and verifies response hashes per session."""

    def __init__(self, rng: Random):
        self.rng = rng
        self.sessions: dict[bytes, SnSession] = {}

    def forward_and_hold(self, vector: AuthVector) -> tuple[bytes, AuthenticationRequest]:
        handle = self.rng.randbytes(SESSION_HANDLE_LEN)
        self.sessions[handle] = SnSession(rand=vector.rand, hxres_star=vector.hxres_star)
        return handle, AuthenticationRequest(rand=vector.rand, autn=vector.autn)

    def get_session(self, handle: bytes) -> SnSession:
        try:
            return self.sessions[handle]
        except KeyError:
            raise UnknownSession(f"no session {handle.hex()}") from None

    def verify_response(self, handle: bytes, msg: AuthenticationResponse) -> AuthOutcome:
        session = self.get_session(handle)
        computed = crypto.hash_res_star(session.rand, msg.res_star)
        if hmac.compare_digest(computed, session.hxres_star):
            return AuthOutcome.OK
        return AuthOutcome.SN_HASH_MISMATCH


class HomeNetwork:
    """Subscriber database, challenge generation, and resynchronisation."""

    def __init__(
        self,
        keypair: crypto.KeyPair,
        rng: Random,
        variant: VariantMode = VariantMode.BASELINE,
        nonce_cache_capacity: int = variants.DEFAULT_NONCE_CACHE_CAPACITY,
        observer: Callable[[str, str], None] | None = None,
    ):
        self.keypair = keypair
        self.rng = rng
        self.variant = variant
        self.subscribers: dict[bytes, SubscriberRecord] = {}
        self.nonce_cache = variants.NonceCache(nonce_cache_capacity)
        self.issued: dict[bytes, bytes] = {}  # challenge RAND -> msin
        self.observer = observer

    @property
    def public_key(self) -> bytes:
        return self.keypair.public

    def add_subscriber(self, record: SubscriberRecord) -> None:
        if record.supi.msin in self.subscribers:
            raise ValueError(f"duplicate msin {record.supi.msin.hex()}")
        self.subscribers[record.supi.msin] = record

    def _notify(self, kind: str, detail: str) -> None:
        logger.info("%s: %s", kind, detail)
        if self.observer is not None:
            self.observer(kind, detail)

    def handle_registration(
        self, msg: RegistrationRequest, sn_name: str
    ) -> tuple[ProtocolMessage, AuthVector | None]:
        """Reveal the SUCI and answer with a challenge, or reject a replay.

        Returns ``(challenge, vector)`` normally; in nonce-in-suci mode a
        replayed nonce yields ``(canonical reject, None)`` and a logged
        nonce-reuse event instead of a challenge.
        """
        payload = crypto.ecies_reveal(msg.suci.envelope, self.keypair.secret)
        msin, extra = variants.parse_suci_payload(self.variant, payload)
        record = self.subscribers.get(msin)
        if record is None:
            raise SubscriberNotFound(f"no subscriber with msin {msin.hex()}")

        if self.variant is VariantMode.SQN_IN_SUCI:
            self.sync_counter_from_registration(record, sqn_from_bytes(extra))

        if self.variant is VariantMode.NONCE_IN_SUCI:
            if not self.nonce_cache.check(msin, extra):
                self._notify("nonce-reuse", f"subscriber={record.supi.imsi} nonce={extra.hex()}")
                return variants.uniform_reject(), None
            return self._issue_nonce_bound_vector(record, extra, sn_name)

        return self._issue_vector(record, sn_name)

    def sync_counter_from_registration(self, record: SubscriberRecord, reported: int) -> None:
        """Re-base on the counter a registration reported.

        The next vector then always lands inside the acceptance window,
        however far this side had drifted in either direction.
        """
        record.sqn_hn = reported + 1

    def _expectations(self, record: SubscriberRecord, rand: bytes, sn_name: str) -> bytes:
        res = crypto.f2(record.k, rand)
        res_star = crypto.derive_res_star(record.k, res, rand, sn_name)
        return crypto.hash_res_star(rand, res_star)

    def _issue_vector(
        self, record: SubscriberRecord, sn_name: str
    ) -> tuple[AuthenticationRequest, AuthVector]:
        rand = self.rng.randbytes(crypto.RAND_LEN)
        sqn = sqn_to_bytes(record.sqn_hn)
        conc = crypto.xor_bytes(sqn, crypto.f5(record.k, rand))
        mac = crypto.f1(record.k, sqn, rand, AMF_DEFAULT)
        autn = Autn(conc=conc, amf=AMF_DEFAULT, mac=mac)
        hxres_star = self._expectations(record, rand, sn_name)
        vector = AuthVector(rand=rand, autn=autn, hxres_star=hxres_star, supi=record.supi)
        self.issued[rand] = record.supi.msin
        record.sqn_hn += 1  # one increment per issued vector
        return AuthenticationRequest(rand=rand, autn=autn), vector

    def _issue_nonce_bound_vector(
        self, record: SubscriberRecord, ue_nonce: bytes, sn_name: str
    ) -> tuple[AuthenticationRequest, AuthVector]:
        # No counter is consumed: freshness comes from the UE nonce, whose
        # leading bytes ride in the (otherwise unused) counter slot.
        rand = self.rng.randbytes(crypto.RAND_LEN)
        mac = variants.challenge_freshness_mac(record.k, ue_nonce, rand, AMF_DEFAULT)
        autn = Autn(conc=ue_nonce[: variants.NONCE_SURROGATE_LEN], amf=AMF_DEFAULT, mac=mac)
        hxres_star = self._expectations(record, rand, sn_name)
        vector = AuthVector(rand=rand, autn=autn, hxres_star=hxres_star, supi=record.supi)
        return AuthenticationRequest(rand=rand, autn=autn), vector

    def handle_auts(
        self, auts: Auts, rand: bytes, sn_name: str
    ) -> tuple[AuthenticationRequest, AuthVector]:
        """Adopt the UE counter from a verified AUTS and issue a fresh vector.

        The stored counter becomes the reported counter plus one, so the
        fresh vector is strictly inside the acceptance window.
        """
        msin = self.issued.get(rand)
        if msin is None:
            raise ResyncRejected(f"no outstanding challenge for rand {rand.hex()}")
        record = self.subscribers[msin]
        mask_basis = auts.nonce_ue if auts.nonce_ue is not None else rand
        sqn_ue = crypto.xor_bytes(auts.conc, crypto.f5_star(record.k, mask_basis))
        expected = crypto.f1_star(record.k, sqn_ue, mask_basis)
        if not hmac.compare_digest(expected, auts.mac_s):
            raise ResyncRejected("mac_s mismatch")
        record.sqn_hn = sqn_from_bytes(sqn_ue) + 1
        logger.debug("resync: %s counter set to %d", record.supi.imsi, record.sqn_hn)
        return self._issue_vector(record, sn_name)

    def open_uniform(self, msg: UniformEnvelope) -> ProtocolMessage | None:
        """Decrypt a sealed reply; ``None`` marks the canonical constant reject."""
        if variants.is_uniform_reject(msg):
            return None
        return variants.decrypt_uniform(msg, self.keypair.secret)
