"""Seeded harness wiring one home network, one serving network, and N UEs.

Every frame between actors passes through the channel tap, so transcripts,
attacks, and tests all see the same byte stream.  All randomness (keys,
counters, nonces, ephemeral key pairs, session handles) is drawn from one
seeded generator, making full runs bit-reproducible.
"""

from __future__ import annotations

from random import Random

from . import crypto, wire
from .actors import DEFAULT_WINDOW, HomeNetwork, ServingNetwork, Ue
from .adversary import ChannelTap, summarize_message
from .messages import (
    AuthOutcome,
    AuthenticationFailure,
    AuthenticationRequest,
    AuthenticationResponse,
    FailureCause,
    ProtocolMessage,
    RegistrationRequest,
    SubscriberRecord,
    SupiIdentity,
    UniformEnvelope,
)
from .variants import VariantMode

DEFAULT_SN_NAME = "5G:mnc095.mcc208.3gppnetwork.org"
DEFAULT_MCC = "208"
DEFAULT_MNC = "95"


class World:
    """A closed lab network: one HN, one SN, ``subscribers`` provisioned UEs."""

    def __init__(
        self,
        variant: VariantMode = VariantMode.BASELINE,
        subscribers: int = 4,
        window: int = DEFAULT_WINDOW,
        seed: int = 0,
        sn_name: str = DEFAULT_SN_NAME,
        nonce_cache_capacity: int = 1024,
    ):
        if subscribers < 1:
            raise ValueError("at least one subscriber is required")
        self.variant = variant
        self.sn_name = sn_name
        self.rng = Random(seed)
        self.tap = ChannelTap()
        self.hn = HomeNetwork(
            keypair=crypto.generate_keypair(self.rng),
            rng=self.rng,
            variant=variant,
            nonce_cache_capacity=nonce_cache_capacity,
            observer=lambda kind, detail: self.tap.note("hn", f"{kind} {detail}"),
        )
        self.sn = ServingNetwork(rng=self.rng)
        self.ues: list[Ue] = []
        seen_msin: set[str] = set()
        for _ in range(subscribers):
            msin = "".join(str(self.rng.randrange(10)) for _ in range(10))
            while msin in seen_msin:
                msin = "".join(str(self.rng.randrange(10)) for _ in range(10))
            seen_msin.add(msin)
            supi = SupiIdentity.from_digits(DEFAULT_MCC, DEFAULT_MNC, msin)
            k = self.rng.randbytes(16)
            base = self.rng.randrange(0, 1 << 20)
            self.hn.add_subscriber(SubscriberRecord(supi=supi, k=k, sqn_hn=base + 1))
            self.ues.append(
                Ue(
                    supi=supi,
                    k=k,
                    sqn_ue=base,
                    hn_public=self.hn.public_key,
                    sn_name=sn_name,
                    rng=self.rng,
                    window_w=window,
                    variant=variant,
                )
            )

    def authenticate(
        self,
        ue_index: int,
        deliver_challenge: bool = True,
        resync_delivery: bool = False,
    ) -> AuthOutcome | None:
        """Run one full registration and authentication exchange.

        ``deliver_challenge=False`` models a lost radio link after vector
        issuance (the home-network counter still advances).  With
        ``resync_delivery`` a synch failure is healed in-line: the fresh
        post-resynchronisation vector is delivered and the exchange
        completes; otherwise the run ends at the failure.
        """
        ue = self.ues[ue_index]
        reg_frame = wire.encode_message(ue.build_registration())
        reg_frame = self.tap.transit("ue->sn", reg_frame)
        reg_frame = self.tap.transit("sn->hn", reg_frame)
        reg = wire.decode_message(reg_frame)
        assert isinstance(reg, RegistrationRequest)
        challenge, vector = self.hn.handle_registration(reg, self.sn_name)

        if vector is None:  # replayed-nonce reject from the home network
            reject_frame = wire.encode_message(challenge)
            self.tap.transit("hn->sn", reject_frame)
            self.tap.transit("sn->ue", reject_frame)
            return AuthOutcome.UNIFORM_REJECT

        handle, forwarded = self.sn.forward_and_hold(vector)
        request_frame = wire.encode_message(forwarded)
        self.tap.transit("hn->sn", request_frame)
        if not deliver_challenge:
            return None
        self.tap.transit("sn->ue", request_frame)
        request = wire.decode_message(request_frame)
        assert isinstance(request, AuthenticationRequest)
        reply = ue.handle_auth_request(request)
        self.tap.transit("ue->sn", wire.encode_message(reply))
        return self._conclude(ue_index, handle, reply, resync_delivery)

    def _conclude(
        self,
        ue_index: int,
        handle: bytes,
        reply: ProtocolMessage,
        resync_delivery: bool,
    ) -> AuthOutcome:
        if isinstance(reply, AuthenticationResponse):
            outcome = self.sn.verify_response(handle, reply)
            self.tap.note("sn", f"verify outcome={outcome.value}")
            return outcome

        if isinstance(reply, AuthenticationFailure):
            if reply.cause is FailureCause.MAC_FAILURE:
                return AuthOutcome.MAC_FAILURE
            return self._resynchronize(ue_index, handle, reply, resync_delivery)

        if isinstance(reply, UniformEnvelope):
            self.tap.transit("sn->hn", wire.encode_message(reply))
            inner = self.hn.open_uniform(reply)
            if inner is None:
                self.tap.note("hn", "uniform-reject received")
                return AuthOutcome.UNIFORM_REJECT
            self.tap.note("hn", f"uniform-decrypt {summarize_message(inner)}")
            if isinstance(inner, AuthenticationResponse):
                outcome = self.sn.verify_response(handle, inner)
                self.tap.note("sn", f"verify outcome={outcome.value}")
                return outcome
            if isinstance(inner, AuthenticationFailure):
                if inner.cause is FailureCause.MAC_FAILURE:
                    return AuthOutcome.MAC_FAILURE
                return self._resynchronize(
                    ue_index, handle, inner, resync_delivery, already_relayed=True
                )
            raise wire.DecodeError("unexpected inner message type", 0)

        raise TypeError(f"unexpected reply {type(reply).__name__}")

    def _resynchronize(
        self,
        ue_index: int,
        handle: bytes,
        failure: AuthenticationFailure,
        resync_delivery: bool,
        already_relayed: bool = False,
    ) -> AuthOutcome:
        """Relay the AUTS to the home network, which re-bases its counter.

        ``already_relayed`` marks failures that reached the home network
        inside a sealed envelope, which the serving network has relayed
        verbatim; only cleartext failures are forwarded here.
        """
        assert failure.auts is not None
        rand = self.sn.get_session(handle).rand
        if not already_relayed:
            self.tap.transit("sn->hn", wire.encode_message(failure))
        _, vector = self.hn.handle_auts(failure.auts, rand, self.sn_name)
        if not resync_delivery:
            return AuthOutcome.SYNCH_FAILURE
        retry_handle, forwarded = self.sn.forward_and_hold(vector)
        retry_frame = wire.encode_message(forwarded)
        self.tap.transit("hn->sn", retry_frame)
        self.tap.transit("sn->ue", retry_frame)
        request = wire.decode_message(retry_frame)
        assert isinstance(request, AuthenticationRequest)
        reply = self.ues[ue_index].handle_auth_request(request)
        self.tap.transit("ue->sn", wire.encode_message(reply))
        return self._conclude(ue_index, retry_handle, reply, resync_delivery=False)

    def burn_vectors(self, ue_index: int, count: int) -> None:
        """Issue ``count`` vectors whose challenges never reach the UE."""
        for _ in range(count):
            self.authenticate(ue_index, deliver_challenge=False)
