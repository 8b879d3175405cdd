"""Channel interposition and the three privacy attacks.

The adversary model is a radio-link interceptor: it sees frame tags,
lengths, and cleartext fields, can store frames verbatim, re-inject them
toward a chosen UE, and swap a registration in flight.  It never reads
actor-internal state; every verdict below is computed from transcript
frames alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Callable, Union

from . import wire
from .messages import (
    AuthenticationFailure,
    AuthenticationRequest,
    AuthenticationResponse,
    FailureCause,
    ProtocolMessage,
    RegistrationRequest,
    UniformEnvelope,
)
from .variants import VariantMode

if TYPE_CHECKING:  # pragma: no cover
    from .world import World

SQN_INFERENCE_MAX_BOUND = 1 << 20


class CaptureTimeout(Exception):
    """No frame matching the capture predicate traversed the tap."""


class AttackFailed(Exception):
    """The attack's expected protocol reaction did not occur."""


@dataclass(frozen=True)
class TranscriptEvent:
    """One logged observable: a delivered frame or an actor-local note."""

    seq: int
    direction: str
    tag: int
    length: int
    frame: bytes
    summary: str
    adversarial: bool = False


@dataclass(frozen=True)
class CapturedFrame:
    frame: bytes
    index: int
    direction: str


class Verdict(str, Enum):
    SAME_SUBSCRIBER = "same-subscriber"
    DIFFERENT_SUBSCRIBER = "different-subscriber"
    INDETERMINATE = "indeterminate"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class AttackVerdict:
    verdict: Verdict
    evidence: list[int] = field(default_factory=list)


def summarize_message(msg: ProtocolMessage) -> str:
    if isinstance(msg, RegistrationRequest):
        suci = msg.suci
        return f"registration-request mcc={suci.mcc} mnc={suci.mnc} ct={len(suci.envelope.ciphertext)}B"
    if isinstance(msg, AuthenticationRequest):
        return "authentication-request"
    if isinstance(msg, AuthenticationResponse):
        return "authentication-response"
    if isinstance(msg, AuthenticationFailure):
        cause = "mac-failure" if msg.cause is FailureCause.MAC_FAILURE else "synch-failure"
        auts = "present" if msg.auts is not None else "absent"
        return f"authentication-failure cause={cause} auts={auts}"
    if isinstance(msg, UniformEnvelope):
        return f"uniform-envelope ct={len(msg.envelope.ciphertext)}B"
    return type(msg).__name__  # pragma: no cover


class ChannelTap:
    """Interposition point on every channel; all traffic is logged here.

    With no rules armed the tap is a pure observer: frames pass through
    byte-for-byte.  A substitution rule swaps the next matching in-flight
    registration exactly once.
    """

    def __init__(self) -> None:
        self.events: list[TranscriptEvent] = []
        self._suci_substitution: bytes | None = None

    def arm_suci_substitution(self, frame: bytes) -> None:
        self._suci_substitution = frame

    def transit(self, direction: str, frame: bytes, adversarial: bool = False) -> bytes:
        substituted = False
        if (
            self._suci_substitution is not None
            and direction == "ue->sn"
            and frame[:1] == bytes([wire.TAG_REGISTRATION])
        ):
            frame = self._suci_substitution
            self._suci_substitution = None
            substituted = True
        try:
            summary = summarize_message(wire.decode_message(frame))
        except wire.DecodeError:
            summary = "undecodable"
        if substituted:
            summary += " [substituted]"
        event = TranscriptEvent(
            seq=len(self.events),
            direction=direction,
            tag=frame[0] if frame else 0,
            length=len(frame),
            frame=frame,
            summary=summary,
            adversarial=adversarial or substituted,
        )
        self.events.append(event)
        return frame

    def note(self, direction: str, summary: str) -> TranscriptEvent:
        event = TranscriptEvent(
            seq=len(self.events),
            direction=direction,
            tag=0,
            length=0,
            frame=b"",
            summary=summary,
        )
        self.events.append(event)
        return event

    def frames(self, since: int = 0) -> list[TranscriptEvent]:
        return [e for e in self.events[since:] if e.length > 0]


Predicate = Union[int, Callable[[TranscriptEvent], bool]]


def capture(tap: ChannelTap, predicate: Predicate, since: int = 0) -> CapturedFrame:
    """Return the first logged frame matching a tag or predicate.

    Capture is passive: the stored frame is a verbatim copy and delivery of
    the original is unaffected.
    """
    if isinstance(predicate, int):
        tag = predicate
        match = lambda e: e.tag == tag  # noqa: E731
    else:
        match = predicate
    for event in tap.frames(since):
        if match(event):
            return CapturedFrame(frame=event.frame, index=event.seq, direction=event.direction)
    raise CaptureTimeout("no matching frame traversed the tap")


def replay_to(world: "World", captured: CapturedFrame, ue_index: int) -> TranscriptEvent:
    """Inject a captured challenge toward a UE and log its reply.

    The reply returns to the adversary's fake cell, so it is *not* relayed
    onward to the real network.
    """
    msg = wire.decode_message(captured.frame)
    if not isinstance(msg, AuthenticationRequest):
        raise AttackFailed(f"cannot replay a {summarize_message(msg)} toward a UE")
    world.tap.transit("sn->ue", captured.frame, adversarial=True)
    reply = world.ues[ue_index].handle_auth_request(msg)
    world.tap.transit("ue->sn", wire.encode_message(reply))
    return world.tap.events[-1]


def substitute_suci(tap: ChannelTap, captured: CapturedFrame) -> None:
    """Arm a one-shot swap of the next in-flight registration request."""
    msg = wire.decode_message(captured.frame)
    if not isinstance(msg, RegistrationRequest):
        raise AttackFailed(f"cannot substitute a {summarize_message(msg)} for a registration")
    tap.arm_suci_substitution(captured.frame)


def _verdict_from_failure_reply(event: TranscriptEvent) -> Verdict:
    """Failure-message rule: a visible synch cause marks the original UE."""
    if event.tag != wire.TAG_AUTH_FAILURE:
        return Verdict.INDETERMINATE
    msg = wire.decode_message(event.frame)
    assert isinstance(msg, AuthenticationFailure)
    if msg.cause is FailureCause.SYNCH_FAILURE:
        return Verdict.SAME_SUBSCRIBER
    return Verdict.DIFFERENT_SUBSCRIBER


def _verdict_from_reply_type(event: TranscriptEvent, variant: VariantMode) -> Verdict:
    """Replayed-registration rule: message *type* alone separates the cases.

    The deployed variant is public configuration: when only failures are
    sealed, a sealed frame still reveals that the attempt failed; once
    successes are sealed too (or everything collapses to the constant
    reject), the type carries no identity signal.
    """
    if event.tag == wire.TAG_AUTH_RESPONSE:
        return Verdict.SAME_SUBSCRIBER
    if event.tag == wire.TAG_AUTH_FAILURE:
        return Verdict.DIFFERENT_SUBSCRIBER
    if event.tag == wire.TAG_UNIFORM and variant is VariantMode.ENC_FAILURE:
        return Verdict.DIFFERENT_SUBSCRIBER
    return Verdict.INDETERMINATE


def attack_failure_message(world: "World", victim: int, probe: int) -> AttackVerdict:
    """Replay a captured challenge and read the cleartext failure cause.

    Runs one honest authentication for the victim, captures the challenge
    frame, replays it to the probe UE, and classifies the reply.
    """
    start = len(world.tap.events)
    world.authenticate(victim)
    captured = capture(world.tap, wire.TAG_AUTH_REQUEST, since=start)
    reply = replay_to(world, captured, probe)
    verdict = _verdict_from_failure_reply(reply)
    return AttackVerdict(verdict=verdict, evidence=[captured.index, reply.seq])


def attack_suci_replay(world: "World", victim: int, probe: int, burn_gap: int = 0) -> AttackVerdict:
    """Swap a probe's registration for a captured one and watch the reply type.

    ``burn_gap`` vectors are issued (and lost) between capture and replay to
    control where the replayed challenge lands in the acceptance window.
    """
    start = len(world.tap.events)
    world.authenticate(victim)
    captured = capture(world.tap, wire.TAG_REGISTRATION, since=start)
    world.burn_vectors(victim, burn_gap)
    substitute_suci(world.tap, captured)
    probe_start = len(world.tap.events)
    world.authenticate(probe)
    decisive = _decisive_reply(world.tap, probe_start)
    verdict = _verdict_from_reply_type(decisive, world.variant)
    return AttackVerdict(verdict=verdict, evidence=[captured.index, decisive.seq])


def _decisive_reply(tap: ChannelTap, since: int) -> TranscriptEvent:
    """The frame that answers the substituted registration's challenge.

    Baseline variants answer from the UE (response or failure); rejecting
    and sealing variants surface a uniform envelope instead.
    """
    for event in tap.frames(since):
        if event.direction == "ue->sn" and event.tag in (
            wire.TAG_AUTH_RESPONSE,
            wire.TAG_AUTH_FAILURE,
            wire.TAG_UNIFORM,
        ):
            return event
        if event.direction == "sn->ue" and event.tag == wire.TAG_UNIFORM:
            return event
    raise AttackFailed("no observable reply followed the substituted registration")


def _auts_conc_from_reply(event: TranscriptEvent) -> bytes:
    if event.tag != wire.TAG_AUTH_FAILURE:
        raise AttackFailed(f"replay was not answered with a failure: {event.summary}")
    msg = wire.decode_message(event.frame)
    assert isinstance(msg, AuthenticationFailure)
    if msg.auts is None:
        raise AttackFailed("failure reply carried no resynchronisation token")
    return msg.auts.conc


def attack_auts_differential(world: "World", victim: int, gap_authentications: int) -> bytes:
    """XOR of two masked counters extracted from replay-induced AUTS tokens.

    The same captured challenge is replayed twice, with a configurable count
    of honest authentications in between.  In the baseline the mask cancels
    and the result equals the XOR of the two true counters.
    """
    samples = collect_auts_differentials(world, victim, [gap_authentications])
    return samples[0][0]


def collect_auts_differentials(
    world: "World", victim: int, gaps: list[int]
) -> list[tuple[bytes, int]]:
    """Differentials against the first replay, one per cumulative gap."""
    start = len(world.tap.events)
    world.authenticate(victim)
    captured = capture(world.tap, wire.TAG_AUTH_REQUEST, since=start)
    base_conc = _auts_conc_from_reply(replay_to(world, captured, victim))
    samples: list[tuple[bytes, int]] = []
    cumulative = 0
    for gap in gaps:
        for _ in range(gap):
            world.authenticate(victim)
        cumulative += gap
        conc = _auts_conc_from_reply(replay_to(world, captured, victim))
        samples.append((bytes(a ^ b for a, b in zip(base_conc, conc)), cumulative))
    return samples


def infer_sqn(differentials: list[tuple[bytes, int]], bound: int) -> set[int]:
    """Brute-force the counter candidates consistent with observed differentials.

    A candidate ``s`` survives iff ``s ^ (s + gap)`` reproduces every
    observed differential.  The true counter always survives when the
    differentials are genuine.
    """
    if not differentials:
        raise ValueError("at least one differential sample is required")
    if not 1 <= bound <= SQN_INFERENCE_MAX_BOUND:
        raise ValueError(f"bound must be in 1..{SQN_INFERENCE_MAX_BOUND}, got {bound}")
    targets = [(int.from_bytes(diff, "big"), gap) for diff, gap in differentials]
    return {
        s
        for s in range(bound)
        if all((s ^ (s + gap)) == diff for diff, gap in targets)
    }
