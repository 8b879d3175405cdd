"""Channel tap, capture/replay/substitution, attack verdicts, counter inference."""

import random

import pytest

from akalab import wire
from akalab.adversary import (
    AttackFailed,
    CaptureTimeout,
    Verdict,
    attack_auts_differential,
    attack_failure_message,
    attack_suci_replay,
    capture,
    collect_auts_differentials,
    infer_sqn,
    replay_to,
    substitute_suci,
)
from akalab.messages import AuthOutcome, FailureCause
from akalab.variants import VariantMode
from akalab.world import World


def make_world(variant=VariantMode.BASELINE, seed=0, subscribers=4, window=32):
    return World(variant=variant, subscribers=subscribers, seed=seed, window=window)


class TestCapture:
    def test_challenge_frame_is_33_bytes(self):
        world = make_world(seed=80)
        world.authenticate(0)
        captured = capture(world.tap, wire.TAG_AUTH_REQUEST)
        assert len(captured.frame) == 33
        assert captured.frame[0] == wire.TAG_AUTH_REQUEST

    def test_registration_frame_captured(self):
        world = make_world(seed=81)
        world.authenticate(0)
        captured = capture(world.tap, wire.TAG_REGISTRATION)
        assert captured.frame[0] == wire.TAG_REGISTRATION

    def test_no_match_times_out(self):
        world = make_world(seed=82)
        world.authenticate(0)
        with pytest.raises(CaptureTimeout):
            capture(world.tap, wire.TAG_UNIFORM)

    def test_capture_is_passive(self):
        plain = make_world(seed=83)
        observed = make_world(seed=83)
        plain.authenticate(0)
        observed.authenticate(0)
        capture(observed.tap, wire.TAG_AUTH_REQUEST)
        assert [e.frame for e in plain.tap.events] == [e.frame for e in observed.tap.events]

    def test_callable_predicate(self):
        world = make_world(seed=84)
        world.authenticate(0)
        captured = capture(world.tap, lambda e: e.direction == "sn->ue")
        assert captured.direction == "sn->ue"


class TestReplay:
    def test_same_ue_synch_failure(self):
        world = make_world(seed=85)
        world.authenticate(0)
        captured = capture(world.tap, wire.TAG_AUTH_REQUEST)
        reply = replay_to(world, captured, 0)
        assert reply.tag == wire.TAG_AUTH_FAILURE
        msg = wire.decode_message(reply.frame)
        assert msg.cause is FailureCause.SYNCH_FAILURE
        assert msg.auts is not None

    def test_different_ue_mac_failure(self):
        world = make_world(seed=86)
        world.authenticate(0)
        captured = capture(world.tap, wire.TAG_AUTH_REQUEST)
        reply = replay_to(world, captured, 1)
        assert wire.decode_message(reply.frame).cause is FailureCause.MAC_FAILURE

    def test_nonce_mode_rejects_uniformly(self):
        world = make_world(VariantMode.NONCE_IN_SUCI, seed=87)
        world.authenticate(0)
        world.authenticate(1)
        captured = capture(world.tap, wire.TAG_AUTH_REQUEST)
        reply_same = replay_to(world, captured, 0)
        reply_diff = replay_to(world, captured, 1)
        assert reply_same.tag == wire.TAG_UNIFORM
        assert reply_same.frame == reply_diff.frame

    def test_injected_frames_flagged_adversarial(self):
        world = make_world(seed=88)
        world.authenticate(0)
        captured = capture(world.tap, wire.TAG_AUTH_REQUEST)
        before = len(world.tap.events)
        replay_to(world, captured, 0)
        injected = world.tap.events[before]
        assert injected.adversarial
        assert injected.frame == captured.frame

    def test_only_challenges_can_be_replayed_to_ue(self):
        world = make_world(seed=89)
        world.authenticate(0)
        captured = capture(world.tap, wire.TAG_REGISTRATION)
        with pytest.raises(AttackFailed):
            replay_to(world, captured, 0)


class TestSubstitution:
    def run_substitution(self, variant, seed, probe, burn=0):
        world = make_world(variant, seed=seed)
        world.authenticate(0)
        captured = capture(world.tap, wire.TAG_REGISTRATION)
        world.burn_vectors(0, burn)
        substitute_suci(world.tap, captured)
        outcome = world.authenticate(probe)
        return world, outcome

    def test_baseline_same_ue_in_window_succeeds(self):
        _, outcome = self.run_substitution(VariantMode.BASELINE, seed=90, probe=0)
        assert outcome is AuthOutcome.OK

    def test_baseline_same_ue_out_of_window_synch_fails(self):
        _, outcome = self.run_substitution(VariantMode.BASELINE, seed=91, probe=0, burn=32)
        assert outcome is AuthOutcome.SYNCH_FAILURE

    def test_baseline_different_ue_mac_fails(self):
        _, outcome = self.run_substitution(VariantMode.BASELINE, seed=92, probe=1)
        assert outcome is AuthOutcome.MAC_FAILURE

    def test_nonce_mode_detects_reuse_and_logs(self):
        world, outcome = self.run_substitution(VariantMode.NONCE_IN_SUCI, seed=93, probe=1)
        assert outcome is AuthOutcome.UNIFORM_REJECT
        assert any("nonce-reuse" in e.summary for e in world.tap.events)

    def test_substituted_frame_flagged(self):
        world, _ = self.run_substitution(VariantMode.BASELINE, seed=94, probe=0)
        swapped = [e for e in world.tap.events if "[substituted]" in e.summary]
        assert len(swapped) == 1 and swapped[0].adversarial

    def test_only_registrations_can_substitute(self):
        world = make_world(seed=95)
        world.authenticate(0)
        captured = capture(world.tap, wire.TAG_AUTH_REQUEST)
        with pytest.raises(AttackFailed):
            substitute_suci(world.tap, captured)


class TestFailureMessageAttack:
    def test_baseline_verdicts(self):
        assert (
            attack_failure_message(make_world(seed=96), 0, 0).verdict is Verdict.SAME_SUBSCRIBER
        )
        assert (
            attack_failure_message(make_world(seed=96), 0, 1).verdict
            is Verdict.DIFFERENT_SUBSCRIBER
        )

    @pytest.mark.parametrize(
        "variant",
        [VariantMode.ENC_FAILURE, VariantMode.ENC_RESPONSE, VariantMode.NONCE_IN_SUCI],
    )
    def test_neutralized_variants(self, variant):
        for probe in (0, 1):
            verdict = attack_failure_message(make_world(variant, seed=97), 0, probe)
            assert verdict.verdict is Verdict.INDETERMINATE

    def test_cause_still_visible_in_nonce_in_auts(self):
        assert (
            attack_failure_message(make_world(VariantMode.NONCE_IN_AUTS, seed=98), 0, 0).verdict
            is Verdict.SAME_SUBSCRIBER
        )

    def test_evidence_references_transcript(self):
        world = make_world(seed=99)
        verdict = attack_failure_message(world, 0, 0)
        assert all(0 <= i < len(world.tap.events) for i in verdict.evidence)


class TestSuciReplayAttack:
    def test_baseline_verdicts(self):
        assert attack_suci_replay(make_world(seed=100), 0, 0).verdict is Verdict.SAME_SUBSCRIBER
        assert (
            attack_suci_replay(make_world(seed=100), 0, 1).verdict is Verdict.DIFFERENT_SUBSCRIBER
        )

    def test_enc_failure_does_not_help(self):
        # Sealing only failures leaves the response/failure type distinction.
        assert (
            attack_suci_replay(make_world(VariantMode.ENC_FAILURE, seed=101), 0, 0).verdict
            is Verdict.SAME_SUBSCRIBER
        )
        assert (
            attack_suci_replay(make_world(VariantMode.ENC_FAILURE, seed=101), 0, 1).verdict
            is Verdict.DIFFERENT_SUBSCRIBER
        )

    @pytest.mark.parametrize("variant", [VariantMode.ENC_RESPONSE, VariantMode.NONCE_IN_SUCI])
    def test_neutralized_variants(self, variant):
        for probe in (0, 1):
            verdict = attack_suci_replay(make_world(variant, seed=102), 0, probe)
            assert verdict.verdict is Verdict.INDETERMINATE


class TestAutsDifferential:
    def test_zero_gap_zero_differential(self):
        world = make_world(seed=103)
        assert attack_auts_differential(world, 0, 0) == bytes(6)

    def test_differential_of_adjacent_counters(self):
        # Arrange counters so the two replays see 5 and then 6: the attack's
        # initial honest run adopts the pending vector counter (5).
        world = make_world(seed=104)
        ue = world.ues[0]
        ue.sqn_ue = 4
        world.hn.subscribers[ue.supi.msin].sqn_hn = 5
        differential = attack_auts_differential(world, 0, 1)
        assert differential == bytes(5) + b"\x03"  # 5 xor 6

    def test_matches_true_counter_xor(self):
        world = make_world(seed=105)
        differential = attack_auts_differential(world, 0, 7)
        s_after = world.ues[0].sqn_ue
        s_before = s_after - 7
        assert int.from_bytes(differential, "big") == s_before ^ s_after

    def test_nonce_in_auts_masks_differential(self):
        world = make_world(VariantMode.NONCE_IN_AUTS, seed=106)
        differential = attack_auts_differential(world, 0, 3)
        s_after = world.ues[0].sqn_ue
        assert int.from_bytes(differential, "big") != (s_after - 3) ^ s_after

    def test_nonce_in_suci_defeats_attack(self):
        with pytest.raises(AttackFailed):
            attack_auts_differential(make_world(VariantMode.NONCE_IN_SUCI, seed=107), 0, 1)

    def test_multiple_samples_cumulative_gaps(self):
        world = make_world(seed=108)
        samples = collect_auts_differentials(world, 0, [1, 3])
        assert [gap for _, gap in samples] == [1, 4]
        s_after = world.ues[0].sqn_ue
        s_base = s_after - 4
        assert int.from_bytes(samples[0][0], "big") == s_base ^ (s_base + 1)
        assert int.from_bytes(samples[1][0], "big") == s_base ^ (s_base + 4)


class TestInferSqn:
    def test_survivors_contain_true_counter(self):
        diff = (5 ^ 6).to_bytes(6, "big")
        survivors = infer_sqn([(diff, 1)], bound=1 << 16)
        assert 5 in survivors

    def test_second_sample_shrinks_set(self):
        s = 4242
        one = infer_sqn([((s ^ (s + 1)).to_bytes(6, "big"), 1)], bound=1 << 16)
        two = infer_sqn(
            [
                ((s ^ (s + 1)).to_bytes(6, "big"), 1),
                ((s ^ (s + 3)).to_bytes(6, "big"), 3),
            ],
            bound=1 << 16,
        )
        assert s in one and s in two
        assert two <= one
        assert len(two) < len(one)

    def test_contradictory_samples_empty(self):
        samples = [(bytes(6), 1)]  # s ^ (s+1) can never be zero
        assert infer_sqn(samples, bound=1 << 12) == set()

    def test_argument_errors(self):
        with pytest.raises(ValueError):
            infer_sqn([], bound=16)
        with pytest.raises(ValueError):
            infer_sqn([(bytes(6), 1)], bound=0)
        with pytest.raises(ValueError):
            infer_sqn([(bytes(6), 1)], bound=(1 << 20) + 1)


class TestVerdictSoundness:
    def test_randomized_pool(self):
        rng = random.Random(109)
        for trial in range(12):
            world = make_world(seed=1000 + trial, subscribers=8)
            victim = rng.randrange(8)
            probe = rng.randrange(8)
            expected = Verdict.SAME_SUBSCRIBER if probe == victim else Verdict.DIFFERENT_SUBSCRIBER
            assert attack_failure_message(world, victim, probe).verdict is expected
            assert attack_suci_replay(world, victim, probe).verdict is expected


class TestTapTransparency:
    def test_identical_seed_identical_transcript(self):
        first = make_world(seed=110)
        second = make_world(seed=110)
        for world in (first, second):
            world.authenticate(0)
            world.authenticate(1)
        assert [(e.direction, e.frame, e.summary) for e in first.tap.events] == [
            (e.direction, e.frame, e.summary) for e in second.tap.events
        ]

    def test_unarmed_tap_does_not_mutate_frames(self):
        world = make_world(seed=111)
        frame = wire.encode_message(world.ues[0].build_registration())
        assert world.tap.transit("ue->sn", frame) == frame
