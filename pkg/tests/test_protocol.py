"""Actor state machines: honest flows, failures, windows, resynchronisation."""

import random

import pytest

import oracles
from akalab import crypto, wire
from akalab.actors import (
    ResyncRejected,
    SubscriberNotFound,
    UnknownSession,
    window_check,
)
from akalab.messages import (
    AuthOutcome,
    AuthenticationFailure,
    AuthenticationRequest,
    AuthenticationResponse,
    FailureCause,
    RegistrationRequest,
    SupiIdentity,
    sqn_to_bytes,
)
from akalab.variants import VariantMode
from akalab.world import World


def make_world(variant=VariantMode.BASELINE, subscribers=2, seed=0, window=32):
    return World(variant=variant, subscribers=subscribers, seed=seed, window=window)


def record_of(world, ue_index):
    return world.hn.subscribers[world.ues[ue_index].supi.msin]


class TestWindowCheck:
    def test_boundary_examples(self):
        assert window_check(10, 11, 32)
        assert not window_check(10, 10, 32)
        assert window_check(10, 42, 32)
        assert not window_check(10, 43, 32)

    def test_brute_force_boundary_scan(self):
        # Derived by enumerating every candidate counter around the window.
        accepted = [p for p in range(0, 65) if window_check(10, p, 32)]
        assert accepted == list(range(11, 43))

    def test_equivalence_to_inequality_on_grid(self):
        for w in (1, 32, 64):
            for sqn_ue in range(0, 257, 3):
                for sqn_prime in range(0, 257):
                    assert window_check(sqn_ue, sqn_prime, w) == oracles.window_accepts(
                        sqn_ue, sqn_prime, w
                    )

    def test_no_wraparound_acceptance(self):
        top = (1 << 48) - 1
        assert not window_check(top, 0, 32)
        assert not window_check(top, top, 32)

    def test_window_must_be_positive(self):
        with pytest.raises(ValueError):
            window_check(0, 1, 0)


class TestHonestRuns:
    @pytest.mark.parametrize("variant", list(VariantMode))
    def test_full_exchange_succeeds(self, variant):
        world = make_world(variant=variant, seed=17)
        assert world.authenticate(0) is AuthOutcome.OK

    @pytest.mark.parametrize("variant", [v for v in VariantMode if v is not VariantMode.NONCE_IN_SUCI])
    def test_ue_counter_tracks_issued_vector(self, variant):
        world = make_world(variant=variant, seed=18)
        ue = world.ues[0]
        assert world.authenticate(0) is AuthOutcome.OK
        # The counter adopted by the UE is the one the vector carried; the
        # home network has already advanced past it.
        assert ue.sqn_ue == record_of(world, 0).sqn_hn - 1

    def test_repeated_runs_stay_synchronized(self):
        world = make_world(seed=19)
        for _ in range(10):
            assert world.authenticate(0) is AuthOutcome.OK

    def test_sqn_never_decreases(self):
        world = make_world(seed=20)
        ue = world.ues[0]
        previous = ue.sqn_ue
        for _ in range(6):
            world.authenticate(0)
            assert ue.sqn_ue >= previous
            previous = ue.sqn_ue


class TestRegistration:
    def test_baseline_payload_is_packed_msin(self):
        world = make_world(seed=21)
        ue = world.ues[0]
        msg = ue.build_registration()
        payload = crypto.ecies_reveal(msg.suci.envelope, world.hn.keypair.secret)
        assert payload == ue.supi.msin
        assert len(payload) == 5

    def test_fresh_envelope_per_registration(self):
        world = make_world(seed=22)
        ue = world.ues[0]
        first = wire.encode_message(ue.build_registration())
        second = wire.encode_message(ue.build_registration())
        assert first != second

    def test_unknown_subscriber_rejected(self):
        world = make_world(seed=23)
        stranger = SupiIdentity.from_digits("208", "95", "9876543210")
        envelope = crypto.ecies_conceal(stranger.msin, world.hn.public_key)
        from akalab.messages import Suci

        msg = RegistrationRequest(suci=Suci(mcc="208", mnc="95", envelope=envelope))
        with pytest.raises(SubscriberNotFound):
            world.hn.handle_registration(msg, world.sn_name)

    def test_tampered_envelope_rejected(self):
        world = make_world(seed=24)
        msg = world.ues[0].build_registration()
        bad = crypto.EciesEnvelope(
            ephemeral_public=msg.suci.envelope.ephemeral_public,
            ciphertext=bytes(len(msg.suci.envelope.ciphertext)),
            tag=msg.suci.envelope.tag,
        )
        from akalab.messages import Suci

        tampered = RegistrationRequest(
            suci=Suci(mcc=msg.suci.mcc, mnc=msg.suci.mnc, envelope=bad)
        )
        with pytest.raises(crypto.IntegrityError):
            world.hn.handle_registration(tampered, world.sn_name)

    def test_issued_vector_internally_consistent(self):
        world = make_world(seed=25)
        reg = world.ues[0].build_registration()
        request, vector = world.hn.handle_registration(reg, world.sn_name)
        assert isinstance(request, AuthenticationRequest)
        k = record_of(world, 0).k
        res_star = crypto.derive_res_star(k, crypto.f2(k, vector.rand), vector.rand, world.sn_name)
        assert vector.hxres_star == crypto.hash_res_star(vector.rand, res_star)

    def test_counter_increments_once_per_vector(self):
        world = make_world(seed=26)
        record = record_of(world, 0)
        before = record.sqn_hn
        world.hn.handle_registration(world.ues[0].build_registration(), world.sn_name)
        assert record.sqn_hn == before + 1


class TestServingNetwork:
    def test_forwarded_challenge_is_unmodified(self):
        world = make_world(seed=27)
        request, vector = world.hn.handle_registration(
            world.ues[0].build_registration(), world.sn_name
        )
        _, forwarded = world.sn.forward_and_hold(vector)
        assert wire.encode_message(forwarded) == wire.encode_message(request)

    def test_sessions_are_isolated(self):
        world = make_world(seed=28)
        _, vec_a = world.hn.handle_registration(world.ues[0].build_registration(), world.sn_name)
        _, vec_b = world.hn.handle_registration(world.ues[1].build_registration(), world.sn_name)
        handle_a, _ = world.sn.forward_and_hold(vec_a)
        handle_b, _ = world.sn.forward_and_hold(vec_b)
        assert handle_a != handle_b
        assert world.sn.get_session(handle_a).hxres_star == vec_a.hxres_star
        assert world.sn.get_session(handle_b).hxres_star == vec_b.hxres_star

    def test_verify_response_paths(self):
        world = make_world(seed=29)
        ue = world.ues[0]
        request, vector = world.hn.handle_registration(ue.build_registration(), world.sn_name)
        handle, _ = world.sn.forward_and_hold(vector)
        reply = ue.handle_auth_request(request)
        assert isinstance(reply, AuthenticationResponse)
        assert world.sn.verify_response(handle, reply) is AuthOutcome.OK

        flipped = bytearray(reply.res_star)
        flipped[0] ^= 1
        bad = AuthenticationResponse(res_star=bytes(flipped))
        assert world.sn.verify_response(handle, bad) is AuthOutcome.SN_HASH_MISMATCH

    def test_response_bound_to_serving_network(self):
        world = make_world(seed=30)
        ue = world.ues[0]
        request, vector = world.hn.handle_registration(ue.build_registration(), world.sn_name)
        handle, _ = world.sn.forward_and_hold(vector)
        wrong_sn = crypto.derive_res_star(
            ue.k, crypto.f2(ue.k, request.rand), request.rand, "5G:other-network"
        )
        assert (
            world.sn.verify_response(handle, AuthenticationResponse(res_star=wrong_sn))
            is AuthOutcome.SN_HASH_MISMATCH
        )

    def test_unknown_session_raises(self):
        world = make_world(seed=31)
        with pytest.raises(UnknownSession):
            world.sn.verify_response(b"\x00" * 8, AuthenticationResponse(res_star=bytes(16)))


class TestChallengeHandling:
    def test_replay_after_success_gives_synch_failure_with_auts(self):
        world = make_world(seed=32)
        ue = world.ues[0]
        request, _ = world.hn.handle_registration(ue.build_registration(), world.sn_name)
        assert isinstance(ue.handle_auth_request(request), AuthenticationResponse)
        replayed = ue.handle_auth_request(request)
        assert isinstance(replayed, AuthenticationFailure)
        assert replayed.cause is FailureCause.SYNCH_FAILURE
        assert replayed.auts is not None

    def test_wrong_key_gives_mac_failure_without_auts(self):
        world = make_world(seed=33)
        request, _ = world.hn.handle_registration(world.ues[0].build_registration(), world.sn_name)
        other = world.ues[1]
        reply = other.handle_auth_request(request)
        assert isinstance(reply, AuthenticationFailure)
        assert reply.cause is FailureCause.MAC_FAILURE
        assert reply.auts is None

    def test_mac_failure_leaves_counter_untouched(self):
        world = make_world(seed=34)
        request, _ = world.hn.handle_registration(world.ues[0].build_registration(), world.sn_name)
        other = world.ues[1]
        before = other.sqn_ue
        other.handle_auth_request(request)
        assert other.sqn_ue == before


class TestResynchronisation:
    def desynchronize(self, world, gap):
        record = record_of(world, 0)
        record.sqn_hn = world.ues[0].sqn_ue + gap

    def test_auts_unmask_recovers_counter(self):
        world = make_world(seed=35)
        ue = world.ues[0]
        rand = random.Random(1).randbytes(16)
        auts = ue.build_auts(rand)
        mask = crypto.f5_star(ue.k, rand)
        assert crypto.xor_bytes(auts.conc, mask) == sqn_to_bytes(ue.sqn_ue)

    def test_same_rand_same_mask(self):
        world = make_world(seed=36)
        ue = world.ues[0]
        rand = random.Random(2).randbytes(16)
        assert ue.build_auts(rand).conc == ue.build_auts(rand).conc

    def test_resync_rebases_home_counter(self):
        world = make_world(seed=37)
        self.desynchronize(world, gap=100)
        assert world.authenticate(0) is AuthOutcome.SYNCH_FAILURE
        ue = world.ues[0]
        # Re-based past the UE counter: the next vector lands in-window.
        assert record_of(world, 0).sqn_hn == ue.sqn_ue + 2
        assert world.authenticate(0) is AuthOutcome.OK

    def test_resync_with_equal_counters_issues_next_counter(self):
        world = make_world(seed=38)
        ue = world.ues[0]
        record = record_of(world, 0)
        record.sqn_hn = ue.sqn_ue  # stale: strictly below the window
        request, _ = world.hn.handle_registration(ue.build_registration(), world.sn_name)
        failure = ue.handle_auth_request(request)
        assert isinstance(failure, AuthenticationFailure)
        retry, _ = world.hn.handle_auts(failure.auts, request.rand, world.sn_name)
        carried = crypto.xor_bytes(retry.autn.conc, crypto.f5(ue.k, retry.rand))
        assert carried == sqn_to_bytes(ue.sqn_ue + 1)
        assert isinstance(ue.handle_auth_request(retry), AuthenticationResponse)

    def test_tampered_mac_s_rejected(self):
        world = make_world(seed=39)
        ue = world.ues[0]
        request, _ = world.hn.handle_registration(ue.build_registration(), world.sn_name)
        ue.handle_auth_request(request)
        failure = ue.handle_auth_request(request)  # replay forces synch failure
        bad_mac = bytearray(failure.auts.mac_s)
        bad_mac[0] ^= 1
        from akalab.messages import Auts

        tampered = Auts(conc=failure.auts.conc, mac_s=bytes(bad_mac))
        with pytest.raises(ResyncRejected):
            world.hn.handle_auts(tampered, request.rand, world.sn_name)

    def test_auts_for_unknown_challenge_rejected(self):
        world = make_world(seed=40)
        ue = world.ues[0]
        rand = random.Random(3).randbytes(16)
        with pytest.raises(ResyncRejected):
            world.hn.handle_auts(ue.build_auts(rand), rand, world.sn_name)

    def test_convergence_across_initial_gaps(self):
        # One failed exchange at most, then the next one always succeeds,
        # for every starting gap up to twice the window.
        for gap in range(0, 2 * 32 + 1):
            world = make_world(seed=41 + gap)
            self.desynchronize(world, gap)
            first = world.authenticate(0)
            assert first in (AuthOutcome.OK, AuthOutcome.SYNCH_FAILURE), gap
            assert world.authenticate(0) is AuthOutcome.OK, gap

    def test_inline_resync_delivery_completes_exchange(self):
        world = make_world(seed=42)
        self.desynchronize(world, gap=200)
        assert world.authenticate(0, resync_delivery=True) is AuthOutcome.OK
