import pytest
from hypothesis import given, strategies as st

from voicekex.adversary import (
    ACTIONS,
    Drop,
    Forward,
    GrindSas,
    InjectFrame,
    MitmAgent,
    MitmDh,
    ModifyBits,
    Replay,
    ScriptError,
    StealSigningKey,
    StripSignature,
    action_to_dict,
    parse_action,
)
from voicekex.crypto import Drbg, make_backend
from voicekex.frames import Abort, Commit, KeyShareI, KeyShareR, RoleNonce, encode_frame
from voicekex.harness import ScenarioConfig, run_trial
from voicekex.keyschedule import Transcript, message_entry

actions = st.one_of(
    st.just(Forward()),
    st.builds(Drop, st.integers(0, 50)),
    st.builds(Replay, st.integers(0, 50), st.integers(0, 500)),
    st.builds(ModifyBits, st.integers(0, 50), st.binary(min_size=1, max_size=8)),
    st.builds(InjectFrame, st.binary(min_size=1, max_size=20), st.sampled_from(["alice", "bob"]), st.integers(0, 100)),
    st.just(MitmDh()),
    st.just(StripSignature()),
    st.builds(StealSigningKey, st.sampled_from(["before", "after"])),
    st.builds(GrindSas, st.integers(0, 16)),
)


@given(actions)
def test_action_json_roundtrip(act):
    assert parse_action(action_to_dict(act)) == act


def test_registry_names():
    assert set(ACTIONS) == {
        "Forward", "Drop", "Replay", "ModifyBits", "InjectFrame", "MitmDh",
        "StripSignature", "StealSigningKey", "GrindSas",
    }
    assert parse_action("MitmDh") == MitmDh()
    assert parse_action({"action": "ModifyBits", "n": 2, "mask": "ff00"}) == ModifyBits(2, b"\xff\x00")


@pytest.mark.parametrize(
    "spec",
    [
        {"action": "Teleport"},
        {"n": 3},
        {"action": "Drop"},
        {"action": "Drop", "n": 1, "k": 2},
        {"action": "ModifyBits", "n": 1, "mask": "xyz"},
        {"action": "StealSigningKey", "when": "during"},
        {"action": "GrindSas", "attempts": -1},
        42,
    ],
)
def test_bad_actions(spec):
    with pytest.raises(ScriptError):
        parse_action(spec)


def _cfg(script, scenario="a", mode="concrete", **kw):
    return ScenarioConfig(scenario, adversary_script=tuple(script), mode=mode, **kw)


def test_drop_is_recovered_by_retransmission():
    run = run_trial(_cfg([Drop(0), Drop(3)]), 0)
    assert run.record.completed


def test_modify_bits_with_fixed_crc_is_detected_or_survived():
    # the CRC is recomputed, so only the cryptographic checks stand in the way
    for n in range(8):
        rec = run_trial(_cfg([ModifyBits(n, b"\x01")]), 0).record
        assert not rec.attacker_has_session_key
        assert rec.injective_agreement_holds
        assert rec.completed or rec.detected_by is not None


def test_replay_is_harmless():
    rec = run_trial(_cfg([Replay(n, delay=5) for n in range(10)]), 0).record
    assert rec.completed and not rec.attacker_has_session_key


def test_injected_garbage_is_ignored():
    junk = [InjectFrame(b"\x00" * 12, "bob", 0), InjectFrame(encode_frame(RoleNonce(1), 9), "alice", 3)]
    rec = run_trial(_cfg(junk), 0).record
    assert rec.completed


def test_injected_abort_for_other_session_is_ignored():
    rec = run_trial(_cfg([InjectFrame(encode_frame(Abort(4), 0xFFFFFFFF), "bob", 50)]), 0).record
    assert rec.completed


@pytest.mark.parametrize("mode", ["symbolic", "concrete"])
def test_mitm_with_pre_stolen_keys_wins_even_with_cards(mode):
    run = run_trial(_cfg([MitmDh(), StealSigningKey("before")], mode=mode), 0)
    rec = run.record
    assert rec.completed and rec.attacker_has_session_key
    assert not rec.injective_agreement_holds
    assert len(set(run.adversary.mitm.session_keys())) == 2


def test_signature_stripping_falls_back_to_sas():
    rec = run_trial(_cfg([MitmDh(), StripSignature()]), 0).record
    assert rec.detected_by == "sas_mismatch"


@pytest.mark.parametrize("scenario, detector", [("a", "sig_invalid"), ("b", "sig_invalid"), ("c", "sas_mismatch")])
def test_plain_relay_is_caught(scenario, detector):
    rec = run_trial(_cfg([MitmDh()], scenario=scenario), 0).record
    assert not rec.completed and rec.detected_by == detector
    assert not rec.attacker_has_session_key


def test_relay_without_sas_enforcement_wins():
    rec = run_trial(_cfg([MitmDh()], scenario="d"), 0).record
    assert rec.completed and rec.attacker_has_session_key


@pytest.mark.parametrize("mode", ["concrete", "symbolic"])
def test_grinding_digest_equals_full_transcript_hash(mode):
    be = make_backend(mode)
    rng = Drbg(5)
    agent = MitmAgent(be, rng, grind=4)
    _, pub = be.gen_ephemeral_keypair(rng)
    msgs = [RoleNonce(1), RoleNonce(2), Commit(be.hash(b"c")), KeyShareR(pub, be.random_nonce(rng))]
    base = Transcript(tuple(message_entry(be, m) for m in msgs))
    digest = agent._transcript_digester(base)
    for _ in range(3):
        _, cand = be.gen_ephemeral_keypair(rng)
        m = KeyShareI(cand, be.random_nonce(rng))
        assert digest(m) == be.transcript_hash(base.append(message_entry(be, m)).entries)
