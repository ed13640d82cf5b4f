import hashlib
import struct

from hypothesis import given, strategies as st

import pytest
from oracles import hkdf
from voicekex import symbolic as sym
from voicekex.crypto import ConcreteBackend, SymbolicBackend
from voicekex.frames import Commit, KeyShareR, RoleNonce
from voicekex.keyschedule import SCHEDULE_LABELS, Transcript, derive_schedule, message_entry, transcript_digest

Z0 = hashlib.sha256(b"z:0").digest()
TD0 = hashlib.sha256(b"td:0").digest()

# computed once with an independent HKDF (cryptography's HKDF, salt=td, info=label)
GOLDEN = {
    "k1": "a1f3e6d55f934b09c36e018447e03b62eb4edcc28c5e1ecb91311a7b2133ca36",
    "k2": "cda1a93e31850b1eba4b5d5cc4ba8673e15a72dbbf2e3aa10d0215f1ad528d74",
    "k3": "a42f82a4627fc74be860944fee6030742a82c75a634d1b5905cc4b75eff4b60d",
    "session_key": "ae45fd5a73aa85094a145617ae22efe54707cc7425664d33c6193522d855e119",
}
GOLDEN_SAS = 0x23C8


def test_schedule_golden():
    ks = derive_schedule(Z0, TD0)
    for name, hexval in GOLDEN.items():
        assert getattr(ks, name).hex() == hexval
    assert ks.sas == GOLDEN_SAS


def test_labels_are_fixed():
    assert SCHEDULE_LABELS == ("adhoc1", "adhoc2", "adhoc3", "sess", "sas")


@given(st.binary(min_size=32, max_size=32), st.binary(min_size=32, max_size=32))
def test_schedule_matches_hkdf_oracle(z, td):
    ks = derive_schedule(z, td)
    expect = [hkdf(z, td, lbl.encode()) for lbl in SCHEDULE_LABELS]
    assert list(ks.keys()) == expect[:4]
    assert ks.sas == int.from_bytes(expect[4][:2], "big")
    assert ConcreteBackend().derive_sas(z, td) == ks.sas
    assert len(set(ks.keys())) == 4


def _oracle_digest(entries):
    return hashlib.sha256(b"".join(struct.pack(">I", len(e)) + e for e in entries)).digest()


def test_transcript_digest_golden():
    entries = [b"\x01" + bytes(range(8)), b"\x02" + bytes(32), b"\x03" + b"\x07" * 48]
    digest = transcript_digest(entries)
    assert digest == _oracle_digest(entries)
    assert digest.hex() == "c9b517ddc39869a7bead3d9385fdc424f8a2dba745e78d0e3d53fec567bb901d"


@given(st.lists(st.binary(max_size=40), min_size=1, max_size=6))
def test_transcript_digest_matches_oracle(entries):
    assert transcript_digest(entries) == _oracle_digest(entries)


def test_length_prefix_prevents_boundary_shift():
    assert transcript_digest([b"ab", b"c"]) != transcript_digest([b"a", b"bc"])
    assert transcript_digest([b"a", b"b"]) != transcript_digest([b"b", b"a"])


def test_transcript_is_append_only():
    t0 = Transcript()
    t1 = t0.append(b"x")
    assert len(t0) == 0 and len(t1) == 1
    with pytest.raises(ValueError):
        transcript_digest(t0)
    assert transcript_digest(t1) == transcript_digest([b"x"])


def test_message_entries():
    be = ConcreteBackend()
    assert message_entry(be, RoleNonce(1)) == b"\x01" + (1).to_bytes(8, "big")
    sb = SymbolicBackend()
    t = message_entry(sb, KeyShareR(sym.Atom("p"), sym.Atom("s")))
    assert sym.unchain(t, 3) == [sym.Atom("tag:3"), sym.Atom("p"), sym.Atom("s")]
    assert message_entry(sb, Commit(sym.Atom("c"))) != message_entry(sb, Commit(sym.Atom("d")))


def test_symbolic_schedule_terms():
    sb = SymbolicBackend()
    z, td = sym.Atom("z"), sym.Atom("td")
    ks = derive_schedule(z, td, sb)
    assert ks.session_key == sym.Kdf("sess", z, td)
    assert ks.sas == sym.Kdf("sas", z, td)


def test_td_bit_flip_changes_sas():
    import random

    rnd = random.Random(11)
    changed = 0
    for _ in range(1000):
        z, td = rnd.randbytes(32), bytearray(rnd.randbytes(32))
        before = derive_schedule(z, bytes(td)).sas
        bit = rnd.randrange(256)
        td[bit // 8] ^= 1 << (bit % 8)
        changed += derive_schedule(z, bytes(td)).sas != before
    assert changed >= 990
