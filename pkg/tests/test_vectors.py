import hashlib
import struct
from importlib import resources

import pytest

from oracles import crc16_bitwise, hkdf
from voicekex.vectors import VECTOR_FILES, emit_vectors, reference_messages


@pytest.fixture(scope="module")
def vectors(tmp_path_factory):
    out = tmp_path_factory.mktemp("vectors")
    emit_vectors(out)
    return {name: (out / name).read_text("ascii").splitlines() for name in VECTOR_FILES}


def _fields(line):
    return dict(part.split("=", 1) for part in line.split())


def _body(lines):
    return [ln for ln in lines if not ln.startswith("#")]


def test_kdf_file_matches_oracle(vectors):
    rows = _body(vectors["kdf.txt"])
    assert len(rows) == 8
    for i, row in enumerate(rows):
        f = _fields(row)
        z, td = bytes.fromhex(f["z"]), bytes.fromhex(f["td"])
        assert z == hashlib.sha256(f"z:{i}".encode()).digest()
        for name, label in [("k1", b"adhoc1"), ("k2", b"adhoc2"), ("k3", b"adhoc3"), ("sess", b"sess")]:
            assert f[name] == hkdf(z, td, label).hex()
        assert f["sas"] == hkdf(z, td, b"sas", 2).hex()


def test_transcript_file_matches_oracle(vectors):
    f = _fields(_body(vectors["transcript.txt"])[0])
    entries = [bytes.fromhex(f[f"e{i}"]) for i in range(3)]
    assert [e[0] for e in entries] == [1, 2, 3]
    framed = b"".join(struct.pack(">I", len(e)) + e for e in entries)
    assert f["digest"] == hashlib.sha256(framed).hexdigest()


def test_crc_file_matches_bitwise_oracle(vectors):
    rows = [_fields(r) for r in _body(vectors["crc.txt"])]
    assert rows[0] == {"data": b"123456789".hex(), "crc": "29b1"}
    for f in rows:
        assert int(f["crc"], 16) == crc16_bitwise(bytes.fromhex(f["data"]))


def test_frame_file_matches_manual_layout(vectors):
    rows = [_fields(r) for r in _body(vectors["frames.txt"])]
    assert len(rows) == len(reference_messages()) == 8
    for f in rows:
        frame = bytes.fromhex(f["frame"])
        tag, sid, rc, plen = struct.unpack(">BIBH", frame[:8])
        assert (tag, sid, rc) == (int(f["tag"], 16), int(f["sid"], 16), int(f["rc"], 16))
        assert len(frame) == 8 + plen + 2
        assert int.from_bytes(frame[-2:], "big") == crc16_bitwise(frame[:-2])


def test_sas_digit_file(vectors):
    lines = vectors["sas_digits.txt"]
    assert len(lines) == 65536
    assert lines == [f"{s:04x} {s:05d}" for s in range(65536)]


def test_sas_word_file(vectors):
    words = resources.files("voicekex.data").joinpath("pgp_words.txt").read_text().split()
    lines = vectors["sas_words.txt"]
    assert len(lines) == 65536
    assert lines[0] == "0000 aardvark adroitness"
    for s in (0x0000, 0x00FF, 0x1234, 0xFF01, 0xFFFF):
        assert lines[s] == f"{s:04x} {words[s >> 8]} {words[256 + (s & 0xFF)]}"


def test_emission_is_reproducible(tmp_path, vectors):
    emit_vectors(tmp_path)
    for name in VECTOR_FILES:
        assert (tmp_path / name).read_text("ascii").splitlines() == vectors[name]
