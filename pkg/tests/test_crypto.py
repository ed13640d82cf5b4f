import hashlib

import pytest
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305
from hypothesis import given, strategies as st

from oracles import hkdf, x25519, x25519_base
from voicekex import symbolic as sym
from voicekex.crypto import (
    AuthFailure,
    ConcreteBackend,
    Drbg,
    InvalidShare,
    NonceReuseError,
    SeqNonce,
    SymbolicBackend,
    hkdf_expand,
    hkdf_extract,
    make_backend,
)

ALICE_SK = bytes.fromhex("77076d0a7318a57d3c16c17251b26645df4c2f87ebc0992ab177fba51db92c2a")
ALICE_PK = bytes.fromhex("8520f0098930a754748b7ddcb43ef75a0dbf3a0d26381af4eba4a98eaa9b4e6a")
BOB_SK = bytes.fromhex("5dab087e624a8a4b79e17f8b83800ee66f3bb1292618b6fd1c2f8b27ff88e0eb")
BOB_PK = bytes.fromhex("de9edb7d7b7dc1b4d35b61c2ece435373f8343c85b78674dadfc7e146f882b4f")
SHARED = bytes.fromhex("4a5d9d5ba4ce2de1728e3bf480350f25e07e21c947d19e3376f09b3c1e161742")


@pytest.fixture
def be():
    return ConcreteBackend()


def test_x25519_published_vectors(be):
    assert be.public_share(ALICE_SK) == ALICE_PK
    assert be.public_share(BOB_SK) == BOB_PK
    assert be.dh_shared(ALICE_SK, BOB_PK) == SHARED
    assert be.dh_shared(BOB_SK, ALICE_PK) == SHARED


def test_ladder_oracle_agrees_on_published_vectors():
    assert x25519_base(ALICE_SK) == ALICE_PK
    assert x25519(BOB_SK, ALICE_PK) == SHARED


@given(st.binary(min_size=32, max_size=32), st.binary(min_size=32, max_size=32))
def test_dh_matches_ladder_and_commutes(a, b):
    be = ConcreteBackend()
    pa, pb = be.public_share(a), be.public_share(b)
    assert pa == x25519_base(a)
    z = be.dh_shared(a, pb)
    assert z == be.dh_shared(b, pa) == x25519(a, pb)


@pytest.mark.parametrize(
    "share",
    [
        bytes(32),
        (1).to_bytes(32, "little"),
        (2**255 - 20).to_bytes(32, "little"),  # u = p - 1
        (2**255 - 19).to_bytes(32, "little"),  # u = p, non-canonical
        (2**255).to_bytes(33, "little")[:32],  # high bit set
        bytes(31),
        bytes(33),
        bytes([0xFF] * 32),
    ],
)
def test_bad_shares_rejected(be, share):
    with pytest.raises(InvalidShare):
        be.dh_shared(ALICE_SK, share)


def test_aead_rfc_vector_through_sequence_nonce():
    key = bytes(range(0x80, 0xA0))
    aad = bytes.fromhex("50515253c0c1c2c3c4c5c6c7")
    pt = (
        b"Ladies and Gentlemen of the class of '99: If I could offer you only one tip "
        b"for the future, sunscreen would be it."
    )
    expected = bytes.fromhex(
        "d31a8d34648e60db7b86afbc53ef7ec2a4aded51296e08fea9e2b5a736ee62d6"
        "3dbea45e8ca9671282fafb69da92728b1a71de0a9e060b2905d6a5b67ecd3b36"
        "92ddbd7f2d778b8c9803aee328091b58fab324e4fad675945585808b4831d7bc"
        "3ff4def08e4b7a9de576d26586cec64b6116"
        "1ae10b594f09e26a7e902ecbd0600691"
    )
    nonce = bytes.fromhex("070000004041424344454647")
    assert ChaCha20Poly1305(key).encrypt(nonce, pt, aad) == expected
    # the package never uses that nonce, but its framing must reach the same primitive
    be = ConcreteBackend()
    seq = SeqNonce(0, int.from_bytes(nonce, "big"))
    assert seq.to_bytes() == nonce
    assert be.aead_seal(key, seq, aad, pt) == expected
    assert be.aead_open(key, seq, aad, expected) == pt


def test_sequence_nonce_layout():
    assert SeqNonce(0, 0).to_bytes() == bytes(12)
    assert SeqNonce(1, 0).to_bytes() == b"\x80" + bytes(11)
    assert SeqNonce(1, 5).to_bytes() == b"\x80" + bytes(10) + b"\x05"
    with pytest.raises(ValueError):
        SeqNonce(2, 0).to_bytes()
    with pytest.raises(ValueError):
        SeqNonce(0, 2**95).to_bytes()


def test_aead_tamper_and_wrong_key(be):
    key = bytes(32)
    ct = be.aead_seal(key, SeqNonce(0, 0), b"ad", b"hello")
    with pytest.raises(AuthFailure):
        be.aead_open(key, SeqNonce(0, 0), b"ad", ct[:-1] + bytes([ct[-1] ^ 1]))
    with pytest.raises(AuthFailure):
        be.aead_open(bytes([1] * 32), SeqNonce(0, 0), b"ad", ct)
    with pytest.raises(AuthFailure):
        be.aead_open(key, SeqNonce(1, 0), b"ad", ct)
    with pytest.raises(AuthFailure):
        be.aead_open(key, SeqNonce(0, 0), b"AD", ct)


def test_nonce_reuse_guard(be):
    be.aead_seal(bytes(32), SeqNonce(0, 0), b"", b"x")
    with pytest.raises(NonceReuseError):
        be.aead_seal(bytes(32), SeqNonce(0, 0), b"", b"y")
    be.aead_seal(bytes(32), SeqNonce(0, 1), b"", b"y")


def test_sha256_empty_vector(be):
    assert be.hash(b"").hex() == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    assert be.hash(b"ab", b"c") == hashlib.sha256(b"abc").digest()
    assert be.hash(b"x") == be.hash(b"x")
    assert be.hash(b"x") != be.hash(b"x\x00")


def test_hkdf_rfc5869_case1():
    ikm = bytes([0x0B] * 22)
    salt = bytes(range(13))
    info = bytes(range(0xF0, 0xFA))
    prk = hkdf_extract(salt, ikm)
    assert prk.hex() == "077709362c2e32df0ddc3f0dc47bba6390b6c73bb50f9c3122ec844ad7c2b3e5"
    okm = hkdf_expand(prk, info, 42)
    assert okm.hex() == (
        "3cb25f25faacd57a90434f64d0362f2a2d2d0a90cf1a5a4c5db02d56ecc4c5bf34007208d5b887185865"
    )


@given(st.binary(max_size=64), st.binary(max_size=64), st.binary(max_size=16), st.integers(1, 100))
def test_hkdf_matches_library_oracle(ikm, salt, info, n):
    assert hkdf_expand(hkdf_extract(salt, ikm), info, n) == hkdf(ikm, salt, info, n)


def test_signatures(be):
    sk, vk = be.gen_signing_keypair(bytes(range(32)))
    digest = be.hash(b"transcript")
    sig = be.sign_transcript(sk, digest)
    assert len(sig) == 64
    assert be.verify_signature(vk, digest, sig)
    assert not be.verify_signature(vk, be.hash(b"other"), sig)
    assert not be.verify_signature(vk, digest, sig[:-1] + bytes([sig[-1] ^ 1]))
    assert not be.verify_signature(b"short", digest, sig)


@given(st.lists(st.one_of(st.none(), st.binary(max_size=40)), min_size=1, max_size=6))
def test_pack_roundtrip(items):
    be = ConcreteBackend()
    assert be.unpack(be.pack(*items), len(items)) == items
    sb = SymbolicBackend()
    assert [None if x is None else sb.lower(x) for x in sb.unpack(sb.pack(*items), len(items))] == items


def test_unpack_rejects_malformed(be):
    with pytest.raises(ValueError):
        be.unpack(b"\x00\x05ab", 1)
    with pytest.raises(ValueError):
        be.unpack(be.pack(b"a") + b"x", 1)
    with pytest.raises(ValueError):
        be.unpack(b"", 1)


def test_drbg_deterministic_and_independent():
    a, b = Drbg(b"seed"), Drbg(b"seed")
    assert a.random_bytes(40) == b.random_bytes(40)
    c = a.copy()
    assert a.random_bytes(8) == c.random_bytes(8)
    assert Drbg(1).random_bytes(16) != Drbg(2).random_bytes(16)
    assert 0 <= Drbg(3).randbits(64) < 2**64


def test_symbolic_backend_shapes():
    sb = make_backend("symbolic")
    rng = Drbg(0)
    x, gx = sb.gen_ephemeral_keypair(rng)
    y, gy = sb.gen_ephemeral_keypair(rng)
    assert isinstance(gx, sym.Exp)
    assert sb.dh_shared(x, gy) == sb.dh_shared(y, gx)
    with pytest.raises(InvalidShare):
        sb.dh_shared(x, sym.Atom("junk"))
    k = sb.derive_schedule(sb.dh_shared(x, gy), sym.Atom("td"))
    ct = sb.aead_seal(k.k1, SeqNonce(0, 0), b"aad", sym.Atom("m"))
    assert sb.aead_open(k.k1, SeqNonce(0, 0), b"aad", ct) == sym.Atom("m")
    with pytest.raises(AuthFailure):
        sb.aead_open(k.k2, SeqNonce(0, 0), b"aad", ct)
    sk, vk = sb.gen_signing_keypair(bytes(32))
    sig = sb.sign_transcript(sk, sym.Atom("td"))
    assert sb.verify_signature(vk, sym.Atom("td"), sig)
    assert not sb.verify_signature(vk, sym.Atom("other"), sig)
    with pytest.raises(ValueError):
        make_backend("quantum")
