"""Cryptographic primitives behind a common backend interface.

Two backends share the same method surface:

* :class:`ConcreteBackend` works on bytes with X25519, ChaCha20-Poly1305,
  Ed25519, SHA-256 and HKDF-SHA256.
* :class:`SymbolicBackend` works on :mod:`voicekex.symbolic` terms and models
  perfect primitives, so protocol traces can be fed to the knowledge closure.

Protocol code only ever calls backend methods, which is what lets one state
machine run in both worlds.
"""

from __future__ import annotations

import functools
import hashlib
import hmac
import struct
from dataclasses import dataclass
from typing import Any, Sequence

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives.asymmetric import ed25519, x25519
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305

from voicekex import symbolic as sym

SCALAR_LEN = 32
SHARE_LEN = 32
KEY_LEN = 32
DIGEST_LEN = 32
NONCE_LEN = 16
SIG_LEN = 64
VK_LEN = 32

_P25519 = 2**255 - 19

# Encodings of points of order 1, 2, 4 and 8 on curve25519 (and their
# non-canonical twins are already caught by the range check).
_LOW_ORDER_U = frozenset(
    [
        0,
        1,
        325606250916557431795983626356110631294008115727848805560023387167927233504,
        39382357235489614581723060781553021112529911719440698176882885853963445705823,
        _P25519 - 1,
    ]
)


class CryptoError(Exception):
    """Base class for primitive-level failures."""


class AuthFailure(CryptoError):
    """AEAD open failed: wrong key, wrong nonce/aad, or tampered ciphertext."""


class InvalidShare(CryptoError):
    """Peer public share is malformed or of low order."""


class NonceReuseError(CryptoError):
    """The same (key, nonce) pair was sealed twice."""


class Drbg:
    """Seedable HMAC-SHA256 counter-mode generator.

    Copies are independent, which lets :func:`voicekex.protocol.step` stay a
    pure function of its inputs.
    """

    __slots__ = ("_key", "counter")

    def __init__(self, seed: bytes | int, counter: int = 0) -> None:
        if isinstance(seed, int):
            seed = seed.to_bytes(16, "big", signed=False)
        self._key = hashlib.sha256(b"voicekex-drbg" + seed).digest()
        self.counter = counter

    def random_bytes(self, n: int) -> bytes:
        out = bytearray()
        while len(out) < n:
            out += hmac.digest(self._key, self.counter.to_bytes(8, "big"), "sha256")
            self.counter += 1
        return bytes(out[:n])

    def randbits(self, k: int) -> int:
        nbytes = (k + 7) // 8
        return int.from_bytes(self.random_bytes(nbytes), "big") >> (8 * nbytes - k)

    def copy(self) -> "Drbg":
        clone = Drbg.__new__(Drbg)
        clone._key = self._key
        clone.counter = self.counter
        return clone

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Drbg)
            and self._key == other._key
            and self.counter == other.counter
        )

    def __repr__(self) -> str:
        return f"Drbg(key={self._key[:4].hex()}.., counter={self.counter})"


@dataclass(frozen=True)
class SeqNonce:
    """Deterministic AEAD nonce: a counter plus a direction bit."""

    direction: int  # 0 = initiator -> responder, 1 = responder -> initiator
    counter: int

    def to_bytes(self) -> bytes:
        if self.direction not in (0, 1) or not 0 <= self.counter < 2**95:
            raise ValueError(f"invalid sequence nonce {self!r}")
        return ((self.direction << 95) | self.counter).to_bytes(12, "big")


@dataclass(frozen=True)
class KeySchedule:
    """The five values derived from the shared secret and transcript digest."""

    k1: Any
    k2: Any
    k3: Any
    session_key: Any
    sas: Any  # int in concrete mode, a kdf term in symbolic mode

    def keys(self) -> tuple:
        return (self.k1, self.k2, self.k3, self.session_key)


SCHEDULE_LABELS = ("adhoc1", "adhoc2", "adhoc3", "sess", "sas")


def hkdf_extract(salt: bytes, ikm: bytes) -> bytes:
    return hmac.digest(salt, ikm, "sha256")


def hkdf_expand(prk: bytes, info: bytes, length: int = KEY_LEN) -> bytes:
    out, block, i = b"", b"", 1
    while len(out) < length:
        block = hmac.digest(prk, block + info + bytes([i]), "sha256")
        out += block
        i += 1
    return out[:length]


def _framed(parts: Sequence[bytes]) -> bytes:
    return b"".join(struct.pack(">I", len(p)) + p for p in parts)


@functools.lru_cache(maxsize=64)
def _x25519_key(secret: bytes) -> x25519.X25519PrivateKey:
    # loading a scalar dominates grinding loops; a share and its DH reuse it
    return x25519.X25519PrivateKey.from_private_bytes(secret)


class ConcreteBackend:
    """Byte-level backend.  One instance tracks sealed (key, nonce) pairs."""

    name = "concrete"
    symbolic = False

    def __init__(self, guard_nonce_reuse: bool = True) -> None:
        self.guard_nonce_reuse = guard_nonce_reuse
        self._sealed: set[tuple[bytes, bytes]] = set()

    # -- randomness ---------------------------------------------------
    def random_nonce(self, rng: Drbg, nbytes: int = NONCE_LEN) -> bytes:
        return rng.random_bytes(nbytes)

    def gen_ephemeral_keypair(self, rng: Drbg) -> tuple[bytes, bytes]:
        secret = rng.random_bytes(SCALAR_LEN)
        return secret, self.public_share(secret)

    def public_share(self, secret: bytes) -> bytes:
        key = _x25519_key(bytes(secret))
        return key.public_key().public_bytes_raw()

    def gen_signing_keypair(self, seed: bytes) -> tuple[bytes, bytes]:
        sk = ed25519.Ed25519PrivateKey.from_private_bytes(seed[:32])
        return seed[:32], sk.public_key().public_bytes_raw()

    # -- Diffie-Hellman -----------------------------------------------
    @staticmethod
    def check_share(peer: bytes) -> None:
        if not isinstance(peer, (bytes, bytearray)) or len(peer) != SHARE_LEN:
            raise InvalidShare("public share must be 32 bytes")
        u = int.from_bytes(peer, "little")
        if u >= 2**255 or u >= _P25519:
            raise InvalidShare("non-canonical public share encoding")
        if u in _LOW_ORDER_U:
            raise InvalidShare("low-order public share")

    def dh_shared(self, secret: bytes, peer: bytes) -> bytes:
        self.check_share(peer)
        key = _x25519_key(bytes(secret))
        try:
            shared = key.exchange(x25519.X25519PublicKey.from_public_bytes(bytes(peer)))
        except ValueError as exc:
            raise InvalidShare(str(exc)) from exc
        if shared == bytes(32):
            raise InvalidShare("all-zero shared secret")
        return shared

    # -- AEAD -----------------------------------------------------------
    def aead_seal(self, key: bytes, seq_nonce: SeqNonce, aad: bytes, plaintext: bytes) -> bytes:
        nonce = seq_nonce.to_bytes()
        if self.guard_nonce_reuse:
            if (key, nonce) in self._sealed:
                raise NonceReuseError(f"nonce {seq_nonce} reused under the same key")
            self._sealed.add((key, nonce))
        return ChaCha20Poly1305(key).encrypt(nonce, plaintext, aad)

    def aead_open(self, key: bytes, seq_nonce: SeqNonce, aad: bytes, ciphertext: bytes) -> bytes:
        try:
            return ChaCha20Poly1305(key).decrypt(seq_nonce.to_bytes(), bytes(ciphertext), aad)
        except (InvalidTag, ValueError) as exc:
            raise AuthFailure("AEAD authentication failed") from exc

    # -- signatures ---------------------------------------------------
    def sign_transcript(self, sk: bytes, digest: bytes) -> bytes:
        return ed25519.Ed25519PrivateKey.from_private_bytes(sk).sign(digest)

    def verify_signature(self, vk: bytes, digest: bytes, sig: bytes) -> bool:
        try:
            ed25519.Ed25519PublicKey.from_public_bytes(bytes(vk)).verify(bytes(sig), digest)
        except (InvalidSignature, ValueError, TypeError):
            return False
        return True

    # -- hashing and key derivation ------------------------------------
    def hash(self, *parts: bytes) -> bytes:
        return hashlib.sha256(b"".join(parts)).digest()

    def transcript_hash(self, entries: Sequence[bytes]) -> bytes:
        return hashlib.sha256(_framed(entries)).digest()

    def derive_schedule(self, z: bytes, td: bytes) -> KeySchedule:
        prk = hkdf_extract(td, z)
        k1, k2, k3, sess, sas = (hkdf_expand(prk, lbl.encode()) for lbl in SCHEDULE_LABELS)
        return KeySchedule(k1, k2, k3, sess, int.from_bytes(sas[:2], "big"))

    def derive_sas(self, z: bytes, td: bytes) -> int:
        """SAS only; the grinding attacker's inner loop needs nothing else."""
        prk = hkdf_extract(td, z)
        return int.from_bytes(hkdf_expand(prk, b"sas", 2), "big")

    # -- structured payloads -------------------------------------------
    def pack(self, *items: bytes | None) -> bytes:
        return b"".join(
            struct.pack(">H", 0) if it is None else struct.pack(">H", len(it) + 1) + it
            for it in items
        )

    def unpack(self, blob: bytes, count: int) -> list[bytes | None]:
        out: list[bytes | None] = []
        pos = 0
        for _ in range(count):
            if pos + 2 > len(blob):
                raise ValueError("truncated payload")
            (n,) = struct.unpack_from(">H", blob, pos)
            pos += 2
            if n == 0:
                out.append(None)
                continue
            if pos + n - 1 > len(blob):
                raise ValueError("truncated payload")
            out.append(bytes(blob[pos : pos + n - 1]))
            pos += n - 1
        if pos != len(blob):
            raise ValueError("trailing bytes in payload")
        return out

    def lift(self, data: bytes) -> bytes:
        return data

    def lower(self, value: bytes) -> bytes:
        return value


class SymbolicBackend:
    """Term-level backend modelling perfect primitives.

    Fresh values are atoms whose names come from the same DRBG draws the
    concrete backend would use, so runs stay seed-deterministic.
    """

    name = "symbolic"
    symbolic = True

    def random_nonce(self, rng: Drbg, nbytes: int = NONCE_LEN) -> sym.Atom:
        return sym.Atom("n:" + rng.random_bytes(nbytes).hex())

    def gen_ephemeral_keypair(self, rng: Drbg) -> tuple[sym.Atom, sym.Term]:
        secret = sym.Atom("x:" + rng.random_bytes(SCALAR_LEN).hex())
        return secret, self.public_share(secret)

    def public_share(self, secret: sym.Atom) -> sym.Term:
        return sym.Exp(sym.G, secret)

    def gen_signing_keypair(self, seed: bytes) -> tuple[sym.Atom, sym.Atom]:
        tag = seed[:16].hex()
        return sym.Atom("sk:" + tag), sym.Atom("vk:" + tag)

    def dh_shared(self, secret: sym.Atom, peer: sym.Term) -> sym.Term:
        if not isinstance(peer, sym.Exp):
            raise InvalidShare(f"not a group element: {peer}")
        return sym.dh(secret, peer)

    def aead_seal(self, key: sym.Term, seq_nonce: SeqNonce, aad: bytes, plaintext: sym.Term) -> sym.Term:
        header = sym.Pair(sym.Atom(f"nonce:{seq_nonce.direction}:{seq_nonce.counter}"), self.lift(aad))
        return sym.Senc(sym.Pair(header, plaintext), key)

    def aead_open(self, key: sym.Term, seq_nonce: SeqNonce, aad: bytes, ciphertext: sym.Term) -> sym.Term:
        header = sym.Pair(sym.Atom(f"nonce:{seq_nonce.direction}:{seq_nonce.counter}"), self.lift(aad))
        if (
            not isinstance(ciphertext, sym.Senc)
            or ciphertext.key != key
            or not isinstance(ciphertext.msg, sym.Pair)
            or ciphertext.msg.left != header
        ):
            raise AuthFailure("symbolic decryption failed")
        return ciphertext.msg.right

    def sign_transcript(self, sk: sym.Atom, digest: sym.Term) -> sym.Term:
        return sym.Sig(digest, sk)

    def verify_signature(self, vk: sym.Atom, digest: sym.Term, sig: sym.Term) -> bool:
        if not (isinstance(vk, sym.Atom) and vk.name.startswith("vk:")):
            return False
        return sig == sym.Sig(digest, sym.Atom("sk:" + vk.name[3:]))

    def hash(self, *parts: sym.Term) -> sym.Term:
        return sym.HashT(sym.chain([self._as_term(p) for p in parts]))

    def transcript_hash(self, entries: Sequence[sym.Term]) -> sym.Term:
        return sym.HashT(sym.chain(list(entries)))

    def derive_schedule(self, z: sym.Term, td: sym.Term) -> KeySchedule:
        return KeySchedule(*(sym.Kdf(lbl, z, td) for lbl in SCHEDULE_LABELS))

    def derive_sas(self, z: sym.Term, td: sym.Term) -> sym.Term:
        return sym.Kdf("sas", z, td)

    def pack(self, *items: Any) -> sym.Term:
        return sym.chain([sym.NONE if it is None else self._as_term(it) for it in items])

    def unpack(self, blob: sym.Term, count: int) -> list[Any]:
        items = sym.unchain(blob, count)
        if items is None:
            raise ValueError("payload does not have the expected shape")
        return [None if it == sym.NONE else it for it in items]

    def lift(self, data: bytes) -> sym.Atom:
        return sym.Atom("b:" + bytes(data).hex())

    def lower(self, value: sym.Term) -> bytes:
        if isinstance(value, sym.Atom) and value.name.startswith("b:"):
            return bytes.fromhex(value.name[2:])
        raise ValueError(f"not a lifted byte string: {value}")

    def _as_term(self, value: Any) -> sym.Term:
        if isinstance(value, (bytes, bytearray)):
            return self.lift(value)
        return value


Backend = ConcreteBackend | SymbolicBackend


def make_backend(mode: str) -> Backend:
    if mode == "concrete":
        return ConcreteBackend()
    if mode == "symbolic":
        return SymbolicBackend()
    raise ValueError(f"unknown backend {mode!r}")
