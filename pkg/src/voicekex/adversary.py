"""Dolev-Yao adversary: scripted network actions and an active DH relay.

The relay (``MitmAgent``) sits between alice and bob, steers role
negotiation so that alice initiates, and runs one key exchange with each of
them.  It re-encrypts identity blocks between the two legs, optionally
stripping signatures or re-signing with stolen keys, and can grind its
share towards bob to chase a SAS collision.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields
from typing import Any, ClassVar

from voicekex.crypto import AuthFailure, Drbg, InvalidShare, SeqNonce, _framed
from voicekex.frames import (
    Abort,
    Commit,
    EncIdI,
    EncIdR,
    KeyShareI,
    KeyShareR,
    Message,
    RoleNonce,
    SasCtl,
    fix_crc,
)
from voicekex import symbolic as sym
from voicekex.keyschedule import Transcript, message_entry
from voicekex.protocol import Role, Tag, make_commitment
from voicekex.sim import ALICE, BOB, Network, other


class ScriptError(ValueError):
    pass


# -- script actions ---------------------------------------------------------


@dataclass(frozen=True)
class Forward:
    name: ClassVar[str] = "Forward"


@dataclass(frozen=True)
class Drop:
    n: int
    name: ClassVar[str] = "Drop"


@dataclass(frozen=True)
class Replay:
    n: int
    delay: int = 50
    name: ClassVar[str] = "Replay"


@dataclass(frozen=True)
class ModifyBits:
    n: int
    mask: bytes
    name: ClassVar[str] = "ModifyBits"


@dataclass(frozen=True)
class InjectFrame:
    data: bytes
    to: str = BOB
    at: int = 0
    name: ClassVar[str] = "InjectFrame"


@dataclass(frozen=True)
class MitmDh:
    name: ClassVar[str] = "MitmDh"


@dataclass(frozen=True)
class StripSignature:
    name: ClassVar[str] = "StripSignature"


@dataclass(frozen=True)
class StealSigningKey:
    when: str = "after"
    name: ClassVar[str] = "StealSigningKey"

    def __post_init__(self) -> None:
        if self.when not in ("before", "after"):
            raise ScriptError("StealSigningKey.when must be 'before' or 'after'")


@dataclass(frozen=True)
class GrindSas:
    attempts: int
    name: ClassVar[str] = "GrindSas"

    def __post_init__(self) -> None:
        if self.attempts < 0:
            raise ScriptError("GrindSas.attempts must be >= 0")


ACTIONS = {
    cls.name: cls
    for cls in (Forward, Drop, Replay, ModifyBits, InjectFrame, MitmDh, StripSignature, StealSigningKey, GrindSas)
}


def parse_action(spec: dict | str) -> Any:
    """Build an action from its JSON form, e.g. ``{"action": "Drop", "n": 3}``."""
    if isinstance(spec, str):
        spec = {"action": spec}
    if not isinstance(spec, dict) or "action" not in spec:
        raise ScriptError(f"malformed script action: {spec!r}")
    kind = spec["action"]
    cls = ACTIONS.get(kind)
    if cls is None:
        raise ScriptError(f"unknown script action {kind!r}")
    args = {k: v for k, v in spec.items() if k != "action"}
    allowed = {f.name for f in fields(cls)}
    if set(args) - allowed:
        raise ScriptError(f"unknown fields for {kind}: {sorted(set(args) - allowed)}")
    for key in ("mask", "data"):
        if key in args:
            try:
                args[key] = bytes.fromhex(args[key])
            except (TypeError, ValueError) as exc:
                raise ScriptError(f"{kind}.{key} must be a hex string") from exc
    try:
        return cls(**args)
    except TypeError as exc:
        raise ScriptError(f"bad arguments for {kind}: {exc}") from exc


def action_to_dict(action: Any) -> dict:
    out: dict = {"action": action.name}
    for f in fields(action):
        value = getattr(action, f.name)
        out[f.name] = value.hex() if isinstance(value, bytes) else value
    return out


# -- scripted adversary ---------------------------------------------------------


class ScriptedAdversary:
    """Applies per-frame script actions, then relays or runs the MITM agent.

    Frame indices in ``Drop``/``Replay``/``ModifyBits`` count frames sent by
    the honest endpoints, from 0, in the order they were sent.
    """

    def __init__(self, script: list, backend: Any, rng: Drbg, *, stolen: dict | None = None) -> None:
        self.script = list(script)
        self.backend = backend
        self.counter = 0
        self.mitm: MitmAgent | None = None
        kinds = {type(a) for a in self.script}
        active = kinds & {MitmDh, GrindSas, StripSignature}
        steal_before = any(isinstance(a, StealSigningKey) and a.when == "before" for a in self.script)
        self.stolen_before = dict(stolen or {}) if steal_before else {}
        self.stolen_after = dict(stolen or {}) if any(isinstance(a, StealSigningKey) for a in self.script) else {}
        if active:
            grind = next((a.attempts for a in self.script if isinstance(a, GrindSas)), None)
            self.mitm = MitmAgent(
                backend,
                rng,
                strip=StripSignature in kinds,
                stolen=self.stolen_before,
                grind=grind,
            )

    def attach(self, net: Network) -> None:
        self.net = net
        if self.mitm is not None:
            self.mitm.attach(net)
        for act in self.script:
            if isinstance(act, InjectFrame):
                item = act.data if net.wire.mode == "frames" else None
                if item is None:
                    raise ScriptError("InjectFrame needs the byte-level wire")
                net.schedule(act.at, "call", act.to, lambda n, a=act: n.emit(other(a.to), a.to, a.data, by_adversary=True))

    def intercept(self, src: str, item: Any, now: int) -> list[tuple[str, Any, int]]:
        idx = self.counter
        self.counter += 1
        out_item = item
        for act in self.script:
            if isinstance(act, Drop) and act.n == idx:
                return []
            if isinstance(act, ModifyBits) and act.n == idx:
                out_item = self._modify(out_item, act.mask, idx)
            if isinstance(act, Replay) and act.n == idx:
                self.net.schedule(
                    now + act.delay, "call", other(src),
                    lambda n, s=src, it=item: n.emit(s, other(s), it, by_adversary=True),
                )
        if self.mitm is not None:
            self.mitm.receive(src, out_item)
            return []
        if out_item is not item:
            self.net.emit(src, other(src), out_item, by_adversary=True)
            return []
        return [(other(src), item, 0)]

    def _modify(self, item: Any, mask: bytes, idx: int) -> Any:
        if isinstance(item, (bytes, bytearray)):
            head = 8  # flip payload bits only, then repair the CRC
            body = bytearray(item)
            for i, m in enumerate(mask):
                if head + i < len(body) - 2:
                    body[head + i] ^= m
            return fix_crc(bytes(body))
        msg, sid, rc = item
        return (_garble(msg, mask, idx), sid, rc)

    def private_terms(self) -> set:
        terms: set = set(self.stolen_before.values())
        if self.mitm is not None:
            terms |= self.mitm.private_terms()
        return terms


def _garble(msg: Message, mask: bytes, idx: int) -> Message:
    junk = sym.Atom(f"junk:{idx}:{mask.hex()}")
    if isinstance(msg, RoleNonce):
        return RoleNonce(msg.r ^ int.from_bytes(mask[:8].ljust(8, b"\0"), "big"))
    if isinstance(msg, Commit):
        return Commit(junk)
    if isinstance(msg, KeyShareR):
        return KeyShareR(sym.Exp(sym.G, junk), msg.salt)
    if isinstance(msg, KeyShareI):
        return KeyShareI(sym.Exp(sym.G, junk), msg.salt)
    if isinstance(msg, (EncIdI, EncIdR, SasCtl)):
        return type(msg)(junk)
    return msg


# -- man in the middle ----------------------------------------------------------


@dataclass
class Leg:
    """The adversary's half-session with one honest party."""

    role: Role  # the adversary's role on this leg
    peer_nonce: int | None = None
    own_nonce: int | None = None
    sid: int | None = None
    secret: Any = None
    public: Any = None
    salt: Any = None
    commit: Any = None
    transcript: Transcript = field(default_factory=Transcript)
    td: Any = None
    schedule: Any = None
    ctl_tx: int = 0
    ctl_rx: int = 0
    replies: dict = field(default_factory=dict)
    seen: set = field(default_factory=set)


@dataclass
class GrindOutcome:
    attempts: int
    match_index: int | None = None
    revealed: str = "none"  # "redraw", "committed" or "none"


class MitmAgent:
    def __init__(self, backend: Any, rng: Drbg, *, strip: bool = False, stolen: dict | None = None, grind: int | None = None) -> None:
        self.be = backend
        self.rng = rng
        self.strip = strip
        self.stolen = dict(stolen or {})
        self.grind = grind
        self.a = Leg(Role.RESPONDER)  # towards alice
        self.b = Leg(Role.INITIATOR)  # towards bob
        self.pending: list[tuple[str, Message]] = []
        self.bob_share: KeyShareR | None = None
        self.scalars: list = []
        self.grind_outcome = GrindOutcome(grind or 0) if grind is not None else None
        self.commitment = True
        self.forwarded: dict = {}

    def attach(self, net: Network) -> None:
        self.net = net
        self.commitment = net.parties[BOB].state.config.commitment

    # -- helpers ------------------------------------------------------
    def _leg(self, name: str) -> Leg:
        return self.a if name == ALICE else self.b

    def _send(self, dst: str, msg: Message) -> None:
        leg = self._leg(dst)
        self.net.emit(other(dst), dst, self.net.wire.pack(msg, leg.sid, 0), by_adversary=True)

    def _entry(self, msg: Message) -> Any:
        return message_entry(self.be, msg)

    def _keypair(self) -> tuple[Any, Any]:
        secret, public = self.be.gen_ephemeral_keypair(self.rng)
        self.scalars.append(secret)
        return secret, public

    def private_terms(self) -> set:
        return set(self.scalars) | set(self.stolen.values())

    def session_keys(self) -> list:
        return [leg.schedule.session_key for leg in (self.a, self.b) if leg.schedule is not None]

    def sas_values(self) -> tuple:
        return tuple(None if leg.schedule is None else leg.schedule.sas for leg in (self.a, self.b))

    # -- message handling ---------------------------------------------------
    def receive(self, src: str, item: Any) -> None:
        decoded = self.net.wire.unpack(item)
        if decoded is None:
            return
        msg, _sid, _rc = decoded
        leg = self._leg(src)
        if msg in leg.replies:
            for reply in leg.replies[msg]:
                self._send(src, reply)
            return
        if msg in leg.seen:
            fwd = self.forwarded.get((src, msg))
            if fwd is not None:
                self._send(other(src), fwd)
            return
        leg.seen.add(msg)
        self._handle(src, msg)
        self._drain()

    def _forward(self, src: str, msg: Message, out: Message) -> None:
        self.forwarded[(src, msg)] = out
        self._send(other(src), out)

    def _drain(self) -> None:
        progress = True
        while progress and self.pending:
            progress = False
            for src, msg in list(self.pending):
                if self._try_forward(src, msg):
                    self.pending.remove((src, msg))
                    progress = True

    def _reply(self, src: str, trigger: Message, *msgs: Message) -> None:
        self._leg(src).replies[trigger] = msgs
        for m in msgs:
            self._send(src, m)

    def _handle(self, src: str, msg: Message) -> None:
        if isinstance(msg, Abort):
            if self._leg(other(src)).sid is not None:
                self._forward(src, msg, msg)
            return
        if isinstance(msg, RoleNonce):
            self._on_role_nonce(src, msg)
        elif src == ALICE and isinstance(msg, Commit):
            self.a.transcript = self.a.transcript.append(self._entry(msg))
            self._reply(src, msg, self._share_to_alice())
        elif src == ALICE and isinstance(msg, KeyShareI):
            self.a.transcript = self.a.transcript.append(self._entry(msg))
            if self._derive(self.a, msg.pub):
                self._leg_b_after_alice()
        elif src == BOB and isinstance(msg, KeyShareR):
            self.bob_share = msg
            self._leg_b_share()
        elif isinstance(msg, (EncIdI, EncIdR, SasCtl)):
            self.pending.append((src, msg))

    def _on_role_nonce(self, src: str, msg: RoleNonce) -> None:
        leg = self._leg(src)
        if leg.peer_nonce is not None:
            return
        leg.peer_nonce = msg.r
        if src == ALICE:
            # alice must win the negotiation, so answer with a smaller nonce
            own = self.rng.randbits(64) % max(msg.r, 1)
            leg.own_nonce, leg.sid = own, msg.r >> 32
            order = (msg.r, own)
        else:
            own = msg.r + 1 + self.rng.randbits(64) % (2**64 - 1 - msg.r) if msg.r < 2**64 - 1 else msg.r
            leg.own_nonce, leg.sid = own, own >> 32
            order = (own, msg.r)
        leg.transcript = Transcript(tuple(self._entry(RoleNonce(r)) for r in order))
        if src == ALICE and not self.commitment:
            self._reply(src, msg, RoleNonce(own), self._share_to_alice())
        else:
            self._reply(src, msg, RoleNonce(own))
        if src == BOB and self.commitment:
            self._commit_to_bob()

    def _share_to_alice(self) -> KeyShareR:
        a = self.a
        a.secret, a.public = self._keypair()
        a.salt = self.be.random_nonce(self.rng)
        share = KeyShareR(a.public, a.salt)
        a.transcript = a.transcript.append(self._entry(share))
        return share

    def _commit_to_bob(self) -> None:
        b = self.b
        if b.commit is not None or b.peer_nonce is None:
            return
        b.secret, b.public = self._keypair()
        b.salt = self.be.random_nonce(self.rng)
        commit = Commit(make_commitment(self.be, b.public, b.salt))
        b.commit = commit
        b.transcript = b.transcript.append(self._entry(commit))
        self._send(BOB, commit)

    def _leg_b_after_alice(self) -> None:
        self._leg_b_share()

    def _leg_b_share(self) -> None:
        """Answer bob's KeyShareR once everything needed is at hand."""
        b, share = self.b, self.bob_share
        if share is None or b.schedule is not None:
            return
        if self.grind is not None and self.a.schedule is None:
            return  # the SAS on alice's side is not fixed yet
        base = b.transcript.append(self._entry(share))
        if self.grind is None:
            if b.secret is None:
                b.secret, b.public = self._keypair()
                b.salt = self.be.random_nonce(self.rng)
            reveal = (b.secret, b.public, b.salt)
        else:
            reveal = self._grind(base, share)
            if reveal is None:
                return
        b.secret, b.public, b.salt = reveal
        own = KeyShareI(b.public, b.salt)
        b.transcript = base.append(self._entry(own))
        self._reply(BOB, share, own)
        self._derive(b, share.pub)

    def _grind(self, base: Transcript, share: KeyShareR) -> tuple | None:
        """Search re-drawn shares for one that makes bob's SAS equal alice's."""
        out = self.grind_outcome
        assert out is not None
        target = self.a.schedule.sas
        digest = self._transcript_digester(base)
        found = None
        last = None
        for i in range(out.attempts):
            secret, public = self._keypair()
            salt = self.be.random_nonce(self.rng)
            last = (secret, public, salt)
            try:
                z = self.be.dh_shared(secret, share.pub)
            except InvalidShare:
                continue
            if self.be.derive_sas(z, digest(KeyShareI(public, salt))) == target:
                found = last
                out.match_index = i
                break
        if found is not None:
            out.revealed = "redraw"
            return found
        if self.commitment and self.b.secret is not None:
            out.revealed = "committed"
            return (self.b.secret, self.b.public, self.b.salt)
        if last is None:
            return None  # nothing to try: give up on this session
        out.revealed = "redraw"
        return last

    def _transcript_digester(self, base: Transcript):
        """Digest of ``base`` plus one candidate entry, reusing the common prefix."""
        if self.be.symbolic:
            return lambda m: self.be.transcript_hash(base.append(self._entry(m)).entries)
        prefix = hashlib.sha256(_framed(base.entries))

        def digest(m: Message) -> bytes:
            h = prefix.copy()
            h.update(_framed([message_entry(self.be, m)]))
            return h.digest()

        return digest

    def _derive(self, leg: Leg, peer_pub: Any) -> bool:
        try:
            z = self.be.dh_shared(leg.secret, peer_pub)
        except InvalidShare:
            return False
        leg.td = self.be.transcript_hash(leg.transcript.entries)
        leg.schedule = self.be.derive_schedule(z, leg.td)
        return True

    # -- re-encryption between legs -------------------------------------------
    def _try_forward(self, src: str, msg: Message) -> bool:
        inbound, outbound = self._leg(src), self._leg(other(src))
        if inbound.schedule is None or outbound.schedule is None:
            return False
        be = self.be
        if isinstance(msg, EncIdI):
            fields = self._open(inbound.schedule.k1, SeqNonce(0, 0), Tag.ENC_ID_I, inbound.sid, msg.ct)
            if fields is None:
                return True
            block = self._reseal_identity(fields, outbound, outbound.schedule.k1, SeqNonce(0, 0), Tag.ENC_ID_I)
            self._forward(src, msg, EncIdI(block))
        elif isinstance(msg, EncIdR):
            fields = self._open(inbound.schedule.k2, SeqNonce(1, 0), Tag.ENC_ID_R, inbound.sid, msg.ct)
            if fields is None:
                return True
            block = self._reseal_identity(fields, outbound, outbound.schedule.k2, SeqNonce(1, 0), Tag.ENC_ID_R)
            self._forward(src, msg, EncIdR(block))
        else:
            direction = 0 if src == ALICE else 1
            plaintext = None
            for ctr in range(inbound.ctl_rx, inbound.ctl_rx + 6):
                try:
                    plaintext = be.aead_open(
                        inbound.schedule.k3, SeqNonce(direction, ctr), _aad(Tag.SAS_CTL, inbound.sid), msg.ct
                    )
                except AuthFailure:
                    continue
                inbound.ctl_rx = ctr + 1
                break
            if plaintext is None:
                return True
            ct = be.aead_seal(
                outbound.schedule.k3, SeqNonce(direction, outbound.ctl_tx), _aad(Tag.SAS_CTL, outbound.sid), plaintext
            )
            outbound.ctl_tx += 1
            self._forward(src, msg, SasCtl(ct))
        return True

    def _open(self, key: Any, nonce: SeqNonce, tag: Tag, sid: int, ct: Any) -> list | None:
        try:
            return self.be.unpack(self.be.aead_open(key, nonce, _aad(tag, sid), ct), 4)
        except (AuthFailure, ValueError):
            return None

    def _reseal_identity(self, fields: list, leg: Leg, key: Any, nonce: SeqNonce, tag: Tag) -> Any:
        uid, fresh, status, sig = fields
        if sig is not None:
            sk = self.stolen.get(self.be.lower(uid))
            if sk is not None:
                sig = self.be.sign_transcript(sk, leg.td)
            elif self.strip:
                sig = None
        plaintext = self.be.pack(uid, fresh, status, sig)
        return self.be.aead_seal(key, nonce, _aad(tag, leg.sid), plaintext)


def _aad(tag: Tag, session_id: int) -> bytes:
    return bytes([tag]) + session_id.to_bytes(4, "big")
