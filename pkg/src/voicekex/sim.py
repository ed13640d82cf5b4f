"""Discrete-time network: two endpoints, one adversary node in between.

Every frame an endpoint sends is handed to the adversary, which decides what
reaches the other side.  Surviving frames then cross the noisy data channel.
Time is counted in ticks (100 per simulated second).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from voicekex.channel import ChannelConfig, VoiceAuthChannel, make_rng, transmit
from voicekex.frames import CodecError, Message, decode_frame, encode_frame
from voicekex.protocol import (
    EmitAbort,
    EmitSas,
    EmitSessionKey,
    FrameIn,
    Phase,
    SendFrame,
    SessionState,
    Start,
    StartTimer,
    Timeout,
    UserSasResult,
    step,
)
from voicekex.sas import VerificationOutcome, vocal_compare

HOP_TICKS = 1
VOICE_TICKS = 100
VOICE_PATIENCE = 60  # voice checks before a user gives up on a silent peer
MAX_TICKS = 60_000

ALICE, BOB = "alice", "bob"


def other(name: str) -> str:
    return BOB if name == ALICE else ALICE


class Wire:
    """Converts between protocol messages and what travels on the link.

    ``frames`` mode carries encoded bytes; ``direct`` mode carries message
    tuples and is what the symbolic backend (and fast statistics) use.
    """

    def __init__(self, mode: str = "frames") -> None:
        if mode not in ("frames", "direct"):
            raise ValueError(f"unknown wire mode {mode!r}")
        self.mode = mode

    def pack(self, msg: Message, sid: int, rc: int = 0) -> Any:
        if self.mode == "frames":
            return encode_frame(msg, sid, rc)
        return (msg, sid, rc)

    def unpack(self, item: Any) -> tuple[Message, int, int] | None:
        if self.mode == "direct":
            return item
        try:
            return decode_frame(item)
        except CodecError:
            return None


@dataclass
class Party:
    name: str
    user_id: bytes
    state: SessionState
    peer_user_id: bytes
    sas: Any = None
    session_key: Any = None
    aborts: list = field(default_factory=list)
    sas_checks: int = 0
    events: list = field(default_factory=list)

    @property
    def terminal(self) -> bool:
        return self.state.phase in (Phase.SECURED, Phase.ABORTED)


@dataclass(frozen=True)
class WireRecord:
    tick: int
    src: str
    dst: str
    item: Any
    by_adversary: bool


class ForwardAll:
    """Passive network: every frame goes to the other endpoint untouched."""

    def attach(self, net: "Network") -> None:
        self.net = net

    def intercept(self, src: str, item: Any, now: int) -> list[tuple[str, Any, int]]:
        return [(other(src), item, 0)]


class Network:
    def __init__(
        self,
        alice: Party,
        bob: Party,
        *,
        adversary: Any = None,
        channel: ChannelConfig | None = None,
        wire: Wire | None = None,
        voice: VoiceAuthChannel | None = None,
        sas_users: str = "compare",
        stop_when: Callable[["Network"], bool] | None = None,
        max_ticks: int = MAX_TICKS,
    ) -> None:
        self.parties = {ALICE: alice, BOB: bob}
        self.adversary = adversary or ForwardAll()
        self.channel = channel or ChannelConfig()
        self.wire = wire or Wire()
        # seeding numpy costs more than a whole lossless trial, so skip it when unused
        noisy = self.wire.mode == "frames" and not self.channel.lossless
        self.channel_rng: np.random.Generator | None = make_rng(self.channel) if noisy else None
        self.voice = voice or VoiceAuthChannel()
        self.sas_users = sas_users
        self.stop_when = stop_when
        self.max_ticks = max_ticks
        self.now = 0
        self.log: list[WireRecord] = []
        self.undecodable = 0
        self._heap: list = []
        self._seq = 0
        self.adversary.attach(self)

    # -- scheduling ---------------------------------------------------
    def schedule(self, at: int, kind: str, target: str, payload: Any = None) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (at, self._seq, kind, target, payload))

    def emit(self, src: str, dst: str, item: Any, delay: int = 0, *, by_adversary: bool = False) -> None:
        """Put ``item`` on the data channel towards ``dst``."""
        if by_adversary:
            self.log.append(WireRecord(self.now, src, dst, item, True))
        if self.channel_rng is not None:
            copies = transmit(self.channel, self.channel_rng, item)
        else:
            copies = [(0, item)]
        for extra, data in copies:
            self.schedule(self.now + HOP_TICKS + delay + extra, "deliver", dst, data)

    def run(self) -> "Network":
        for name in (ALICE, BOB):
            self.schedule(0, "start", name)
        while self._heap:
            at, _, kind, target, payload = heapq.heappop(self._heap)
            if at > self.max_ticks:
                break
            self.now = at
            if kind == "start":
                self._step(target, Start())
            elif kind == "timer":
                self._step(target, Timeout(payload))
            elif kind == "deliver":
                self._deliver(target, payload)
            elif kind == "sas_check":
                self._sas_check(target)
            elif kind == "call":
                payload(self)
            if self.stop_when is not None and self.stop_when(self):
                break
            if all(p.terminal for p in self.parties.values()) and not self._pending_sas():
                break
        return self

    def _pending_sas(self) -> bool:
        return any(p.state.phase is Phase.SAS_PENDING for p in self.parties.values())

    # -- endpoint plumbing ----------------------------------------------
    def _deliver(self, name: str, item: Any) -> None:
        decoded = self.wire.unpack(item)
        if decoded is None:
            self.undecodable += 1
            return
        msg, sid, rc = decoded
        self._step(name, FrameIn(msg, sid, rc))

    def _step(self, name: str, event: Any) -> None:
        party = self.parties[name]
        party.events.append(event)
        party.state, actions = step(party.state, event)
        for act in actions:
            if isinstance(act, SendFrame):
                item = self.wire.pack(act.message, act.session_id, act.retransmit_count)
                self.log.append(WireRecord(self.now, name, other(name), item, False))
                for dst, out, delay in self.adversary.intercept(name, item, self.now):
                    self.emit(name, dst, out, delay)
            elif isinstance(act, StartTimer):
                self.schedule(self.now + act.ticks, "timer", name, act.timer_id)
            elif isinstance(act, EmitSas):
                party.sas = act.sas
                self.voice.announce(party.user_id, act.sas)
                self.schedule(self.now + VOICE_TICKS, "sas_check", name)
            elif isinstance(act, EmitSessionKey):
                party.session_key = act.key
            elif isinstance(act, EmitAbort):
                party.aborts.append(act)

    def _sas_check(self, name: str) -> None:
        party = self.parties[name]
        if party.state.phase is not Phase.SAS_PENDING:
            return
        if self.sas_users == "skip":
            self._step(name, UserSasResult(VerificationOutcome.SKIPPED))
            return
        heard = self.voice.heard_from(party.peer_user_id)
        if heard is None:
            peer = self.parties[other(name)]
            party.sas_checks += 1
            if party.sas_checks < VOICE_PATIENCE and not peer.terminal:
                self.schedule(self.now + VOICE_TICKS, "sas_check", name)
                return
            # the peer never read out a SAS: the users cannot confirm
            self._step(name, UserSasResult(VerificationOutcome.MISMATCH))
            return
        outcome = vocal_compare(party.sas, heard, party.state.obligation)
        self._step(name, UserSasResult(outcome))

    # -- views ----------------------------------------------------------
    def wire_items(self) -> list[Any]:
        return [rec.item for rec in self.log]

    def wire_messages(self) -> list[Message]:
        out = []
        for rec in self.log:
            decoded = self.wire.unpack(rec.item)
            if decoded is not None:
                out.append(decoded[0])
        return out
