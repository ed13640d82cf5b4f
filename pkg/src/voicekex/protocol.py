"""Per-endpoint protocol state machine.

Happy path (initiator I, responder R)::

    I <-> R   RoleNonce          role negotiation, larger nonce initiates
    I  -> R   Commit             H(pub_I || salt_I)
    I <-  R   KeyShareR          pub_R, salt_R
    I  -> R   KeyShareI          pub_I, salt_I  (opens the commitment)
              -- both derive the key schedule from DH and the transcript --
    I  -> R   EncIdI             {id_I, nonce_I, -, sig_I(td)}k1
    I <-  R   EncIdR             {id_R, nonce_R, status_R, sig_R(td)}k2
    I  -> R   SasCtl(confirm)    {confirm, status_I}k3

``step`` is a pure function: it never mutates its input state and draws
randomness only from the DRBG carried inside the state.
"""

from __future__ import annotations

import copy
import enum
from dataclasses import dataclass, field
from typing import Any, Union

from voicekex.cards import USER_ID_LEN, CardStore
from voicekex.crypto import AuthFailure, Backend, Drbg, InvalidShare, KeySchedule, SeqNonce
from voicekex.frames import (
    Abort,
    AbortCode,
    Commit,
    EncIdI,
    EncIdR,
    KeyShareI,
    KeyShareR,
    Message,
    RoleNonce,
    SasCtl,
    Tag,
)
from voicekex.keyschedule import Transcript, message_entry
from voicekex.sas import SASObligation, VerificationOutcome

R_MAX = 5
TICKS_PER_SECOND = 100
TIMEOUT_TICKS = 2 * TICKS_PER_SECOND
RETRANSMIT_COPIES = 2


class Role(enum.Enum):
    CALLER = "caller"
    RECEIVER = "receiver"
    INITIATOR = "initiator"
    RESPONDER = "responder"


class Negotiation(enum.Enum):
    INITIATOR = "initiator"
    RESPONDER = "responder"
    RETRY = "retry"


class Phase(enum.IntEnum):
    IDLE = 0
    NEGOTIATING = 1
    AWAIT_COMMIT_OR_SHARE = 2
    AWAIT_SHARE = 3
    AWAIT_ENC_ID = 4
    AWAIT_CONFIRM = 5
    SAS_PENDING = 6
    SECURED = 7
    ABORTED = 8


class SigStatus(enum.IntEnum):
    VALID = 1
    INVALID = 2
    UNVERIFIED_NO_KEY = 3
    ABSENT = 4


class CtlKind(enum.IntEnum):
    CONFIRM = 1
    REQUEST = 2


# -- events and actions ----------------------------------------------------


@dataclass(frozen=True)
class Start:
    pass


@dataclass(frozen=True)
class FrameIn:
    message: Message
    session_id: int
    retransmit_count: int = 0


@dataclass(frozen=True)
class Timeout:
    timer_id: int


@dataclass(frozen=True)
class UserSasRequest:
    pass


@dataclass(frozen=True)
class UserSasResult:
    outcome: VerificationOutcome


Event = Union[Start, FrameIn, Timeout, UserSasRequest, UserSasResult]


@dataclass(frozen=True)
class SendFrame:
    message: Message
    session_id: int
    retransmit_count: int = 0


@dataclass(frozen=True)
class StartTimer:
    timer_id: int
    ticks: int


@dataclass(frozen=True)
class EmitSas:
    sas: Any


@dataclass(frozen=True)
class EmitSessionKey:
    key: Any


@dataclass(frozen=True)
class EmitAbort:
    code: AbortCode
    remote: bool = False


Action = Union[SendFrame, StartTimer, EmitSas, EmitSessionKey, EmitAbort]


# -- configuration and state ----------------------------------------------


@dataclass(frozen=True, eq=False)
class EndpointConfig:
    """Static settings for one endpoint.

    ``cards`` is consulted when an identity block is opened, so a revocation
    made mid-exchange is honoured by sessions already in flight.
    """

    user_id: bytes
    backend: Backend
    signing_key: Any = None
    cards: CardStore | None = None
    caller: bool = True
    commitment: bool = True
    enforce_sas_policy: bool = True
    r_max: int = R_MAX
    timeout_ticks: int = TIMEOUT_TICKS
    retransmit_copies: int = RETRANSMIT_COPIES

    def __post_init__(self) -> None:
        if len(self.user_id) != USER_ID_LEN:
            raise ValueError("user_id must be 16 bytes")
        if self.retransmit_copies < 1:
            raise ValueError("retransmit_copies must be >= 1")


@dataclass
class SessionState:
    config: EndpointConfig
    rng: Drbg
    phase: Phase = Phase.IDLE
    role: Role = Role.CALLER
    role_nonce: int | None = None
    peer_role_nonce: int | None = None
    session_id: int | None = None
    secret: Any = None
    public: Any = None
    salt: Any = None
    peer_commit: Any = None
    transcript: Transcript = field(default_factory=Transcript)
    td: Any = None
    schedule: KeySchedule | None = None
    own_fresh: Any = None
    peer_fresh: Any = None
    peer_id: bytes | None = None
    local_sig_status: SigStatus | None = None
    peer_sig_status: SigStatus | None = None
    obligation: SASObligation | None = None
    retry_counter: int = 0
    auth_failures: int = 0
    timer_id: int = 0
    last_sent: tuple = ()
    last_response: tuple = ()
    last_in: Message | None = None
    seen: frozenset = frozenset()
    tx_counts: dict = field(default_factory=dict)
    ctl_tx: int = 0
    ctl_rx: int = 0
    abort_code: AbortCode | None = None
    abort_remote: bool = False
    key_emitted: bool = False
    sas_compared: bool = False

    @property
    def secured(self) -> bool:
        return self.phase is Phase.SECURED

    @property
    def session_key(self) -> Any:
        return None if self.schedule is None else self.schedule.session_key

    @property
    def sas(self) -> Any:
        return None if self.schedule is None else self.schedule.sas

    @property
    def nonce_pair(self) -> tuple | None:
        if self.own_fresh is None or self.peer_fresh is None:
            return None
        if self.role is Role.INITIATOR:
            return (self.own_fresh, self.peer_fresh)
        return (self.peer_fresh, self.own_fresh)


def new_session(config: EndpointConfig, seed: bytes | int) -> SessionState:
    return SessionState(config=config, rng=Drbg(seed), role=Role.CALLER if config.caller else Role.RECEIVER)


def _clone(state: SessionState) -> SessionState:
    st = copy.copy(state)
    st.rng = state.rng.copy()
    return st


# -- pure helpers -----------------------------------------------------------


def negotiate_role(local: int, remote: int) -> Negotiation:
    if local > remote:
        return Negotiation.INITIATOR
    if local < remote:
        return Negotiation.RESPONDER
    return Negotiation.RETRY


def make_commitment(backend: Backend, pub_i: Any, salt_i: Any) -> Any:
    return backend.hash(pub_i, salt_i)


def check_commitment(backend: Backend, commit: Any, pub_i: Any, salt_i: Any) -> bool:
    return make_commitment(backend, pub_i, salt_i) == commit


def auth_policy(local_sig_status: SigStatus, peer_sig_status: SigStatus) -> SASObligation:
    """SAS comparison is mandatory as soon as either side could not verify."""
    if SigStatus.INVALID in (local_sig_status, peer_sig_status):
        raise ValueError("an invalid signature aborts before the policy is evaluated")
    weak = (SigStatus.UNVERIFIED_NO_KEY, SigStatus.ABSENT)
    if local_sig_status in weak or peer_sig_status in weak:
        return SASObligation.MANDATORY
    return SASObligation.OPTIONAL


def _aad(tag: Tag, session_id: int) -> bytes:
    return bytes([tag]) + session_id.to_bytes(4, "big")


@dataclass(frozen=True)
class IdentityResult:
    peer_id: bytes
    fresh_nonce: Any
    sig_status: SigStatus
    peer_status: SigStatus | None


def build_identity_block(
    schedule: KeySchedule,
    role: Role,
    signing_key: Any,
    td: Any,
    *,
    backend: Backend,
    user_id: bytes,
    fresh_nonce: Any,
    session_id: int,
    status: SigStatus | None = None,
) -> EncIdI | EncIdR:
    """Seal ``user_id``, a fresh nonce and an optional transcript signature.

    The initiator seals under k1 (direction 0) and the responder under k2
    (direction 1).  ``status`` carries the sender's verdict on the peer's
    signature and is only meaningful for the responder's block.
    """
    sig = None if signing_key is None else backend.sign_transcript(signing_key, td)
    plaintext = backend.pack(user_id, fresh_nonce, bytes([0 if status is None else int(status)]), sig)
    if role is Role.INITIATOR:
        ct = backend.aead_seal(schedule.k1, SeqNonce(0, 0), _aad(Tag.ENC_ID_I, session_id), plaintext)
        return EncIdI(ct)
    ct = backend.aead_seal(schedule.k2, SeqNonce(1, 0), _aad(Tag.ENC_ID_R, session_id), plaintext)
    return EncIdR(ct)


def open_identity_block(
    schedule: KeySchedule,
    role: Role,
    msg: EncIdI | EncIdR,
    card_store: CardStore | None,
    *,
    backend: Backend,
    td: Any,
    session_id: int,
) -> IdentityResult:
    """Open the peer's identity block; ``role`` is the receiver's role.

    Raises :class:`AuthFailure` on any decryption or format problem.  The
    signature is checked only if a card for the claimed id is installed.
    """
    if role is Role.RESPONDER:
        key, nonce, tag = schedule.k1, SeqNonce(0, 0), Tag.ENC_ID_I
    else:
        key, nonce, tag = schedule.k2, SeqNonce(1, 0), Tag.ENC_ID_R
    plaintext = backend.aead_open(key, nonce, _aad(tag, session_id), msg.ct)
    try:
        uid, fresh, status_b, sig = backend.unpack(plaintext, 4)
        peer_id = backend.lower(uid)
        status_code = backend.lower(status_b)
    except (ValueError, TypeError) as exc:
        raise AuthFailure(f"malformed identity block: {exc}") from exc
    if len(peer_id) != USER_ID_LEN or fresh is None or len(status_code) != 1:
        raise AuthFailure("malformed identity block")
    peer_status = SigStatus(status_code[0]) if status_code[0] in SigStatus._value2member_map_ else None
    vk = card_store.lookup(peer_id) if card_store is not None else None
    if vk is None:
        verdict = SigStatus.UNVERIFIED_NO_KEY
    elif sig is None:
        verdict = SigStatus.ABSENT
    elif backend.verify_signature(vk, td, sig):
        verdict = SigStatus.VALID
    else:
        verdict = SigStatus.INVALID
    return IdentityResult(peer_id, fresh, verdict, peer_status)


# -- state machine ----------------------------------------------------------


def step(state: SessionState, event: Event) -> tuple[SessionState, list[Action]]:
    """Advance one endpoint by one event; returns the new state and actions."""
    if state.phase is Phase.ABORTED:
        return state, []
    st = _clone(state)
    actions: list[Action] = []
    if isinstance(event, Start):
        if st.phase is Phase.IDLE:
            _start(st, actions)
        else:
            return state, []
    elif isinstance(event, FrameIn):
        if not _on_frame(st, event, actions):
            return state, []
    elif isinstance(event, Timeout):
        if event.timer_id != st.timer_id or st.phase in (Phase.IDLE, Phase.SAS_PENDING, Phase.SECURED):
            return state, []
        _on_timeout(st, actions)
    elif isinstance(event, UserSasRequest):
        if st.phase is not Phase.SECURED:
            return state, []
        _send_ctl(st, CtlKind.REQUEST, actions)
        _enter_sas_pending(st, actions)
    elif isinstance(event, UserSasResult):
        if st.phase is not Phase.SAS_PENDING:
            return state, []
        _on_sas_result(st, event.outcome, actions)
    else:
        raise TypeError(f"unknown event {event!r}")
    return st, actions


def run_events(state: SessionState, events) -> tuple[SessionState, list[Action]]:
    """Fold ``step`` over an event sequence (used for replay)."""
    out: list[Action] = []
    for ev in events:
        state, acts = step(state, ev)
        out.extend(acts)
    return state, out


def _own_sid(st: SessionState) -> int:
    if st.session_id is not None:
        return st.session_id
    return (st.role_nonce or 0) >> 32


def _start(st: SessionState, actions: list[Action]) -> None:
    st.role_nonce = st.rng.randbits(64)
    st.phase = Phase.NEGOTIATING
    _send(st, (RoleNonce(st.role_nonce),), actions, response=False)


def _send(st: SessionState, msgs: tuple, actions: list[Action], *, response: bool = True, timer: bool = True) -> None:
    counts = dict(st.tx_counts)
    for m in msgs:
        counts[m] = 0
        actions.append(SendFrame(m, _own_sid(st), 0))
    st.tx_counts = counts
    st.last_sent = msgs
    if response:
        st.last_response = msgs
    if timer:
        _arm_timer(st, actions)
    else:
        st.timer_id += 1


def _resend(st: SessionState, msgs: tuple, actions: list[Action], copies: int = 1) -> None:
    counts = dict(st.tx_counts)
    for m in msgs:
        counts[m] = counts.get(m, 0) + 1
        frame = SendFrame(m, _own_sid(st), min(counts[m], 255))
        actions.extend([frame] * copies)
    st.tx_counts = counts


def _arm_timer(st: SessionState, actions: list[Action]) -> None:
    st.timer_id += 1
    actions.append(StartTimer(st.timer_id, st.config.timeout_ticks))


def _advance(st: SessionState, phase: Phase) -> None:
    st.phase = phase
    st.retry_counter = 0
    st.auth_failures = 0


def _abort(st: SessionState, code: AbortCode, actions: list[Action], *, notify: bool = True) -> None:
    st.phase = Phase.ABORTED
    st.abort_code = code
    st.secret = None
    st.timer_id += 1
    if notify and st.role_nonce is not None:
        actions.append(SendFrame(Abort(int(code)), _own_sid(st), 0))
    actions.append(EmitAbort(code))


def _bump_retry(st: SessionState, actions: list[Action], *, auth: bool = False) -> bool:
    """Count a failed attempt; aborts and returns False once R_max is exceeded."""
    st.retry_counter += 1
    if auth:
        st.auth_failures += 1
    if st.retry_counter > st.config.r_max:
        code = AbortCode.AUTH_FAIL if st.auth_failures else AbortCode.RETRY_EXHAUSTED
        _abort(st, code, actions)
        return False
    return True


def _on_timeout(st: SessionState, actions: list[Action]) -> None:
    if _bump_retry(st, actions):
        # a timeout means a whole round trip was lost: send extra copies
        _resend(st, st.last_sent, actions, st.config.retransmit_copies)
        _arm_timer(st, actions)


def _accept(st: SessionState, m: Message) -> None:
    st.last_in = m
    st.seen = st.seen | {m}
    st.last_response = ()


def _on_frame(st: SessionState, ev: FrameIn, actions: list[Action]) -> bool:
    """Returns False when the frame is ignored without any state change."""
    m = ev.message
    if isinstance(m, Abort):
        if st.phase is Phase.IDLE or (st.session_id is not None and ev.session_id != st.session_id):
            return False
        try:
            code = AbortCode(m.code)
        except ValueError:
            return False
        st.abort_remote = True
        _abort(st, code, actions, notify=False)
        return True
    if isinstance(m, RoleNonce):
        return _on_role_nonce(st, m, actions)
    if st.session_id is None or ev.session_id != st.session_id:
        return False
    if m == st.last_in:
        _resend(st, st.last_response, actions)
        return True
    if m in st.seen:
        return False

    phase, role = st.phase, st.role
    if phase is Phase.AWAIT_COMMIT_OR_SHARE and isinstance(m, Commit):
        _responder_on_commit(st, m, actions)
    elif phase is Phase.AWAIT_SHARE and role is Role.INITIATOR and isinstance(m, KeyShareR):
        _initiator_on_share(st, m, actions)
    elif phase is Phase.AWAIT_SHARE and role is Role.RESPONDER and isinstance(m, KeyShareI):
        _responder_on_share(st, m, actions)
    elif phase is Phase.AWAIT_ENC_ID and role is Role.RESPONDER and isinstance(m, EncIdI):
        _responder_on_identity(st, m, actions)
    elif phase is Phase.AWAIT_ENC_ID and role is Role.INITIATOR and isinstance(m, EncIdR):
        _initiator_on_identity(st, m, actions)
    elif isinstance(m, SasCtl) and phase in (Phase.AWAIT_CONFIRM, Phase.SECURED, Phase.SAS_PENDING):
        _on_ctl(st, m, actions)
    else:
        _bump_retry(st, actions)
    return True


def _on_role_nonce(st: SessionState, m: RoleNonce, actions: list[Action]) -> bool:
    if st.phase is Phase.IDLE:
        _start(st, actions)
    if st.phase is not Phase.NEGOTIATING:
        if m == st.last_in:
            # the peer is still negotiating, so our own nonce was probably lost
            _resend(st, (RoleNonce(st.role_nonce),) + st.last_response, actions)
            return True
        return bool(actions)
    assert st.role_nonce is not None
    outcome = negotiate_role(st.role_nonce, m.r)
    if outcome is Negotiation.RETRY:
        if _bump_retry(st, actions):
            _start(st, actions)
        return True
    be = st.config.backend
    st.peer_role_nonce = m.r
    init_nonce = st.role_nonce if outcome is Negotiation.INITIATOR else m.r
    resp_nonce = m.r if outcome is Negotiation.INITIATOR else st.role_nonce
    st.session_id = init_nonce >> 32
    st.transcript = Transcript(
        (message_entry(be, RoleNonce(init_nonce)), message_entry(be, RoleNonce(resp_nonce)))
    )
    _accept(st, m)
    if outcome is Negotiation.INITIATOR:
        st.role = Role.INITIATOR
        st.secret, st.public = be.gen_ephemeral_keypair(st.rng)
        st.salt = be.random_nonce(st.rng)
        _advance(st, Phase.AWAIT_SHARE)
        if st.config.commitment:
            commit = Commit(make_commitment(be, st.public, st.salt))
            st.transcript = st.transcript.append(message_entry(be, commit))
            _send(st, (commit,), actions)
        else:
            _arm_timer(st, actions)
    else:
        st.role = Role.RESPONDER
        if st.config.commitment:
            _advance(st, Phase.AWAIT_COMMIT_OR_SHARE)
            _arm_timer(st, actions)
        else:
            _send_key_share_r(st, actions)
    return True


def _send_key_share_r(st: SessionState, actions: list[Action]) -> None:
    be = st.config.backend
    st.secret, st.public = be.gen_ephemeral_keypair(st.rng)
    st.salt = be.random_nonce(st.rng)
    share = KeyShareR(st.public, st.salt)
    st.transcript = st.transcript.append(message_entry(be, share))
    _advance(st, Phase.AWAIT_SHARE)
    _send(st, (share,), actions)


def _responder_on_commit(st: SessionState, m: Commit, actions: list[Action]) -> None:
    _accept(st, m)
    st.peer_commit = m.c
    st.transcript = st.transcript.append(message_entry(st.config.backend, m))
    _send_key_share_r(st, actions)


def _derive(st: SessionState, peer_pub: Any, actions: list[Action]) -> bool:
    be = st.config.backend
    try:
        z = be.dh_shared(st.secret, peer_pub)
    except InvalidShare:
        _abort(st, AbortCode.AUTH_FAIL, actions)
        return False
    st.secret = None
    st.td = be.transcript_hash(st.transcript.entries)
    st.schedule = be.derive_schedule(z, st.td)
    return True


def _initiator_on_share(st: SessionState, m: KeyShareR, actions: list[Action]) -> None:
    be = st.config.backend
    _accept(st, m)
    own = KeyShareI(st.public, st.salt)
    st.transcript = st.transcript.append(message_entry(be, m)).append(message_entry(be, own))
    if not _derive(st, m.pub, actions):
        return
    st.own_fresh = be.random_nonce(st.rng)
    block = build_identity_block(
        st.schedule, Role.INITIATOR, st.config.signing_key, st.td,
        backend=be, user_id=st.config.user_id, fresh_nonce=st.own_fresh, session_id=st.session_id,
    )
    _advance(st, Phase.AWAIT_ENC_ID)
    _send(st, (own, block), actions)


def _responder_on_share(st: SessionState, m: KeyShareI, actions: list[Action]) -> None:
    be = st.config.backend
    if st.config.commitment and not check_commitment(be, st.peer_commit, m.pub, m.salt):
        _abort(st, AbortCode.COMMIT_MISMATCH, actions)
        return
    _accept(st, m)
    st.transcript = st.transcript.append(message_entry(be, m))
    if not _derive(st, m.pub, actions):
        return
    _advance(st, Phase.AWAIT_ENC_ID)
    _arm_timer(st, actions)


def _open_identity(st: SessionState, m: EncIdI | EncIdR, actions: list[Action]) -> IdentityResult | None:
    try:
        res = open_identity_block(
            st.schedule, st.role, m, st.config.cards,
            backend=st.config.backend, td=st.td, session_id=st.session_id,
        )
    except AuthFailure:
        # channel damage is expected on voice links: ask again
        if _bump_retry(st, actions, auth=True):
            _resend(st, st.last_sent, actions)
        return None
    if res.sig_status is SigStatus.INVALID:
        _abort(st, AbortCode.SIG_INVALID, actions)
        return None
    return res


def _responder_on_identity(st: SessionState, m: EncIdI, actions: list[Action]) -> None:
    res = _open_identity(st, m, actions)
    if res is None:
        return
    be = st.config.backend
    _accept(st, m)
    st.peer_id, st.peer_fresh, st.local_sig_status = res.peer_id, res.fresh_nonce, res.sig_status
    st.own_fresh = be.random_nonce(st.rng)
    block = build_identity_block(
        st.schedule, Role.RESPONDER, st.config.signing_key, st.td,
        backend=be, user_id=st.config.user_id, fresh_nonce=st.own_fresh,
        session_id=st.session_id, status=st.local_sig_status,
    )
    _advance(st, Phase.AWAIT_CONFIRM)
    _send(st, (block,), actions)


def _initiator_on_identity(st: SessionState, m: EncIdR, actions: list[Action]) -> None:
    res = _open_identity(st, m, actions)
    if res is None:
        return
    if res.peer_status is None or res.peer_status is SigStatus.INVALID:
        if _bump_retry(st, actions, auth=True):
            _resend(st, st.last_sent, actions)
        return
    _accept(st, m)
    st.peer_id, st.peer_fresh, st.local_sig_status = res.peer_id, res.fresh_nonce, res.sig_status
    st.peer_sig_status = res.peer_status
    st.obligation = auth_policy(st.local_sig_status, st.peer_sig_status)
    _send_ctl(st, CtlKind.CONFIRM, actions)
    _finish_exchange(st, actions)


def _ctl_nonce(st: SessionState, counter: int, outgoing: bool) -> SeqNonce:
    initiator = st.role is Role.INITIATOR
    direction = 0 if initiator == outgoing else 1
    return SeqNonce(direction, counter)


def _send_ctl(st: SessionState, kind: CtlKind, actions: list[Action]) -> None:
    be = st.config.backend
    status = st.local_sig_status or 0
    plaintext = be.pack(bytes([int(kind)]), bytes([int(status)]))
    ct = be.aead_seal(st.schedule.k3, _ctl_nonce(st, st.ctl_tx, True), _aad(Tag.SAS_CTL, st.session_id), plaintext)
    st.ctl_tx += 1
    # a user request is not a reply to last_in, so it must not replace last_response
    _send(st, (SasCtl(ct),), actions, response=kind is CtlKind.CONFIRM, timer=False)


def _on_ctl(st: SessionState, m: SasCtl, actions: list[Action]) -> None:
    be = st.config.backend
    aad = _aad(Tag.SAS_CTL, st.session_id)
    fields = None
    for counter in range(st.ctl_rx, st.ctl_rx + st.config.r_max + 1):
        try:
            plaintext = be.aead_open(st.schedule.k3, _ctl_nonce(st, counter, False), aad, m.ct)
            kind_b, status_b = (be.lower(x) for x in be.unpack(plaintext, 2))
        except (AuthFailure, ValueError, TypeError):
            continue
        fields = (counter, kind_b, status_b)
        break
    if fields is None or len(fields[1]) != 1 or len(fields[2]) != 1:
        if _bump_retry(st, actions, auth=True) and st.phase is Phase.AWAIT_CONFIRM:
            _resend(st, st.last_sent, actions)
        return
    counter, kind_b, status_b = fields
    kind = kind_b[0]
    if st.phase is Phase.AWAIT_CONFIRM:
        if kind != CtlKind.CONFIRM or status_b[0] not in (SigStatus.VALID, SigStatus.UNVERIFIED_NO_KEY, SigStatus.ABSENT):
            _bump_retry(st, actions, auth=True)
            return
        st.ctl_rx = counter + 1
        _accept(st, m)
        st.peer_sig_status = SigStatus(status_b[0])
        st.obligation = auth_policy(st.local_sig_status, st.peer_sig_status)
        _finish_exchange(st, actions)
        return
    st.ctl_rx = counter + 1
    _accept(st, m)
    if kind == CtlKind.REQUEST and st.phase is Phase.SECURED:
        _enter_sas_pending(st, actions)


def _finish_exchange(st: SessionState, actions: list[Action]) -> None:
    st.timer_id += 1
    if st.obligation is SASObligation.OPTIONAL:
        _enter_secured(st, actions)
    else:
        _enter_sas_pending(st, actions)


def _enter_secured(st: SessionState, actions: list[Action]) -> None:
    _advance(st, Phase.SECURED)
    if not st.key_emitted:
        st.key_emitted = True
        actions.append(EmitSessionKey(st.schedule.session_key))


def _enter_sas_pending(st: SessionState, actions: list[Action]) -> None:
    _advance(st, Phase.SAS_PENDING)
    actions.append(EmitSas(st.schedule.sas))


def _on_sas_result(st: SessionState, outcome: VerificationOutcome, actions: list[Action]) -> None:
    if outcome is VerificationOutcome.MATCH:
        st.sas_compared = True
        _enter_secured(st, actions)
    elif outcome is VerificationOutcome.MISMATCH:
        _abort(st, AbortCode.SAS_MISMATCH, actions)
    elif st.obligation is SASObligation.MANDATORY and st.config.enforce_sas_policy:
        _abort(st, AbortCode.POLICY_VIOLATION, actions)
    else:
        _enter_secured(st, actions)
