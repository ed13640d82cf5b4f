"""Scenario runner and security-property checkers.

A scenario letter fixes which virtual cards are installed and whether the
users are held to the SAS policy:

    a  both cards installed                   (mutual signatures)
    b  alice's card installed at bob only     (one-sided signatures)
    c  no cards, SAS comparison enforced
    d  no cards, users skip the SAS and nothing enforces it

Symbolic runs decide secrecy by knowledge closure over the recorded trace;
concrete runs decide it by comparing the attacker's keys with the parties'.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any

from voicekex import symbolic as sym
from voicekex.adversary import (
    GrindSas,
    MitmDh,
    ScriptedAdversary,
    ScriptError,
    action_to_dict,
    parse_action,
)
from voicekex.cards import CardStore
from voicekex.channel import ChannelConfig, VoiceAuthChannel
from voicekex.crypto import Drbg, make_backend
from voicekex.frames import AbortCode, Message, Tag
from voicekex.keyschedule import message_term
from voicekex.protocol import EndpointConfig, FrameIn, Phase, Role, Start, new_session, step
from voicekex.sim import ALICE, BOB, Network, Party, Wire

SCENARIOS = ("a", "b", "c", "d")
MODES = ("symbolic", "concrete")
PROPERTIES = ("secrecy", "forward_secrecy", "injective_agreement")
ALICE_ID = hashlib.sha256(b"user:alice").digest()[:16]
BOB_ID = hashlib.sha256(b"user:bob").digest()[:16]

# order in which abort codes explain a trial's outcome
_DETECTION_ORDER = (
    AbortCode.SIG_INVALID,
    AbortCode.SAS_MISMATCH,
    AbortCode.COMMIT_MISMATCH,
    AbortCode.POLICY_VIOLATION,
    AbortCode.AUTH_FAIL,
    AbortCode.RETRY_EXHAUSTED,
)


class ConfigError(ValueError):
    pass


def _yes(flag: bool) -> str:
    return "yes" if flag else "no"


# -- configuration ----------------------------------------------------------


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    adversary_script: tuple = ()
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    trials: int = 100
    seed: int = 0
    mode: str = "symbolic"
    commitment: bool = True
    mirror: bool = False
    expect: dict | None = None
    name: str = ""

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError("trials must be a positive integer")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.expect is not None:
            bad = set(self.expect) - set(PROPERTIES)
            if bad or any(v not in ("yes", "no") for v in self.expect.values()):
                raise ConfigError(f"malformed expectation {self.expect!r}")

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        script = "+".join(a.name for a in self.adversary_script) or "Forward"
        return f"{self.scenario}:{script}"

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        if not isinstance(d, dict):
            raise ConfigError("scenario config must be an object")
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown scenario fields: {sorted(unknown)}")
        args = dict(d)
        try:
            args["adversary_script"] = tuple(parse_action(a) for a in d.get("adversary_script", ()))
            args["channel"] = ChannelConfig.from_dict(d.get("channel", {}))
        except (ScriptError, ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        if "scenario" not in args:
            raise ConfigError("scenario letter missing")
        return cls(**args)

    def to_dict(self) -> dict:
        out = {
            "scenario": self.scenario,
            "adversary_script": [action_to_dict(a) for a in self.adversary_script],
            "channel": dict(vars(self.channel)),
            "trials": self.trials,
            "seed": self.seed,
            "mode": self.mode,
            "commitment": self.commitment,
            "mirror": self.mirror,
            "name": self.name,
        }
        if self.expect is not None:
            out["expect"] = dict(self.expect)
        return out


# -- traces and claims ------------------------------------------------------------


@dataclass(frozen=True)
class Claim:
    """A completed session as seen by one endpoint."""

    endpoint: str
    role: Role
    own_id: bytes
    peer_id: bytes
    session_key: Any
    nonce_pair: tuple


@dataclass
class Trace:
    messages: list[Message]
    sids: set[int]
    adversary_private: set
    voice: list
    signing_keys: list
    claims: list[Claim]
    secured_keys: list


def _public_constants(trace: Trace, backend: Any) -> set:
    consts = {sym.G, sym.NONE}
    consts |= {sym.Atom(f"tag:{int(t)}") for t in Tag}
    for sid in trace.sids:
        for t in Tag:
            consts.add(backend.lift(bytes([t]) + sid.to_bytes(4, "big")))
    # status codes and control kinds travel as single bytes
    consts |= {backend.lift(bytes([b])) for b in range(8)}
    for d in (0, 1):
        for c in range(8):
            consts.add(sym.Atom(f"nonce:{d}:{c}"))
    return consts


def eavesdropper_knowledge(trace: Trace, backend: Any = None) -> sym.Knowledge:
    """Closure of what a passive observer of the data channel learns."""
    backend = backend or make_backend("symbolic")
    initial = {message_term(backend, m) for m in trace.messages}
    return sym.close_knowledge(initial | _public_constants(trace, backend))


def adversary_knowledge(trace: Trace, compromise: str = "none") -> sym.Knowledge:
    if compromise not in ("none", "post-session"):
        raise ValueError(f"unknown compromise {compromise!r}")
    backend = make_backend("symbolic")
    initial = {message_term(backend, m) for m in trace.messages}
    initial |= _public_constants(trace, backend)
    initial |= set(trace.adversary_private)
    initial |= {s for s in trace.voice if not isinstance(s, int)}
    if compromise == "post-session":
        initial |= set(trace.signing_keys)
    return sym.close_knowledge(initial)


def check_secrecy(trace: Trace, compromise: str = "none") -> bool:
    """True iff no completed endpoint's session key is derivable by the attacker."""
    if not trace.secured_keys:
        return True
    k = adversary_knowledge(trace, compromise)
    return not any(key in k for key in trace.secured_keys)


def check_injective_agreement(claims: list[Claim]) -> bool:
    """Every claim must match exactly one peer claim, and nonce pairs are unique per role."""
    per_role: set = set()
    for c in claims:
        key = (c.role, c.nonce_pair)
        if key in per_role:
            return False
        per_role.add(key)
    for c in claims:
        partners = [
            d
            for d in claims
            if d.endpoint != c.endpoint
            and d.role is not c.role
            and d.own_id == c.peer_id
            and d.peer_id == c.own_id
            and d.session_key == c.session_key
            and d.nonce_pair == c.nonce_pair
        ]
        if len(partners) != 1:
            return False
    return True


# -- a single trial -----------------------------------------------------------------


@dataclass(frozen=True)
class TrialRecord:
    index: int
    completed: bool
    outcomes: tuple[str, str]
    detected_by: str | None
    attacker_has_session_key: bool
    forward_secrecy_holds: bool
    injective_agreement_holds: bool
    sas_equal: bool | None

    def to_line(self) -> str:
        return (
            f"trial={self.index} completed={_yes(self.completed)} alice={self.outcomes[0]} "
            f"bob={self.outcomes[1]} detected_by={self.detected_by or '-'} "
            f"attacker_key={_yes(self.attacker_has_session_key)} "
            f"fs={_yes(self.forward_secrecy_holds)} agreement={_yes(self.injective_agreement_holds)}"
        )


@dataclass
class TrialRun:
    record: TrialRecord
    network: Network
    trace: Trace
    adversary: ScriptedAdversary


def trial_seed(seed: int, index: int) -> bytes:
    return hashlib.sha256(b"trial" + seed.to_bytes(8, "big") + index.to_bytes(8, "big")).digest()


def _outcome(party: Party) -> str:
    st = party.state
    if st.phase is Phase.SECURED:
        return "secured"
    if st.phase is Phase.ABORTED:
        return st.abort_code.name.lower() + ("(remote)" if st.abort_remote else "")
    return "stalled:" + st.phase.name.lower()


def _claim(label: str, party: Party) -> Claim | None:
    st = party.state
    if not st.secured:
        return None
    return Claim(label, st.role, st.config.user_id, st.peer_id, st.session_key, st.nonce_pair)


def build_parties(cfg: ScenarioConfig, seed: bytes, mode: str) -> tuple[Party, Party, dict]:
    draw = Drbg(seed + b"parties")
    keys = {}
    for uid in (ALICE_ID, BOB_ID):
        keys[uid] = make_backend(mode).gen_signing_keypair(draw.random_bytes(32))
    cards = {ALICE_ID: CardStore(), BOB_ID: CardStore()}
    if cfg.scenario == "a":
        cards[BOB_ID].install(ALICE_ID, keys[ALICE_ID][1])
        cards[ALICE_ID].install(BOB_ID, keys[BOB_ID][1])
    elif cfg.scenario == "b":
        holder, owner = (ALICE_ID, BOB_ID) if cfg.mirror else (BOB_ID, ALICE_ID)
        cards[holder].install(owner, keys[owner][1])
    parties = []
    for name, uid, peer, caller in ((ALICE, ALICE_ID, BOB_ID, True), (BOB, BOB_ID, ALICE_ID, False)):
        conf = EndpointConfig(
            user_id=uid,
            backend=make_backend(mode),
            signing_key=keys[uid][0],
            cards=cards[uid],
            caller=caller,
            commitment=cfg.commitment,
            enforce_sas_policy=cfg.scenario != "d",
        )
        state = new_session(conf, draw.random_bytes(32))
        parties.append(Party(name, uid, state, peer))
    return parties[0], parties[1], {uid: k[0] for uid, k in keys.items()}


def run_trial(cfg: ScenarioConfig, index: int, *, wire: str | None = None, stop_when=None) -> TrialRun:
    seed = trial_seed(cfg.seed, index)
    mode = cfg.mode
    alice, bob, sks = build_parties(cfg, seed, mode)
    adv = ScriptedAdversary(
        list(cfg.adversary_script), make_backend(mode), Drbg(seed + b"adversary"), stolen=sks
    )
    if wire is None:
        wire = "direct" if mode == "symbolic" else "frames"
    channel = cfg.channel
    if mode == "symbolic" or wire == "direct":
        channel = ChannelConfig()  # the symbolic wire carries terms, not bits
    else:
        channel = ChannelConfig(**{**vars(channel), "seed": int.from_bytes(seed[:8], "big") ^ channel.seed})
    net = Network(
        alice,
        bob,
        adversary=adv,
        channel=channel,
        wire=Wire(wire),
        voice=VoiceAuthChannel(),
        sas_users="skip" if cfg.scenario == "d" else "compare",
        stop_when=stop_when,
    ).run()

    claims = [c for c in (_claim(f"{index}:{ALICE}", alice), _claim(f"{index}:{BOB}", bob)) if c is not None]
    secured_keys = [c.session_key for c in claims]
    trace = Trace(
        messages=net.wire_messages(),
        sids={s for p in (alice, bob) for s in [p.state.session_id] if s is not None}
        | ({leg.sid for leg in (adv.mitm.a, adv.mitm.b) if leg.sid is not None} if adv.mitm else set()),
        adversary_private=adv.private_terms(),
        voice=[u.sas for u in net.voice.tap()],
        signing_keys=list(adv.stolen_after.values()),
        claims=claims,
        secured_keys=secured_keys,
    )
    if mode == "symbolic":
        has_key = not check_secrecy(trace, "none")
        fs = check_secrecy(trace, "post-session")
    else:
        mitm_keys = adv.mitm.session_keys() if adv.mitm is not None else []
        has_key = any(k in mitm_keys for k in secured_keys)
        fs = not has_key  # stolen signing keys do not open an ephemeral DH
    codes = {p.state.abort_code for p in (alice, bob) if p.state.abort_code is not None}
    detected = next((c.name.lower() for c in _DETECTION_ORDER if c in codes), None)
    sas_a, sas_b = alice.state.sas, bob.state.sas
    record = TrialRecord(
        index=index,
        completed=alice.state.secured and bob.state.secured,
        outcomes=(_outcome(alice), _outcome(bob)),
        detected_by=detected,
        attacker_has_session_key=has_key,
        forward_secrecy_holds=fs,
        injective_agreement_holds=check_injective_agreement(claims),
        sas_equal=None if sas_a is None or sas_b is None else sas_a == sas_b,
    )
    return TrialRun(record, net, trace, adv)


# -- whole scenarios ------------------------------------------------------------


@dataclass
class ScenarioReport:
    config: ScenarioConfig
    trials: list[TrialRecord]
    global_agreement: bool = True

    @property
    def verdicts(self) -> dict[str, str]:
        t = self.trials
        return {
            "secrecy": _yes(all(not r.attacker_has_session_key for r in t)),
            "forward_secrecy": _yes(all(r.forward_secrecy_holds for r in t)),
            "injective_agreement": _yes(self.global_agreement and all(r.injective_agreement_holds for r in t)),
        }

    @property
    def meets_expectation(self) -> bool:
        if self.config.expect is None:
            return True
        v = self.verdicts
        return all(v[k] == want for k, want in self.config.expect.items())

    def completion_rate(self) -> float:
        return sum(r.completed for r in self.trials) / len(self.trials)

    def to_text(self) -> str:
        cfg = self.config
        v = self.verdicts
        lines = [
            f"[{cfg.label}] scenario={cfg.scenario} mode={cfg.mode} trials={len(self.trials)} seed={cfg.seed}",
            f"  secrecy={v['secrecy']} forward_secrecy={v['forward_secrecy']} "
            f"injective_agreement={v['injective_agreement']} completed={sum(r.completed for r in self.trials)}",
        ]
        lines += ["  " + r.to_line() for r in self.trials]
        return "\n".join(lines) + "\n"


def run_scenario(cfg: ScenarioConfig) -> ScenarioReport:
    records = []
    claims: list[Claim] = []
    for i in range(cfg.trials):
        run = run_trial(cfg, i)
        records.append(run.record)
        claims.extend(run.trace.claims)
    return ScenarioReport(cfg, records, check_injective_agreement(claims))


def combine_by_scenario(reports: list[ScenarioReport]) -> dict[str, dict[str, str]]:
    """Table-1 matrix: a property holds for a letter only if every run upholds it."""
    matrix: dict[str, dict[str, str]] = {}
    for rep in reports:
        row = matrix.setdefault(rep.config.scenario, {p: "yes" for p in PROPERTIES})
        for p, v in rep.verdicts.items():
            if v == "no":
                row[p] = "no"
    return matrix


def render_matrix(matrix: dict[str, dict[str, str]]) -> str:
    letters = [s for s in SCENARIOS if s in matrix]
    names = {"secrecy": "Session Key secrecy", "forward_secrecy": "Forward secrecy", "injective_agreement": "Injective agreement"}
    width = max(len(n) for n in names.values())
    lines = [" " * width + "".join(f"  ({s})" for s in letters)]
    for p in PROPERTIES:
        lines.append(names[p].ljust(width) + "".join(f"  {matrix[s][p]:>3}" for s in letters))
    return "\n".join(lines) + "\n"


# -- replay -----------------------------------------------------------------------


def replay_to_fresh_responder(cfg: ScenarioConfig, index: int = 0, fresh_seed: bytes = b"fresh") -> tuple[list[Claim], Claim | None, str]:
    """Record an honest session, then feed alice's frames to a fresh bob.

    Returns the original claims, the fresh bob's claim (if any) and its
    final outcome.
    """
    original = run_trial(cfg, index)
    recorded = []
    for rec in original.network.log:
        if rec.src == ALICE and not rec.by_adversary:
            decoded = original.network.wire.unpack(rec.item)
            if decoded is not None and decoded[2] == 0:
                recorded.append(decoded)
    _, bob, _ = build_parties(cfg, trial_seed(cfg.seed, index) + fresh_seed, cfg.mode)
    # the fresh bob keeps the original cards and identity
    bob_orig = original.network.parties[BOB].state.config
    state = new_session(bob_orig, trial_seed(cfg.seed, index) + fresh_seed)
    state, _ = step(state, Start())
    for msg, sid, rc in recorded:
        state, _ = step(state, FrameIn(msg, sid, rc))
    bob.state = state
    return original.trace.claims, _claim(f"replay:{index}:{BOB}", bob), _outcome(bob)


# -- SAS grinding -------------------------------------------------------------------


@dataclass
class GrindReport:
    trials: int
    max_attempts: int
    commitment: bool
    match_indices: list[int | None]
    successes: int
    chance_collisions: int
    rejected_reveals: int

    def rate_for(self, n: int) -> float:
        """Success rate of an attacker allowed ``n`` re-draws."""
        if not 0 <= n <= self.max_attempts:
            raise ValueError(f"n must lie in [0, {self.max_attempts}]")
        if self.commitment:
            return self.successes / self.trials
        return sum(1 for m in self.match_indices if m is not None and m < n) / self.trials


def grind_sas(attempts: int = 16, trials: int = 100_000, *, seed: int = 0, commitment: bool = False) -> GrindReport:
    """Measure how often a grinding relay forces equal SAS values on both legs.

    One sweep with ``attempts`` re-draws per trial answers every smaller
    budget too: a budget of ``n`` succeeds iff the first hit came before ``n``.
    """
    cfg = ScenarioConfig(
        scenario="c",
        adversary_script=(MitmDh(), GrindSas(attempts)),
        trials=trials,
        seed=seed,
        mode="concrete",
        commitment=commitment,
    )

    def decided(net: Network) -> bool:
        out = net.adversary.mitm.grind_outcome
        return out.revealed != "none" and not commitment

    indices: list[int | None] = []
    successes = chances = rejected = 0
    for i in range(trials):
        run = run_trial(cfg, i, wire="direct", stop_when=decided)
        out = run.adversary.mitm.grind_outcome
        indices.append(out.match_index)
        if not commitment:
            continue
        bob = run.network.parties[BOB].state
        alice = run.network.parties[ALICE].state
        if bob.abort_code is AbortCode.COMMIT_MISMATCH:
            rejected += 1
        equal = bob.sas is not None and bob.sas == alice.sas
        if equal and out.revealed == "redraw":
            successes += 1
        elif equal:
            chances += 1
    return GrindReport(trials, attempts, commitment, indices, successes, chances, rejected)


# -- seed screening -----------------------------------------------------------------


def has_sas_collision(cfg: ScenarioConfig, index: int) -> bool:
    """True if a plain relay in scenario (c) would hit equal SAS values by chance."""
    probe = ScenarioConfig(
        scenario="c", adversary_script=(MitmDh(),), trials=1, seed=cfg.seed, mode="concrete",
        commitment=cfg.commitment,
    )
    run = run_trial(probe, index, wire="direct")
    a, b = run.adversary.mitm.sas_values()
    return a is not None and a == b


def screened_indices(cfg: ScenarioConfig, count: int) -> list[int]:
    """The first ``count`` trial indices whose relay SAS values differ."""
    out, i = [], 0
    while len(out) < count:
        if not has_sas_collision(cfg, i):
            out.append(i)
        i += 1
    return out


# -- scenario files ---------------------------------------------------------------


@dataclass
class Suite:
    name: str
    scenarios: list[ScenarioConfig]
    expect: dict[str, dict[str, str]] | None = None

    @classmethod
    def from_dict(cls, d: Any) -> "Suite":
        if isinstance(d, dict) and "scenarios" not in d:
            cfg = ScenarioConfig.from_dict(d)
            return cls(cfg.label, [cfg])
        if not isinstance(d, dict):
            raise ConfigError("scenario file must hold a JSON object")
        unknown = set(d) - {"name", "scenarios", "expect"}
        if unknown:
            raise ConfigError(f"unknown suite fields: {sorted(unknown)}")
        if not isinstance(d["scenarios"], list) or not d["scenarios"]:
            raise ConfigError("scenarios must be a non-empty list")
        expect = d.get("expect")
        if expect is not None:
            if not isinstance(expect, dict) or set(expect) - set(SCENARIOS):
                raise ConfigError("suite expectations must be keyed by scenario letter")
            for row in expect.values():
                if not isinstance(row, dict) or set(row) - set(PROPERTIES) or any(v not in ("yes", "no") for v in row.values()):
                    raise ConfigError(f"malformed expectation row {row!r}")
        return cls(str(d.get("name", "suite")), [ScenarioConfig.from_dict(s) for s in d["scenarios"]], expect)

    @classmethod
    def from_json(cls, text: str) -> "Suite":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc


@dataclass
class SuiteReport:
    suite: Suite
    reports: list[ScenarioReport]

    @property
    def matrix(self) -> dict[str, dict[str, str]]:
        return combine_by_scenario(self.reports)

    @property
    def meets_expectation(self) -> bool:
        if not all(r.meets_expectation for r in self.reports):
            return False
        if self.suite.expect is None:
            return True
        m = self.matrix
        return all(
            letter in m and m[letter][p] == want
            for letter, row in self.suite.expect.items()
            for p, want in row.items()
        )

    def to_text(self) -> str:
        parts = [f"# {self.suite.name}\n", render_matrix(self.matrix)]
        parts += ["\n" + r.to_text() for r in self.reports]
        return "".join(parts)


def run_suite(suite: Suite, *, mode: str | None = None, seed: int | None = None, trials: int | None = None) -> SuiteReport:
    reports = []
    for cfg in suite.scenarios:
        overrides = {}
        if mode is not None:
            overrides["mode"] = mode
        if seed is not None:
            overrides["seed"] = seed
        if trials is not None:
            overrides["trials"] = trials
        if overrides:
            cfg = ScenarioConfig(**{**{k: getattr(cfg, k) for k in cfg.__dataclass_fields__}, **overrides})
        reports.append(run_scenario(cfg))
    return SuiteReport(suite, reports)
