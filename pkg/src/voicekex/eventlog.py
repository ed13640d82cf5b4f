"""Newline-delimited JSON event logs for replaying an endpoint.

Each line is one event, e.g.::

    {"event": "FrameIn", "session_id": 17, "retransmit_count": 0,
     "message": {"tag": 3, "pub": {"hex": "..."}, "salt": {"hex": "..."}}}

Byte fields are hex encoded and symbolic terms use their s-expression form.
"""

from __future__ import annotations

import dataclasses
import json
from typing import Any, Iterable

from voicekex import symbolic as sym
from voicekex.frames import Abort, Commit, EncIdI, EncIdR, KeyShareI, KeyShareR, RoleNonce, SasCtl, Tag
from voicekex.protocol import FrameIn, Start, Timeout, UserSasRequest, UserSasResult
from voicekex.sas import VerificationOutcome

_MESSAGES = {cls.tag: cls for cls in (RoleNonce, Commit, KeyShareR, KeyShareI, EncIdI, EncIdR, SasCtl, Abort)}


def _value_to_json(v: Any) -> Any:
    if isinstance(v, (bytes, bytearray)):
        return {"hex": bytes(v).hex()}
    if isinstance(v, int):
        return v
    return {"term": sym.to_sexpr(v)}


def _value_from_json(v: Any) -> Any:
    if isinstance(v, int):
        return v
    if isinstance(v, dict) and "hex" in v:
        return bytes.fromhex(v["hex"])
    if isinstance(v, dict) and "term" in v:
        return sym.parse_sexpr(v["term"])
    raise ValueError(f"cannot decode field {v!r}")


def event_to_dict(ev: Any) -> dict:
    if isinstance(ev, FrameIn):
        m = ev.message
        msg = {"tag": int(m.tag)}
        for f in dataclasses.fields(m):
            msg[f.name] = _value_to_json(getattr(m, f.name))
        return {"event": "FrameIn", "session_id": ev.session_id, "retransmit_count": ev.retransmit_count, "message": msg}
    if isinstance(ev, Timeout):
        return {"event": "Timeout", "timer_id": ev.timer_id}
    if isinstance(ev, UserSasResult):
        return {"event": "UserSasResult", "outcome": ev.outcome.name}
    if isinstance(ev, (Start, UserSasRequest)):
        return {"event": type(ev).__name__}
    raise TypeError(f"unknown event {ev!r}")


def event_from_dict(d: dict) -> Any:
    kind = d.get("event")
    if kind == "Start":
        return Start()
    if kind == "UserSasRequest":
        return UserSasRequest()
    if kind == "Timeout":
        return Timeout(int(d["timer_id"]))
    if kind == "UserSasResult":
        return UserSasResult(VerificationOutcome[d["outcome"]])
    if kind == "FrameIn":
        raw = dict(d["message"])
        cls = _MESSAGES[Tag(raw.pop("tag"))]
        msg = cls(**{k: _value_from_json(v) for k, v in raw.items()})
        return FrameIn(msg, int(d["session_id"]), int(d.get("retransmit_count", 0)))
    raise ValueError(f"unknown event kind {kind!r}")


def dumps_events(events: Iterable[Any]) -> str:
    return "".join(json.dumps(event_to_dict(ev), sort_keys=True) + "\n" for ev in events)


def loads_events(text: str) -> list[Any]:
    return [event_from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]
