"""Transcript binding and key-schedule derivation.

The schedule is HKDF-SHA256: one extract with the transcript digest as salt
and the DH secret as input keying material, then five expansions under the
labels ``adhoc1``, ``adhoc2``, ``adhoc3``, ``sess`` and ``sas``.  The SAS is
the first 16 bits of the ``sas`` expansion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

from voicekex import symbolic as sym
from voicekex.crypto import SCHEDULE_LABELS, Backend, ConcreteBackend, KeySchedule
from voicekex.frames import Message, encode_message

__all__ = [
    "KeySchedule",
    "SCHEDULE_LABELS",
    "Transcript",
    "derive_schedule",
    "message_entry",
    "transcript_digest",
]

_CONCRETE = ConcreteBackend(guard_nonce_reuse=False)


def message_entry(backend: Backend, m: Message) -> Any:
    """Transcript entry for ``m`` in the backend's canonical form."""
    if not backend.symbolic:
        return encode_message(m)
    return message_term(backend, m)


def message_term(backend: Backend, m: Message) -> sym.Term:
    fields: list[Any]
    if hasattr(m, "r"):
        fields = [backend.lift(m.r.to_bytes(8, "big"))]
    elif hasattr(m, "code"):
        fields = [backend.lift(bytes([int(m.code)]))]
    elif hasattr(m, "pub"):
        fields = [m.pub, m.salt]
    elif hasattr(m, "c"):
        fields = [m.c]
    else:
        fields = [m.ct]
    return sym.chain([sym.Atom(f"tag:{int(m.tag)}"), *fields])


@dataclass(frozen=True)
class Transcript:
    """Append-only record of canonical message encodings."""

    entries: tuple = field(default_factory=tuple)

    def append(self, entry: Any) -> "Transcript":
        return Transcript(self.entries + (entry,))

    def __len__(self) -> int:
        return len(self.entries)


def transcript_digest(t: Transcript | Sequence[bytes], backend: Backend = _CONCRETE) -> Any:
    """Order-sensitive digest over the length-prefixed transcript entries."""
    entries = t.entries if isinstance(t, Transcript) else tuple(t)
    if not entries:
        raise ValueError("transcript is empty")
    return backend.transcript_hash(entries)


def derive_schedule(z: Any, td: Any, backend: Backend = _CONCRETE) -> KeySchedule:
    return backend.derive_schedule(z, td)
