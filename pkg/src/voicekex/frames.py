"""Wire messages and the CRC-protected frame codec.

Frame layout (all integers big-endian)::

    tag:1 | session_id:4 | retransmit_count:1 | payload_len:2 | payload | crc:2

The CRC is CRC-16/CCITT-FALSE over every preceding byte.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from typing import Any, Union

HEADER_LEN = 8
CRC_LEN = 2
MIN_FRAME = HEADER_LEN + CRC_LEN
MAX_PAYLOAD = 0xFFFF


class AbortCode(enum.IntEnum):
    COMMIT_MISMATCH = 1
    AUTH_FAIL = 2
    RETRY_EXHAUSTED = 3
    SIG_INVALID = 4
    SAS_MISMATCH = 5
    POLICY_VIOLATION = 6


class Tag(enum.IntEnum):
    ROLE_NONCE = 0x01
    COMMIT = 0x02
    KEY_SHARE_R = 0x03
    KEY_SHARE_I = 0x04
    ENC_ID_I = 0x05
    ENC_ID_R = 0x06
    SAS_CTL = 0x07
    ABORT = 0x08


# Payload fields may hold bytes (concrete backend) or terms (symbolic backend).


@dataclass(frozen=True)
class RoleNonce:
    r: int
    tag = Tag.ROLE_NONCE


@dataclass(frozen=True)
class Commit:
    c: Any
    tag = Tag.COMMIT


@dataclass(frozen=True)
class KeyShareR:
    pub: Any
    salt: Any
    tag = Tag.KEY_SHARE_R


@dataclass(frozen=True)
class KeyShareI:
    pub: Any
    salt: Any
    tag = Tag.KEY_SHARE_I


@dataclass(frozen=True)
class EncIdI:
    ct: Any
    tag = Tag.ENC_ID_I


@dataclass(frozen=True)
class EncIdR:
    ct: Any
    tag = Tag.ENC_ID_R


@dataclass(frozen=True)
class SasCtl:
    ct: Any
    tag = Tag.SAS_CTL


@dataclass(frozen=True)
class Abort:
    code: int
    tag = Tag.ABORT


Message = Union[RoleNonce, Commit, KeyShareR, KeyShareI, EncIdI, EncIdR, SasCtl, Abort]


class CodecError(ValueError):
    """Frame rejected by the decoder; ``kind`` is BadCrc, BadLength or UnknownTag."""

    def __init__(self, kind: str, detail: str = "") -> None:
        super().__init__(f"{kind}: {detail}" if detail else kind)
        self.kind = kind


def _crc_table() -> list[int]:
    table = []
    for byte in range(256):
        crc = byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ 0x1021) if crc & 0x8000 else (crc << 1)
        table.append(crc & 0xFFFF)
    return table


_CRC_TABLE = _crc_table()


def crc16_ccitt_false(data: bytes, crc: int = 0xFFFF) -> int:
    table = _CRC_TABLE
    for b in data:
        crc = ((crc << 8) & 0xFFFF) ^ table[(crc >> 8) ^ b]
    return crc


def encode_payload(m: Message) -> bytes:
    if isinstance(m, RoleNonce):
        return m.r.to_bytes(8, "big")
    if isinstance(m, Commit):
        return _fixed(m.c, 32)
    if isinstance(m, (KeyShareR, KeyShareI)):
        return _fixed(m.pub, 32) + _fixed(m.salt, 16)
    if isinstance(m, (EncIdI, EncIdR, SasCtl)):
        return bytes(m.ct)
    if isinstance(m, Abort):
        return bytes([int(m.code)])
    raise TypeError(f"not a message: {m!r}")


def _fixed(value: Any, n: int) -> bytes:
    if not isinstance(value, (bytes, bytearray)) or len(value) != n:
        raise ValueError(f"expected {n}-byte field, got {value!r}")
    return bytes(value)


_FIXED_LEN = {
    Tag.ROLE_NONCE: 8,
    Tag.COMMIT: 32,
    Tag.KEY_SHARE_R: 48,
    Tag.KEY_SHARE_I: 48,
    Tag.ABORT: 1,
}


def decode_payload(tag: int, payload: bytes) -> Message:
    try:
        t = Tag(tag)
    except ValueError:
        raise CodecError("UnknownTag", f"0x{tag:02x}") from None
    want = _FIXED_LEN.get(t)
    if want is not None and len(payload) != want:
        raise CodecError("BadLength", f"{t.name} payload is {len(payload)} bytes, expected {want}")
    if t is Tag.ROLE_NONCE:
        return RoleNonce(int.from_bytes(payload, "big"))
    if t is Tag.COMMIT:
        return Commit(payload)
    if t is Tag.KEY_SHARE_R:
        return KeyShareR(payload[:32], payload[32:])
    if t is Tag.KEY_SHARE_I:
        return KeyShareI(payload[:32], payload[32:])
    if t is Tag.ENC_ID_I:
        return EncIdI(payload)
    if t is Tag.ENC_ID_R:
        return EncIdR(payload)
    if t is Tag.SAS_CTL:
        return SasCtl(payload)
    return Abort(payload[0])


def encode_message(m: Message) -> bytes:
    """Canonical transcript entry: tag byte followed by the payload."""
    return bytes([m.tag]) + encode_payload(m)


def encode_frame(m: Message, session_id: int, retransmit_count: int = 0) -> bytes:
    payload = encode_payload(m)
    if len(payload) > MAX_PAYLOAD:
        raise ValueError("payload too long")
    head = struct.pack(">BIBH", int(m.tag), session_id & 0xFFFFFFFF, min(retransmit_count, 255), len(payload))
    body = head + payload
    return body + crc16_ccitt_false(body).to_bytes(2, "big")


def decode_frame(b: bytes) -> tuple[Message, int, int]:
    b = bytes(b)
    if len(b) < MIN_FRAME:
        raise CodecError("BadLength", f"frame of {len(b)} bytes")
    if crc16_ccitt_false(b[:-2]) != int.from_bytes(b[-2:], "big"):
        raise CodecError("BadCrc")
    tag, session_id, rc, plen = struct.unpack_from(">BIBH", b)
    if HEADER_LEN + plen + CRC_LEN != len(b):
        raise CodecError("BadLength", f"declared {plen}, carried {len(b) - MIN_FRAME}")
    msg = decode_payload(tag, b[HEADER_LEN:-2])
    return msg, session_id, rc


def fix_crc(b: bytes) -> bytes:
    """Recompute the trailing CRC, as an active attacker would after editing."""
    body = bytes(b[:-2])
    return body + crc16_ccitt_false(body).to_bytes(2, "big")
