"""Golden-vector files for cross-implementation checks.

All files are plain text: ``#`` comments, then one vector per line as
space-separated ``name=hex`` fields.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

from voicekex.crypto import ConcreteBackend
from voicekex.frames import Abort, Commit, EncIdI, EncIdR, KeyShareI, KeyShareR, RoleNonce, SasCtl, crc16_ccitt_false, encode_frame, encode_message
from voicekex.sas import SAS_MAX, WordList, default_wordlist, render_digits, render_words

VECTOR_FILES = ("kdf.txt", "transcript.txt", "crc.txt", "frames.txt", "sas_digits.txt", "sas_words.txt")


def _h(label: str, i: int, n: int = 32) -> bytes:
    return hashlib.sha256(f"{label}:{i}".encode()).digest()[:n]


def kdf_lines(count: int = 8) -> list[str]:
    be = ConcreteBackend(guard_nonce_reuse=False)
    lines = ["# z td -> k1 k2 k3 sess sas (sas as 4 hex digits)"]
    for i in range(count):
        z, td = _h("z", i), _h("td", i)
        ks = be.derive_schedule(z, td)
        lines.append(
            f"z={z.hex()} td={td.hex()} k1={ks.k1.hex()} k2={ks.k2.hex()} k3={ks.k3.hex()} "
            f"sess={ks.session_key.hex()} sas={ks.sas:04x}"
        )
    return lines


def reference_messages() -> list:
    return [
        RoleNonce(0x0123456789ABCDEF),
        Commit(_h("commit", 0)),
        KeyShareR(_h("pub", 1), _h("salt", 1, 16)),
        KeyShareI(_h("pub", 2), _h("salt", 2, 16)),
        EncIdI(_h("ct", 3) * 3),
        EncIdR(_h("ct", 4) * 3),
        SasCtl(_h("ct", 5)[:22]),
        Abort(4),
    ]


def transcript_lines() -> list[str]:
    be = ConcreteBackend(guard_nonce_reuse=False)
    msgs = reference_messages()[:3]
    entries = [encode_message(m) for m in msgs]
    lines = ["# entries (tag||payload, length-prefixed when hashed) -> digest"]
    lines.append(" ".join(f"e{i}={e.hex()}" for i, e in enumerate(entries)) + f" digest={be.transcript_hash(entries).hex()}")
    return lines


def crc_lines() -> list[str]:
    inputs = [b"123456789", b"", b"\x00", b"\xff" * 4, bytes(range(32))]
    lines = ["# data -> CRC-16/CCITT-FALSE"]
    lines += [f"data={d.hex()} crc={crc16_ccitt_false(d):04x}" for d in inputs]
    return lines


def frame_lines() -> list[str]:
    lines = ["# tag session_id retransmit_count -> frame"]
    for i, m in enumerate(reference_messages()):
        sid, rc = 0xA1B2C3D4 ^ i, i % 3
        lines.append(f"tag={int(m.tag):02x} sid={sid:08x} rc={rc:02x} frame={encode_frame(m, sid, rc).hex()}")
    return lines


def sas_digit_lines() -> list[str]:
    return [f"{s:04x} {render_digits(s)}" for s in range(SAS_MAX + 1)]


def sas_word_lines(words: WordList | None = None) -> list[str]:
    words = words or default_wordlist()
    return [f"{s:04x} {' '.join(render_words(s, words))}" for s in range(SAS_MAX + 1)]


def emit_vectors(outdir: str | Path) -> list[Path]:
    """Write every vector file into ``outdir``; returns the paths written."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    contents = {
        "kdf.txt": kdf_lines(),
        "transcript.txt": transcript_lines(),
        "crc.txt": crc_lines(),
        "frames.txt": frame_lines(),
        "sas_digits.txt": sas_digit_lines(),
        "sas_words.txt": sas_word_lines(),
    }
    paths = []
    for name in VECTOR_FILES:
        path = out / name
        path.write_text("\n".join(contents[name]) + "\n", encoding="ascii")
        paths.append(path)
    return paths
